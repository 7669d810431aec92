"""
Generalized amplitude damping (GAD) channel.

Kraus operators, the temperature parametrization, enlarged n-qubit errors,
the beam-splitter derivation of the Kraus set, and entanglement-breaking
analysis for the single-qubit channel.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import comb, expit

from .linalg import SparseState, hermitian_eig

if TYPE_CHECKING:
    from .codes import QuantumCode


logger = logging.getLogger(__name__)

# Damping probability substituted for exact endpoints when an
# epsilon-independent image must stay nonzero
ENDPOINT_NEIGHBOR = 1e-9

DIGITS = (0, 1, 2, 3)


@dataclass(frozen=True)
class GadParams:
    """Channel point (gamma, epsilon) with p = 1 - epsilon."""
    gamma: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must be in [0, 1/2], got {self.epsilon}")

    @property
    def p(self) -> float:
        return 1.0 - self.epsilon

    @property
    def frame_gamma(self) -> float:
        """Gamma used for epsilon-independent images, moved off the endpoints."""
        return min(max(self.gamma, ENDPOINT_NEIGHBOR), 1.0 - ENDPOINT_NEIGHBOR)


@dataclass(frozen=True)
class TemperaturePoint:
    """Physical operating point: emission rate, time and hbar*omega/(k_B T)."""
    gamma0: float
    t: float
    hbar_omega_over_kbt: float = math.inf
    allow_infinite_temperature: bool = False

    def __post_init__(self):
        if self.gamma0 < 0 or self.t < 0 or self.hbar_omega_over_kbt < 0:
            raise ValueError("gamma0, t and hbar_omega_over_kbt must be non-negative")

    @property
    def n_thermal(self) -> float:
        """Planck occupation N_th = 1 / (exp(x) - 1)."""
        x = self.hbar_omega_over_kbt
        if math.isinf(x):
            return 0.0
        if x == 0.0:
            return math.inf
        return 1.0 / math.expm1(x)

    @property
    def epsilon(self) -> float:
        """epsilon = 1 - p = N_th / (2 N_th + 1) = 1 / (exp(x) + 1)."""
        return float(expit(-self.hbar_omega_over_kbt))


@dataclass(frozen=True)
class ErrorIndex:
    """Base-4 word selecting A0..A3 per qubit; weight counts non-A0 factors."""
    digits: Tuple[int, ...]

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        if any(d not in DIGITS for d in digits):
            raise ValueError(f"error digits must be in 0..3, got {digits}")
        object.__setattr__(self, "digits", digits)

    @classmethod
    def from_label(cls, label: str) -> "ErrorIndex":
        return cls(tuple(int(c) for c in label))

    @classmethod
    def identity(cls, n: int) -> "ErrorIndex":
        return cls((0,) * n)

    @classmethod
    def single(cls, n: int, qubit: int, digit: int) -> "ErrorIndex":
        digits = [0] * n
        digits[qubit] = digit
        return cls(tuple(digits))

    @property
    def n(self) -> int:
        return len(self.digits)

    @property
    def weight(self) -> int:
        return sum(1 for d in self.digits if d)

    @property
    def label(self) -> str:
        return "".join(str(d) for d in self.digits)

    @property
    def is_damping_only(self) -> bool:
        """True when no factor is an excitation-type operator (A2 or A3)."""
        return all(d <= 1 for d in self.digits)

    def __str__(self) -> str:
        return f"A{self.label}"


@dataclass(frozen=True, eq=False)
class KrausTables:
    """
    Per-digit action of the four single-qubit factors on a basis bit.

    ``factor[d, b]`` is the amplitude A_d picks up on |b>, ``target[d, b]``
    the bit it lands on. Every factor has one nonzero entry per column.
    """
    factor: np.ndarray
    target: np.ndarray = field(
        default_factory=lambda: np.array([[0, 1], [0, 0], [0, 1], [1, 1]], dtype=np.int64)
    )


def gad_tables(params: GadParams) -> KrausTables:
    p, u = params.p, 1.0 - params.gamma
    g = params.gamma
    factor = np.sqrt(np.array([
        [p, p * u],
        [0.0, p * g],
        [(1 - p) * u, 1 - p],
        [(1 - p) * g, 0.0],
    ]))
    return KrausTables(factor)


def shape_tables(gamma: float) -> KrausTables:
    """Epsilon-free tables: the GAD tables with the sqrt(p), sqrt(1-p) prefactors removed."""
    u = 1.0 - gamma
    factor = np.sqrt(np.array([[1.0, u], [0.0, gamma], [u, 1.0], [gamma, 0.0]]))
    return KrausTables(factor)


def kraus_operators(gamma: float, p: float) -> Tuple[np.ndarray, ...]:
    """Kraus matrices for any (gamma, p) in [0, 1]^2."""
    if not (0.0 <= gamma <= 1.0 and 0.0 <= p <= 1.0):
        raise ValueError(f"gamma and p must lie in [0, 1], got ({gamma}, {p})")
    u = 1.0 - gamma
    a0 = math.sqrt(p) * np.diag([1.0, math.sqrt(u)]).astype(np.complex128)
    a1 = np.zeros((2, 2), dtype=np.complex128)
    a1[0, 1] = math.sqrt(p * gamma)
    a2 = math.sqrt(1 - p) * np.diag([math.sqrt(u), 1.0]).astype(np.complex128)
    a3 = np.zeros((2, 2), dtype=np.complex128)
    a3[1, 0] = math.sqrt((1 - p) * gamma)
    return a0, a1, a2, a3


def gad_kraus(params: GadParams) -> Tuple[np.ndarray, ...]:
    """
    The four GAD Kraus matrices (A0, A1, A2, A3).

    Args:
        params: Channel point

    Returns:
        Tuple of 2x2 complex arrays
    """
    return kraus_operators(params.gamma, params.p)


def params_from_temperature(tp: TemperaturePoint) -> GadParams:
    """
    Convert a physical operating point to (gamma, epsilon).

    gamma = 1 - exp(-gamma0 t / (1 - 2 epsilon)), the time-integrated damping
    at occupation N_th.

    Raises:
        ValueError: For infinite temperature with t > 0 unless explicitly allowed
    """
    eps = tp.epsilon
    rate_time = tp.gamma0 * tp.t
    if tp.hbar_omega_over_kbt == 0.0:
        if rate_time > 0 and not tp.allow_infinite_temperature:
            raise ValueError("infinite temperature (epsilon = 1/2) requires allow_infinite_temperature=True")
        return GadParams(1.0 if rate_time > 0 else 0.0, 0.5)
    gamma = -math.expm1(-rate_time / (1.0 - 2.0 * eps))
    return GadParams(gamma, eps)


def _bit_matrix(indices: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.asarray(indices, dtype=np.int64)[..., None] >> shifts) & 1


def apply_errors_batch(
    digits: np.ndarray,
    bits: np.ndarray,
    amplitudes: np.ndarray,
    tables: KrausTables,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Apply a batch of enlarged errors to a batch of basis terms.

    Args:
        digits: (E, n) error words
        bits: (T, n) bit matrix of the input basis terms
        amplitudes: (T,) input amplitudes
        tables: Kraus tables at the current channel point

    Returns:
        (indices, amplitudes), each of shape (E, T); dead terms carry amplitude 0
    """
    digits = np.atleast_2d(digits)
    n = bits.shape[1]
    weights = np.int64(1) << np.arange(n - 1, -1, -1, dtype=np.int64)
    factors = tables.factor[digits[:, None, :], bits[None, :, :]]
    targets = tables.target[digits[:, None, :], bits[None, :, :]]
    return targets @ weights, np.prod(factors, axis=2) * amplitudes[None, :]


def apply_enlarged_error(
    err: ErrorIndex,
    params: GadParams,
    state: SparseState,
    tables: Optional[KrausTables] = None,
) -> SparseState:
    """
    Apply A_{d1} x ... x A_{dn} to a sparse n-qubit state.

    Each basis term maps to at most one term, so no dense operator is built.

    Args:
        err: Enlarged error word
        params: Channel point
        state: Input state of dimension 2^n
        tables: Optional precomputed tables (overrides params)

    Returns:
        Corrupted state, possibly the zero state
    """
    if state.dim != 2 ** err.n:
        raise ValueError(f"error on {err.n} qubits cannot act on dim {state.dim}")
    tables = tables or gad_tables(params)
    bits = _bit_matrix(state.indices, err.n)
    idx, amp = apply_errors_batch(np.array([err.digits]), bits, state.amplitudes, tables)
    return SparseState(state.dim, idx[0], amp[0])


def iter_error_digits(n: int, weight: int, allowed: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    """Weight-q words: positions in lexicographic order, then digit choices."""
    for positions in itertools.combinations(range(n), weight):
        for choice in itertools.product(allowed, repeat=weight):
            digits = [0] * n
            for pos, d in zip(positions, choice):
                digits[pos] = d
            yield tuple(digits)


def enumerate_errors(n: int, max_weight: int, allowed: Sequence[int] = (1, 2, 3)) -> Iterator[ErrorIndex]:
    """
    Enumerate enlarged errors in weight-major, lexicographic order.

    Args:
        n: Qubit count
        max_weight: Largest weight to include
        allowed: Nonzero digits permitted on the damaged qubits

    Returns:
        Iterator of ErrorIndex, each word exactly once
    """
    if not 0 <= max_weight <= n:
        raise ValueError(f"max_weight must be in [0, {n}], got {max_weight}")
    allowed = tuple(sorted(set(allowed)))
    if any(d not in (1, 2, 3) for d in allowed):
        raise ValueError(f"allowed digits must be a subset of {{1, 2, 3}}, got {allowed}")
    for weight in range(max_weight + 1):
        for digits in iter_error_digits(n, weight, allowed):
            yield ErrorIndex(digits)


def count_errors(n: int, max_weight: int, allowed: Sequence[int] = (1, 2, 3)) -> int:
    """Sum over q <= max_weight of |allowed|^q * C(n, q)."""
    k = len(set(allowed))
    return sum(k ** q * int(comb(n, q, exact=True)) for q in range(max_weight + 1))


def weight_distribution(code: "QuantumCode", params: GadParams) -> np.ndarray:
    """
    Probability that an error of each weight occurs, averaged over codewords.

    Every enlarged error is injective on the basis terms it does not kill,
    so ||A'|i>||^2 is a sum of per-term products and the weight-q total is
    the z^q coefficient of prod_qubits (w0 + z * (w1 + w2 + w3)).

    Returns:
        Array of length n + 1 summing to 1
    """
    w = gad_tables(params).factor ** 2
    keep, damage = w[0], w[1:].sum(axis=0)
    total = np.zeros(code.n + 1)
    for state in code.codewords:
        bits = _bit_matrix(state.indices, code.n)
        poly = np.zeros((state.nnz, code.n + 1))
        poly[:, 0] = 1.0
        for q in range(code.n):
            b = bits[:, q]
            shifted = np.zeros_like(poly)
            shifted[:, 1:] = poly[:, :-1]
            poly = poly * keep[b][:, None] + shifted * damage[b][:, None]
        total += np.abs(state.amplitudes) ** 2 @ poly
    return total / code.K


def weight_probability(code: "QuantumCode", params: GadParams, q: int) -> float:
    """Total probability of weight-q errors, (1/K) sum_i sum_{wt(a)=q} ||A'_a|i_L>||^2."""
    if not 0 <= q <= code.n:
        raise ValueError(f"weight must be in [0, {code.n}], got {q}")
    return float(weight_distribution(code, params)[q])


def mode_operators(n_truncation: int) -> Tuple[np.ndarray, np.ndarray]:
    """Annihilation operators a (system) and b (environment) on a truncated two-mode Fock space."""
    if n_truncation < 2:
        raise ValueError(f"n_truncation must be at least 2, got {n_truncation}")
    single = np.diag(np.sqrt(np.arange(1, n_truncation, dtype=float)), k=1)
    eye = np.eye(n_truncation)
    return np.kron(single, eye), np.kron(eye, single)


def beam_splitter_unitary(chi: float, n_truncation: int = 4) -> np.ndarray:
    """U = exp(chi (a^dag b - b^dag a)) on the truncated Fock space."""
    a, b = mode_operators(n_truncation)
    return expm(chi * (a.T @ b - b.T @ a))


def _phase_normalized(m: np.ndarray) -> np.ndarray:
    flat = m.ravel()
    pivot = flat[np.argmax(np.abs(flat))]
    if abs(pivot) == 0.0:
        return m
    return m * (abs(pivot) / pivot)


def beam_splitter_kraus(chi: float, p: float, n_truncation: int = 4) -> Tuple[np.ndarray, ...]:
    """
    Kraus operators from photon scattering at a beam splitter.

    A_{jk} = sqrt(q_j) <k|U|j> with the environment mode starting in |j>
    (q_0 = p, q_1 = 1 - p). The generator is restricted to the block with at
    most one photon per mode before exponentiating, so |11> stays invariant.

    Args:
        chi: Beam-splitter angle; gamma = sin(chi)^2
        p: Probability the environment starts empty
        n_truncation: Fock levels per mode (>= 2)

    Returns:
        (A0, A1, A2, A3) relabelled from (A00, A01, A11, A10), each phase
        normalized so its largest entry is real positive
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    a, b = mode_operators(n_truncation)
    generator = a.T @ b - b.T @ a
    block = [sa * n_truncation + se for sa in (0, 1) for se in (0, 1)]
    u_block = expm(chi * generator[np.ix_(block, block)])
    # u_block[(s', k), (s, j)] with flattened index 2*s + e
    u4 = u_block.reshape(2, 2, 2, 2)

    def extract(j: int, k: int) -> np.ndarray:
        weight = p if j == 0 else 1.0 - p
        return _phase_normalized(math.sqrt(weight) * u4[:, k, :, j].astype(np.complex128))

    return extract(0, 0), extract(0, 1), extract(1, 1), extract(1, 0)


def concurrence_gad(gamma: float, p: float) -> float:
    """Concurrence of (GAD x I) applied to a Bell state: max(0, sqrt(1-g) - g sqrt(p(1-p)))."""
    return max(0.0, math.sqrt(1.0 - gamma) - gamma * math.sqrt(p * (1.0 - p)))


def ppt_eigenvalues(gamma: float, p: float) -> Tuple[float, float, float, float]:
    """Closed-form eigenvalues of the partial transpose; lambda_3 is the one that can go negative."""
    lam1 = 0.5 * gamma * p + 0.5 * (1.0 - gamma)
    lam2 = 0.5 * (1.0 - p * gamma)
    root = 0.5 * math.sqrt(0.25 * gamma ** 2 - gamma - p * gamma ** 2 + p ** 2 * gamma ** 2 + 1.0)
    return lam1, lam2, 0.25 * gamma - root, 0.25 * gamma + root


def choi_state(gamma: float, p: float) -> np.ndarray:
    """(GAD x I)(|b><b|) for the Bell state |b> = (|00> + |11>)/sqrt(2)."""
    bell = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
    rho = np.outer(bell, bell)
    rho_out = np.zeros((4, 4), dtype=np.complex128)
    for k in kraus_operators(gamma, p):
        op = np.kron(k, np.eye(2))
        rho_out += op @ rho @ op.conj().T
    return rho_out


def partial_transpose(rho: np.ndarray) -> np.ndarray:
    """Transpose the second qubit of a two-qubit density matrix."""
    return rho.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


def ppt_eigenvalues_numeric(gamma: float, p: float) -> np.ndarray:
    """Eigenvalues of the partial-transposed output, ascending."""
    values, _ = hermitian_eig(partial_transpose(choi_state(gamma, p)))
    return values[::-1].real


def entanglement_breaking_region(gamma: float) -> Optional[Tuple[float, float]]:
    """
    Interval [p_min, p_max] on which the channel breaks entanglement.

    Returns:
        (p_min, p_max), or None when gamma^4 + 4 gamma^3 - 4 gamma^2 < 0
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    disc = gamma ** 4 + 4 * gamma ** 3 - 4 * gamma ** 2
    if gamma == 0.0 or disc < 0.0:
        return None
    half_root = 0.5 * math.sqrt(disc)
    g2 = gamma ** 2
    return (0.5 * g2 - half_root) / g2, (0.5 * g2 + half_root) / g2


def scan_entanglement_breaking(
    gammas: Sequence[float],
    ps: Sequence[float],
    tol: float = 1e-12,
) -> List[Dict[str, object]]:
    """
    Concurrence and PPT test on every (gamma, p) cell.

    Both tests share ``tol``: the concurrence counts as zero and the
    eigenvalue as nonnegative within it, so boundary cells agree.

    Returns:
        One row per cell with region bounds, concurrence, smallest PPT
        eigenvalue, a separable flag and whether both tests agree
    """
    rows = []
    for gamma in gammas:
        region = entanglement_breaking_region(gamma)
        for p in ps:
            conc = concurrence_gad(gamma, p)
            min_eig = float(ppt_eigenvalues_numeric(gamma, p)[0])
            separable = min_eig >= -tol
            consistent = separable == (conc <= tol)
            if not consistent:
                logger.warning(f"PPT and concurrence disagree at gamma={gamma}, p={p}")
            rows.append({
                "gamma": gamma,
                "p": p,
                "p_min": region[0] if region else None,
                "p_max": region[1] if region else None,
                "concurrence": conc,
                "min_ppt_eigenvalue": min_eig,
                "separable": separable,
                "consistent": consistent,
            })
    return rows
