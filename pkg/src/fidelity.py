"""
Entanglement fidelity of a code under GAD noise and a recovery.

The exact evaluator composes recovery and channel and sums
(1/K^2) sum_k sum_l |Tr(R_l A'_k P_C)|^2 over enlarged errors in
weight-major, lexicographic order. The scheme estimator reproduces the
per-operator accounting behind the analytic estimates.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from .channel import (
    ErrorIndex,
    GadParams,
    _bit_matrix,
    apply_errors_batch,
    gad_kraus,
    gad_tables,
    iter_error_digits,
    weight_distribution,
)
from .codes import QuantumCode
from .recovery import CorrectableSet, RecoverySet, build_recovery, corrupted_images, default_correctable_set
from .utils import parse_eps_rule


logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9

# Target size of one (errors x codeword terms) batch
CHUNK_TERMS = 1 << 18

MaxWeight = Union[int, str, None]


@dataclass
class FidelityResult:
    """Fidelity value with per-weight contributions and the truncation remainder."""
    value: float
    per_weight: List[Tuple[int, float]]
    remainder_bound: float
    max_weight: int
    mode: str = "full"
    estimator: str = "exact"
    code_name: str = ""
    params: Optional[GadParams] = None

    def __post_init__(self):
        if any(c < -BOUND_SLACK for _, c in self.per_weight):
            raise ValueError(f"negative fidelity contribution in {self.per_weight}")
        if self.value + self.remainder_bound > 1.0 + BOUND_SLACK:
            raise ValueError(
                f"fidelity {self.value!r} plus remainder {self.remainder_bound!r} exceeds 1"
            )


def resolve_max_weight(code: QuantumCode, max_weight: MaxWeight) -> int:
    """None means min(n, 4); "full" means n."""
    if max_weight is None:
        return min(code.n, 4)
    if max_weight == "full":
        return code.n
    max_weight = int(max_weight)
    if not 0 <= max_weight <= code.n:
        raise ValueError(f"max_weight must be in [0, {code.n}] or 'full', got {max_weight}")
    return max_weight


def _allowed_digits(params: GadParams) -> Tuple[int, ...]:
    """Digits whose factor is not identically zero at this point."""
    factor = gad_tables(params).factor
    return tuple(d for d in (1, 2, 3) if np.any(factor[d] != 0.0))


class FidelityEvaluator:
    """
    Batched evaluation of the composed channel for one code and recovery.

    For a chunk of errors the corrupted codewords form a sparse (dim, E*K)
    matrix S; S^T conj(frame) gives every <frame column|A'|i_L> at once, and
    the complement term is <i|A'|i> minus its projection on the frame span.
    """

    def __init__(
        self,
        code: QuantumCode,
        recovery: RecoverySet,
        params: GadParams,
        threads: int = 1,
        logger: Optional[logging.Logger] = None,
    ):
        if recovery.params != params:
            raise ValueError(
                f"recovery was built at {recovery.params}, fidelity requested at {params}"
            )
        if recovery.code_name != code.name:
            raise ValueError(f"recovery belongs to {recovery.code_name}, not {code.name}")
        self.code = code
        self.recovery = recovery
        self.params = params
        self.threads = max(1, int(threads))
        self.logger = logger or logging.getLogger(__name__)
        self.tables = gad_tables(params)

        K = code.K
        self._term_bits = np.concatenate([_bit_matrix(w.indices, code.n) for w in code.codewords])
        self._term_amp = np.concatenate([w.amplitudes for w in code.codewords])
        self._term_word = np.concatenate([np.full(w.nnz, i) for i, w in enumerate(code.codewords)])
        self._codeword_matrix = np.column_stack([w.to_dense() for w in code.codewords])

        self._frame_conj = recovery.frame.conj()
        m = recovery.frame.shape[1]
        columns = recovery.column_map()
        r_idx, i_idx = np.nonzero(columns >= 0)
        # selection[(i * m + column), r] = 1 picks <frame column (r, i)|A'|i_L>
        self._selection = sparse.csr_matrix(
            (np.ones(r_idx.size), (i_idx * m + columns[r_idx, i_idx], r_idx)),
            shape=(K * m, len(recovery.operators)),
        )
        self._range_conj = recovery.range_basis.conj()
        self._range_codewords = recovery.range_basis.conj().T @ self._codeword_matrix
        self._same_basis = recovery.kind == "knill-laflamme"
        self.chunk_size = max(1, CHUNK_TERMS // max(1, self._term_amp.size))

    def _images(self, digits: np.ndarray) -> sparse.csr_matrix:
        count = digits.shape[0]
        idx, amp = apply_errors_batch(digits, self._term_bits, self._term_amp, self.tables)
        cols = np.arange(count)[:, None] * self.code.K + self._term_word[None, :]
        return sparse.csr_matrix(
            (amp.ravel(), (idx.ravel(), cols.ravel())),
            shape=(self.code.dim, count * self.code.K),
        )

    def _ohat_traces(self, s: sparse.csr_matrix, frame_overlaps: np.ndarray, count: int) -> np.ndarray:
        K = self.code.K
        diag = np.einsum("eii->ei", (s.T @ self._codeword_matrix.conj()).reshape(count, K, K))
        overlaps = frame_overlaps if self._same_basis else np.asarray(s.T @ self._range_conj)
        overlaps = overlaps.reshape(count, K, -1)
        projected = np.einsum("eik,ki->ei", overlaps, self._range_codewords.conj())
        return np.sum(diag - projected, axis=1)

    def contributions(self, digits: np.ndarray) -> np.ndarray:
        """Per-error fidelity contributions for an (E, n) block of error words."""
        digits = np.atleast_2d(np.asarray(digits, dtype=np.int64))
        count, K = digits.shape[0], self.code.K
        s = self._images(digits)
        frame_overlaps = np.asarray(s.T @ self._frame_conj)
        traces = np.asarray(self._selection.T @ frame_overlaps.reshape(count, -1).T).T
        ohat = self._ohat_traces(s, frame_overlaps, count)
        return (np.sum(np.abs(traces) ** 2, axis=1) + np.abs(ohat) ** 2) / K ** 2

    def ohat_term(self, error: ErrorIndex) -> float:
        """(1/K^2) |sum_i <i_L|O-hat A'|i_L>|^2 for one error."""
        digits = np.array([error.digits], dtype=np.int64)
        s = self._images(digits)
        frame_overlaps = np.asarray(s.T @ self._frame_conj)
        ohat = self._ohat_traces(s, frame_overlaps, 1)[0]
        return float(abs(ohat) ** 2 / self.code.K ** 2)

    def _chunks(self, weight: int, allowed: Sequence[int]) -> Iterator[np.ndarray]:
        block: List[Tuple[int, ...]] = []
        for digits in iter_error_digits(self.code.n, weight, allowed):
            block.append(digits)
            if len(block) == self.chunk_size:
                yield np.array(block, dtype=np.int64)
                block = []
        if block:
            yield np.array(block, dtype=np.int64)

    def weight_contribution(self, weight: int, allowed: Sequence[int]) -> float:
        """Sum of contributions of all weight-q errors, reduced in chunk order."""
        if weight == 0:
            chunks = [np.zeros((1, self.code.n), dtype=np.int64)]
        else:
            chunks = list(self._chunks(weight, allowed))
        if self.threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                partials = list(pool.map(lambda c: math.fsum(self.contributions(c)), chunks))
        else:
            partials = [math.fsum(self.contributions(c)) for c in chunks]
        self.logger.debug(f"{self.code.name}: weight {weight} summed over {len(chunks)} chunks")
        return math.fsum(partials)

    def evaluate(self, max_weight: MaxWeight = None) -> FidelityResult:
        top = resolve_max_weight(self.code, max_weight)
        allowed = _allowed_digits(self.params)
        per_weight = [
            (q, self.weight_contribution(q, allowed) if (q == 0 or allowed) else 0.0)
            for q in range(top + 1)
        ]
        distribution = weight_distribution(self.code, self.params)
        remainder = float(math.fsum(distribution[top + 1:]))
        value = math.fsum(c for _, c in per_weight)
        return FidelityResult(
            value=min(value, 1.0),
            per_weight=per_weight,
            remainder_bound=remainder,
            max_weight=top,
            mode="full" if top == self.code.n else f"truncated({top})",
            estimator="exact",
            code_name=self.code.name,
            params=self.params,
        )


def entanglement_fidelity(
    code: QuantumCode,
    recovery: RecoverySet,
    params: GadParams,
    max_weight: MaxWeight = None,
    threads: int = 1,
) -> FidelityResult:
    """
    Entanglement fidelity of the recovered channel, summed up to ``max_weight``.

    Args:
        code: Code
        recovery: Recovery built at ``params``
        params: Channel point
        max_weight: Largest error weight summed; None for min(n, 4), "full" for n
        threads: Worker threads for the chunked summation

    Returns:
        FidelityResult; remainder_bound is the probability of the omitted weights

    Raises:
        ValueError: If the recovery was built at a different channel point
    """
    return FidelityEvaluator(code, recovery, params, threads).evaluate(max_weight)


def scheme_fidelity(code: QuantumCode, correctable: CorrectableSet, params: GadParams) -> FidelityResult:
    """
    Per-operator accounting estimate of the fidelity.

    Each error of ``correctable.scheme_operators()`` counts as fully
    recovered, (sum_i ||A'_r|i_L>||)^2; weight-1 errors outside that list
    contribute only through their overlaps with its normalized images.
    Self-overlap exclusions are credited here as in the published operator
    count, so the estimate exceeds what any recovery can reach for them.
    """
    tables = gad_tables(params)
    accepted = correctable.scheme_operators()
    images = corrupted_images(code, accepted, tables)
    norms = np.linalg.norm(images, axis=2)
    unit = np.divide(images, norms[..., None], out=np.zeros_like(images), where=norms[..., None] > 0)

    weights = np.array([e.weight for e in accepted])
    recovered = np.sum(norms, axis=1) ** 2
    per_weight = {int(q): math.fsum(recovered[weights == q]) for q in np.unique(weights)}

    labels = {e.label for e in accepted}
    leaked = [
        ErrorIndex(d)
        for d in iter_error_digits(code.n, 1, _allowed_digits(params))
        if ErrorIndex(d).label not in labels
    ]
    if leaked:
        others = corrupted_images(code, leaked, tables)
        overlaps = np.einsum("rid,aid->ra", unit.conj(), others)
        per_weight[1] = per_weight.get(1, 0.0) + math.fsum(np.abs(overlaps.ravel()) ** 2)

    K2 = code.K ** 2
    top = max(1, int(weights.max(initial=0)))
    rows = [(q, per_weight.get(q, 0.0) / K2) for q in range(top + 1)]
    remainder = float(math.fsum(weight_distribution(code, params)[top + 1:]))
    value = math.fsum(c for _, c in rows)
    return FidelityResult(
        value=min(value, 1.0),
        per_weight=rows,
        remainder_bound=min(remainder, max(0.0, 1.0 - min(value, 1.0))),
        max_weight=top,
        mode="scheme",
        estimator="scheme",
        code_name=code.name,
        params=params,
    )


def fidelity_no_qec(params: GadParams, n_qubits: int) -> float:
    """
    Entanglement fidelity of n unprotected qubits.

    The trace of a tensor product factorizes, so sum_k |Tr A_k|^2 over the
    n-fold channel is the n-th power of the single-qubit sum.
    """
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be positive, got {n_qubits}")
    single = math.fsum(abs(np.trace(a)) ** 2 for a in gad_kraus(params)) / 4.0
    return float(single ** n_qubits)


def normalized_fidelity(f: float, K: int) -> float:
    """f ** (1 / log2 K), for comparing codes that encode different amounts."""
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must lie in [0, 1], got {f}")
    if K < 2:
        raise ValueError(f"K must be at least 2, got {K}")
    return float(f ** (1.0 / math.log2(K)))


def ohat_contribution(code: QuantumCode, recovery: RecoverySet, error: ErrorIndex, params: GadParams) -> float:
    """Single-error complement term (1/K^2) |sum_i <i_L|O-hat A'|i_L>|^2."""
    return FidelityEvaluator(code, recovery, params).ohat_term(error)


def ohat_bound(code: QuantumCode, error: ErrorIndex, params: GadParams) -> float:
    """Cauchy-Schwarz bound (1/K) sum_i ||A'|i_L>||^2 on the complement term."""
    images = corrupted_images(code, [error], gad_tables(params))[0]
    return float(np.sum(np.abs(images) ** 2) / code.K)


EpsilonRule = Callable[[float], float]


@dataclass
class SweepGrid:
    """
    Channel points of a sweep.

    With ``gamma_factor`` unset the values are damping probabilities and
    ``eps_rule`` maps each to epsilon. With ``gamma_factor`` = c the values
    are epsilons and gamma = c * epsilon (temperature sweep).
    """
    values: List[float]
    eps_rule: str = "fixed:0"
    gamma_factor: Optional[float] = None
    _rule: EpsilonRule = field(init=False, repr=False)

    def __post_init__(self):
        if not self.values:
            raise ValueError("sweep grid is empty")
        self._rule = parse_eps_rule(self.eps_rule)
        for gamma, eps in self.points():
            GadParams(gamma, eps)

    def points(self) -> List[Tuple[float, float]]:
        if self.gamma_factor is not None:
            return [(self.gamma_factor * e, e) for e in self.values]
        return [(g, self._rule(g)) for g in self.values]


@dataclass
class SweepRow:
    code: str
    gamma: float
    epsilon: float
    max_weight: int
    fidelity: float
    remainder_bound: float
    estimator: str = "exact"


def run_sweep(
    code: QuantumCode,
    grid: SweepGrid,
    max_weight: MaxWeight = None,
    estimator: str = "exact",
    correctable: Optional[CorrectableSet] = None,
    threads: int = 1,
    progress: Optional[Callable[[], None]] = None,
) -> List[SweepRow]:
    """
    Evaluate the fidelity over a grid, rebuilding the recovery at every point.

    Args:
        code: Code
        grid: Channel points
        max_weight: Truncation for the exact estimator
        estimator: "exact" or "scheme"
        correctable: Accepted errors; defaults to the code's correctable set
        threads: Worker threads per point
        progress: Called once per finished point

    Returns:
        Rows in grid order
    """
    if estimator not in ("exact", "scheme"):
        raise ValueError(f"Unknown estimator: {estimator}")
    correctable = correctable or default_correctable_set(code)
    rows = []
    for point, (gamma, eps) in enumerate(grid.points()):
        params = GadParams(gamma, eps)
        if gamma in (0.0, 1.0):
            logger.warning(f"{code.name}: gamma={gamma:g} uses the neighbouring frame gamma={params.frame_gamma:g}")
        if estimator == "exact":
            recovery = build_recovery(code, correctable, params, validate=point == 0)
            result = entanglement_fidelity(code, recovery, params, max_weight, threads)
        else:
            result = scheme_fidelity(code, correctable, params)
        rows.append(SweepRow(code.name, gamma, eps, result.max_weight, result.value, result.remainder_bound, estimator))
        if progress:
            progress()
    logger.info(f"Sweep of {code.name} ({estimator}) finished: {len(rows)} points")
    return rows
