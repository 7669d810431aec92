"""
Code registry.
Stabilizer and nonadditive codes, graph-state construction and the
structural checks run against every registered code.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from .linalg import SparseState, inner


logger = logging.getLogger(__name__)

ORTHONORMAL_TOL = 1e-12
STABILIZER_TOL = 1e-10


@dataclass(frozen=True)
class PauliString:
    """Signed tensor product of I, X, Y, Z; the first letter acts on qubit 1."""
    letters: str
    sign: int = 1

    def __post_init__(self):
        if set(self.letters) - set("IXYZ"):
            raise ValueError(f"invalid Pauli letters: {self.letters}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        """Parse strings like ``"-ZXIIXZ"`` or ``"+XXXX"``."""
        text = text.strip()
        sign = -1 if text.startswith("-") else 1
        return cls(text.lstrip("+-"), sign)

    @property
    def n(self) -> int:
        return len(self.letters)

    def _mask(self, letters: str) -> int:
        mask = 0
        for q, letter in enumerate(self.letters):
            if letter in letters:
                mask |= 1 << (self.n - 1 - q)
        return mask

    def apply(self, state: SparseState) -> SparseState:
        """
        Apply the Pauli string to a sparse state.

        X flips a bit, Z contributes (-1)^bit, Y does both with a factor i.
        """
        if state.dim != 2 ** self.n:
            raise ValueError(f"{self.n}-qubit Pauli cannot act on dim {state.dim}")
        flip = self._mask("XY")
        phase_mask = self._mask("ZY")
        n_y = self.letters.count("Y")
        parity = np.array([bin(int(i) & phase_mask).count("1") & 1 for i in state.indices], dtype=np.int64)
        phase = self.sign * (1j ** n_y) * (1 - 2 * parity)
        return SparseState(state.dim, state.indices ^ flip, state.amplitudes * phase)

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "") + self.letters


@dataclass(frozen=True, eq=False)
class GraphSpec:
    """Simple graph on n vertices given by a symmetric 0/1 adjacency matrix."""
    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=np.int64)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must have a zero diagonal")
        if np.any((adj != 0) & (adj != 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[Tuple[int, int]]) -> "GraphSpec":
        adj = np.zeros((n, n), dtype=np.int64)
        for a, b in edges:
            adj[a, b] = adj[b, a] = 1
        return cls(adj)

    @classmethod
    def loop(cls, n: int) -> "GraphSpec":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]


@dataclass
class QuantumCode:
    """A K-dimensional codespace of n qubits, given by its codewords."""
    name: str
    codewords: List[SparseState]
    stabilizer_generators: Tuple[PauliString, ...] = ()
    distance: Optional[int] = None
    damping_only: bool = False  # default correctable set targets T = 0 only
    description: str = ""

    def __post_init__(self):
        if not self.codewords:
            raise ValueError(f"{self.name}: a code needs at least one codeword")
        dims = {c.dim for c in self.codewords}
        if len(dims) != 1:
            raise ValueError(f"{self.name}: codewords have mixed dimensions {sorted(dims)}")
        if self.K > self.codewords[0].dim:
            raise ValueError(f"{self.name}: K exceeds 2^n")

    @property
    def n(self) -> int:
        return self.codewords[0].n_qubits

    @property
    def K(self) -> int:
        return len(self.codewords)

    @property
    def k(self) -> float:
        return math.log2(self.K)

    @property
    def dim(self) -> int:
        return self.codewords[0].dim

    @property
    def additive(self) -> bool:
        return bool(self.stabilizer_generators)

    def orthonormality_error(self) -> float:
        """Largest deviation of <i_L|j_L> from delta_ij."""
        worst = 0.0
        for i, a in enumerate(self.codewords):
            for j, b in enumerate(self.codewords[i:], start=i):
                worst = max(worst, abs(inner(a, b) - (1.0 if i == j else 0.0)))
        return worst

    def label(self) -> str:
        if self.additive:
            d = f",{self.distance}" if self.distance else ""
            return f"[[{self.n},{int(round(self.k))}{d}]]"
        d = f",{self.distance}" if self.distance else ""
        return f"(({self.n},{self.K}{d}))"


def _signed(kets: Sequence[str], scale: float) -> SparseState:
    """Codeword from '+/-' prefixed ket strings sharing one amplitude magnitude."""
    terms = {}
    for ket in kets:
        sign = -1.0 if ket.startswith("-") else 1.0
        terms[ket.lstrip("+-")] = sign * scale
    return SparseState.from_kets(terms)


def _complement(bits: str) -> str:
    return bits.translate(str.maketrans("01", "10"))


def _self_complementary(strings: Sequence[str]) -> List[SparseState]:
    return [_signed([a, _complement(a)], 1 / math.sqrt(2)) for a in strings]


def _generators(*texts: str) -> Tuple[PauliString, ...]:
    return tuple(PauliString.parse(t) for t in texts)


def _five_qubit() -> QuantumCode:
    s = 1 / math.sqrt(8)
    zero = _signed(["-00000", "01111", "-10011", "11100", "00110", "01001", "10101", "11010"], s)
    one = _signed(["-11111", "10000", "01100", "-00011", "11001", "10110", "-01010", "-00101"], s)
    return QuantumCode(
        "five_qubit", [zero, one],
        _generators("ZZYYI", "IYYXX", "-YIZYX", "IZZZZ"),
        distance=3, description="Perfect five-qubit code, saturates the quantum Hamming bound",
    )


def _css_seven() -> QuantumCode:
    s = 1 / math.sqrt(8)
    zero = _signed(["0000000", "0110011", "1010101", "1100110", "0001111", "0111100", "1011010", "1101001"], s)
    one = SparseState.from_kets({_complement(b): s for b in zero.bitstrings()})
    return QuantumCode(
        "css_seven", [zero, one],
        _generators("IIIXXXX", "IXXIIXX", "XIXIXIX", "IIIZZZZ", "IZZIIZZ", "ZIZIZIZ"),
        distance=3, description="CSS seven-qubit code built on the [7,4] Hamming code",
    )


# The displayed |1_L> of the six-qubit code contains the seven-character ket
# 1000010; the single-deletion candidates are resolved by the stabilizer.
SIX_QUBIT_TYPO = "1000010"
_SIX_ZERO = ["000000", "-100111", "001111", "-101000", "-010010", "110101", "011101", "-111010"]
_SIX_ONE_TEMPLATE = ["001010", "101101", "000101", None, "-011000", "-111111", "010111", "110000"]
_SIX_GENERATORS = ("YIZXXY", "-ZXIIXZ", "IZXXXX", "IIIZIZ", "ZZZIZI")


def six_qubit_typo_candidates(typo: str = SIX_QUBIT_TYPO) -> List[str]:
    """Distinct strings obtained by deleting one character of the malformed ket."""
    seen: List[str] = []
    for pos in range(len(typo)):
        candidate = typo[:pos] + typo[pos + 1:]
        if candidate not in seen:
            seen.append(candidate)
    return seen


def _six_qubit_codewords(ket: str) -> List[SparseState]:
    s = 1 / math.sqrt(8)
    one = [ket if k is None else k for k in _SIX_ONE_TEMPLATE]
    return [_signed(_SIX_ZERO, s), _signed(one, s)]


def resolve_six_qubit_ket() -> str:
    """
    Pick the deletion of the malformed ket that yields a valid codespace.

    Raises:
        ValueError: Unless exactly one candidate is orthogonal to |0_L> and
            fixed by every generator
    """
    generators = _generators(*_SIX_GENERATORS)
    passing = []
    for candidate in six_qubit_typo_candidates():
        try:
            zero, one = _six_qubit_codewords(candidate)
        except ValueError:
            continue
        if one.norm() < 0.99 or abs(inner(zero, one)) > ORTHONORMAL_TOL:
            continue
        if all((g.apply(c) - c).norm() < STABILIZER_TOL for g in generators for c in (zero, one)):
            passing.append(candidate)
    if len(passing) != 1:
        raise ValueError(f"expected exactly one valid six-qubit ket, found {passing}")
    logger.debug(f"Six-qubit ket {SIX_QUBIT_TYPO} resolved to {passing[0]}")
    return passing[0]


def _six_degenerate() -> QuantumCode:
    return QuantumCode(
        "six_degenerate", _six_qubit_codewords(resolve_six_qubit_ket()),
        _generators(*_SIX_GENERATORS),
        distance=3, description="Degenerate six-qubit code",
    )


def _shor_nine() -> QuantumCode:
    s = 1 / math.sqrt(8)

    def blocks(sign: int) -> SparseState:
        terms = {}
        for m in range(8):
            kets = ["111" if (m >> (2 - k)) & 1 else "000" for k in range(3)]
            terms["".join(kets)] = s * sign ** bin(m).count("1")
        return SparseState.from_kets(terms)

    return QuantumCode(
        "shor_nine", [blocks(1), blocks(-1)],
        _generators("ZZIIIIIII", "ZIZIIIIII", "IIIZZIIII", "IIIZIZIII", "IIIIIIZZI", "IIIIIIZIZ",
                    "XXXXXXIII", "XXXIIIXXX"),
        distance=3, description="Shor nine-qubit code",
    )


def _eight_concat() -> QuantumCode:
    zero = _signed(["00000110", "00001001", "11110110", "11111001"], 0.5)
    one = _signed(["01100000", "01101111", "10010000", "10011111"], 0.5)
    return QuantumCode(
        "eight_concat", [zero, one],
        _generators("XXXXIIII", "IIIIXXXX", "ZIIZIIII", "IIIIZIIZ", "IZZIIIII", "IIIIIZZI", "-ZZIIZZII"),
        description="Four-qubit code concatenated with the two-qubit repetition code",
    )


def _leung_four() -> QuantumCode:
    s = 1 / math.sqrt(2)
    return QuantumCode(
        "leung_four", [_signed(["0000", "1111"], s), _signed(["0011", "1100"], s)],
        _generators("XXXX", "ZZII", "IIZZ"),
        distance=2, damping_only=True, description="Approximate four-qubit amplitude-damping code",
    )


def _erasure_four() -> QuantumCode:
    s = 1 / math.sqrt(2)
    return QuantumCode(
        "erasure_four", [_signed(["0000", "1111"], s), _signed(["0110", "1001"], s)],
        _generators("XXXX", "ZIIZ", "IZZI"),
        distance=2, damping_only=True, description="Four-qubit erasure code",
    )


_ELEVEN_ROWS = [
    "00000000000", "10100011101", "11010001110", "01101000111", "10110100011", "11011010001",
    "11101101000", "01110110100", "00111011010", "00011101101", "10001110110", "01000111011",
]


def _nonadd_11_2_3() -> QuantumCode:
    s = 1 / math.sqrt(len(_ELEVEN_ROWS))
    zero = _signed(_ELEVEN_ROWS, s)
    one = _signed([_complement(r) for r in _ELEVEN_ROWS], s)
    return QuantumCode("nonadd_11_2_3", [zero, one], distance=3,
                       description="Nonadditive ((11,2,3)) code from the rows of H and their complements")


def graph_state(g: GraphSpec) -> SparseState:
    """
    |G> = 2^(-n/2) sum_mu (-1)^(edges inside mu) |mu>.

    Args:
        g: Graph specification

    Returns:
        Dense-support SparseState with 2^n equal-magnitude terms
    """
    n = g.n
    mu = np.arange(2 ** n, dtype=np.int64)
    bits = (mu[:, None] >> np.arange(n - 1, -1, -1)) & 1
    edges_inside = np.einsum("ki,ij,kj->k", bits, np.triu(g.adjacency), bits)
    signs = 1.0 - 2.0 * (edges_inside & 1)
    return SparseState(2 ** n, mu, signs / math.sqrt(2 ** n))


# Z_{V_i} sets acting on the loop-graph state (1-based vertices)
NINE_TWELVE_SETS: Tuple[Tuple[int, ...], ...] = (
    (), (2, 6, 7), (4, 5, 9), (2, 3, 6, 8), (3, 5, 8, 9), (2, 3, 4, 5, 6, 7, 8, 9),
    (1, 4, 7), (1, 2, 4, 6), (1, 5, 7, 9), (1, 2, 3, 4, 6, 7, 8), (1, 3, 4, 5, 7, 8, 9),
    (1, 2, 3, 5, 6, 8, 9),
)


def _vertex_mask(n: int, vertices: Sequence[int]) -> int:
    return sum(1 << (n - v) for v in vertices)


def build_9_12_3_codewords(method: str = "graph") -> List[SparseState]:
    """
    The twelve ((9,12,3)) codewords |i_L> = Z_{V_i}|L9>.

    Args:
        method: "graph" applies Z strings to the loop-graph state; "table"
            evaluates the sign (-1)^(cyclic adjacent pairs + |mu & V_i|) directly

    Returns:
        Twelve normalized SparseStates
    """
    n = 9
    if method == "graph":
        loop = graph_state(GraphSpec.loop(n))
        words = []
        for vertices in NINE_TWELVE_SETS:
            letters = "".join("Z" if q + 1 in vertices else "I" for q in range(n))
            words.append(PauliString(letters).apply(loop))
        return words

    if method == "table":
        mu = np.arange(2 ** n, dtype=np.int64)
        rotated = ((mu << 1) | (mu >> (n - 1))) & (2 ** n - 1)
        adjacent = np.array([bin(int(x)).count("1") for x in mu & rotated])
        words = []
        for vertices in NINE_TWELVE_SETS:
            mask = _vertex_mask(n, vertices)
            overlap = np.array([bin(int(x) & mask).count("1") for x in mu])
            signs = 1.0 - 2.0 * ((adjacent + overlap) & 1)
            words.append(SparseState(2 ** n, mu, signs / math.sqrt(2 ** n)))
        return words

    raise ValueError(f"Unknown construction method: {method}")


def _nonadd_9_12_3() -> QuantumCode:
    return QuantumCode("nonadd_9_12_3", build_9_12_3_codewords(), distance=3,
                       description="Nonadditive ((9,12,3)) code from the loop graph L9")


def _nonadd_6_5() -> QuantumCode:
    strings = ["000000", "110000", "001100", "000011", "010101"]
    return QuantumCode("nonadd_6_5", _self_complementary(strings), damping_only=True,
                       description="Self-complementary ((6,5)) amplitude-damping code")


def _nonadd_8_12() -> QuantumCode:
    strings = ["00000000", "00000011", "00001100", "00110000", "11000000", "10101000",
               "01011000", "01100100", "10010100", "11110000", "11001100", "00111100"]
    return QuantumCode("nonadd_8_12", _self_complementary(strings), damping_only=True,
                       description="Self-complementary ((8,12)) amplitude-damping code")


_GOTTESMAN_GENERATORS = ("XXXXXXXX", "ZZZZZZZZ", "IXIXYZYZ", "IXZYIXZY", "IYXZXZIY")
_GOTTESMAN_LOGICAL_X = ("XXIIIZIZ", "XIXZIIZI", "XIIZXZII")


def _gottesman_833() -> QuantumCode:
    generators = _generators(*_GOTTESMAN_GENERATORS)
    logical_x = _generators(*_GOTTESMAN_LOGICAL_X)

    # sum over the stabilizer group applied to |0...0>
    base = SparseState.basis(2 ** 8, 0)
    for g in generators:
        base = base + g.apply(base)

    words = []
    for m in range(8):
        state = base
        for bit, op in enumerate(logical_x):
            if (m >> (2 - bit)) & 1:
                state = op.apply(state)
        words.append(state.normalized())
    return QuantumCode("gottesman_833", words, generators, distance=3, damping_only=True,
                       description="Gottesman [[8,3,3]] stabilizer code")


_REGISTRY: Dict[str, Callable[[], QuantumCode]] = {
    "five_qubit": _five_qubit,
    "css_seven": _css_seven,
    "six_degenerate": _six_degenerate,
    "shor_nine": _shor_nine,
    "eight_concat": _eight_concat,
    "leung_four": _leung_four,
    "erasure_four": _erasure_four,
    "gottesman_833": _gottesman_833,
    "nonadd_11_2_3": _nonadd_11_2_3,
    "nonadd_9_12_3": _nonadd_9_12_3,
    "nonadd_6_5": _nonadd_6_5,
    "nonadd_8_12": _nonadd_8_12,
}

CODE_NAMES: Tuple[str, ...] = tuple(_REGISTRY)


@lru_cache(maxsize=None)
def build_code(name: str) -> QuantumCode:
    """
    Build a registered code.

    Args:
        name: Stable code identifier, one of CODE_NAMES

    Returns:
        QuantumCode with normalized codewords

    Raises:
        ValueError: For an unknown name
    """
    if name not in _REGISTRY:
        raise ValueError(f"Unknown code: {name} (known: {', '.join(CODE_NAMES)})")
    code = _REGISTRY[name]()
    logger.debug(f"Built {name}: n={code.n}, K={code.K}")
    return code


@dataclass
class StabilizerReport:
    """Outcome of checking every generator against every codeword."""
    code_name: str
    residuals: Dict[str, List[float]] = field(default_factory=dict)
    tol: float = STABILIZER_TOL

    @property
    def failures(self) -> List[Tuple[str, int, float]]:
        return [
            (gen, i, r)
            for gen, values in self.residuals.items()
            for i, r in enumerate(values)
            if r >= self.tol
        ]

    @property
    def passed(self) -> bool:
        return not self.failures

    def per_generator(self) -> Dict[str, bool]:
        return {gen: all(r < self.tol for r in values) for gen, values in self.residuals.items()}


def verify_stabilizer(
    code: QuantumCode,
    generators: Optional[Sequence[PauliString]] = None,
    tol: float = STABILIZER_TOL,
) -> StabilizerReport:
    """
    Check ||g c - c|| < tol for every generator g and codeword c.

    Args:
        code: Additive code (or any code when ``generators`` is given)
        generators: Override the code's own generator list
        tol: Residual tolerance

    Raises:
        ValueError: If the code has no generators to check
    """
    generators = tuple(generators) if generators is not None else code.stabilizer_generators
    if not generators:
        raise ValueError(f"{code.name} has no stabilizer generators")
    report = StabilizerReport(code.name, tol=tol)
    for g in generators:
        report.residuals[str(g)] = [(g.apply(c) - c).norm() for c in code.codewords]
    return report


def is_self_complementary(code: QuantumCode, tol: float = ORTHONORMAL_TOL) -> bool:
    """True iff every codeword is (|a> + |a-bar>)/sqrt(2) up to these magnitudes."""
    full = code.dim - 1
    for word in code.codewords:
        if word.nnz != 2:
            return False
        a, b = (int(i) for i in word.indices)
        if a ^ b != full:
            return False
        if np.any(np.abs(np.abs(word.amplitudes) - 1 / math.sqrt(2)) > tol):
            return False
    return True


def hamming_bound_satisfiable(n: int, k: int, t: int) -> bool:
    """Quantum Hamming bound 2^k sum_{j<=t} 3^j C(n, j) <= 2^n in exact integers."""
    if not 0 <= t <= n:
        raise ValueError(f"t must be in [0, {n}], got {t}")
    volume = sum(3 ** j * int(comb(n, j, exact=True)) for j in range(t + 1))
    return 2 ** k * volume <= 2 ** n


def hamming_weight_profile(state: SparseState) -> List[int]:
    """Number of basis terms with m ones, for m = 0..n."""
    counts = [0] * (state.n_qubits + 1)
    for i in state.indices:
        counts[bin(int(i)).count("1")] += 1
    return counts


def dump_codewords(code: QuantumCode) -> Dict[str, object]:
    """JSON-ready codeword listing: {name, n, K, terms: [[[bits, re, im], ...] per codeword]}."""
    return {
        "name": code.name,
        "n": code.n,
        "K": code.K,
        "terms": [
            [[bits, float(a.real), float(a.imag)] for bits, a in zip(w.bitstrings(), w.amplitudes)]
            for w in code.codewords
        ],
    }
