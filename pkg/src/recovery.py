"""
Recovery construction.

Correctable-set selection per code, the approximate Knill-Laflamme recovery
(one operator per accepted error plus the complement projector), QEC
condition diagnostics and the transpose-channel recovery.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import svd

from .channel import (
    ErrorIndex,
    GadParams,
    KrausTables,
    apply_errors_batch,
    gad_tables,
    iter_error_digits,
    shape_tables,
    _bit_matrix,
)
from .codes import CODE_NAMES, QuantumCode
from .linalg import SparseState, gram_schmidt_complete, hermitian_eig, inv_sqrt_psd, orthonormalize, states_to_matrix


logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-8
NORM_TOL = 1e-12

# Compatibility rule constants
SHAPE_GAMMA = 1e-5
SHARE_GAMMA = 0.1
SHARE_TOL = 1e-10
DAMPING_SINGLE_TOL = 1e-8
DAMPING_MULTI_TOL = 1e-12
EXCITATION_TOL = 1e-4
# Overlaps between one error's own images that survive gamma -> 0
SELF_OVERLAP_TOL = 1e-3
FRAME_DROP_TOL = 1e-9

GAD = "GAD"
AD_ONLY = "AD_only"

OVERLAP_WITH_WEIGHT_0 = "overlap-with-weight-0"
INCOMPATIBLE_PAIR = "incompatible-pair"
TRUNCATED = "truncated"
VANISHING = "vanishing"
SELF_OVERLAP = "self-overlap"


class VanishingImageError(ValueError):
    """An accepted error annihilates a codeword."""


class IncompatibleErrorSet(ValueError):
    """An accepted error's images overlap those of an accepted partner."""

    def __init__(self, conflict: "Conflict"):
        self.conflict = conflict
        partner = conflict.partner or "itself"
        super().__init__(
            f"{conflict.error} is incompatible with {partner} "
            f"(codewords {conflict.codewords}, overlap {conflict.overlap:.3e})"
        )


@dataclass(frozen=True)
class ExcludedError:
    """An error kept out of the recovery, with the reason tag."""
    error: ErrorIndex
    reason: str


@dataclass(frozen=True)
class Conflict:
    """Evidence that an error cannot get its own recovery operator."""
    error: ErrorIndex
    partner: Optional[ErrorIndex]
    codewords: Tuple[int, int]
    overlap: float
    reason: str


@dataclass(frozen=True)
class CorrectableRule:
    """Per-code claims about damping-only errors of weight 2 and above."""
    damping_weights: Tuple[int, ...] = ()
    overlap: FrozenSet[str] = frozenset()
    incompatible: FrozenSet[str] = frozenset()
    self_overlap: FrozenSet[str] = frozenset()
    unclaimed_weights: Tuple[int, ...] = ()


# One damped qubit in each of the three blocks: |0_L> and |1_L> land on the
# same basis state with opposite signs
_SHOR_ONE_PER_BLOCK = frozenset(
    "".join(blocks) for blocks in itertools.product(("100", "010", "001"), repeat=3)
)

CORRECTABLE_RULES: Dict[str, CorrectableRule] = {
    "five_qubit": CorrectableRule(
        damping_weights=(2,),
        overlap=frozenset({"01100", "00011", "01010", "00101"}),
        incompatible=frozenset({"11000", "10100", "10010", "10001", "01001", "00110"}),
    ),
    "six_degenerate": CorrectableRule(
        damping_weights=(2,),
        overlap=frozenset({"101000", "010010"}),
        incompatible=frozenset({"110000", "100010", "011000", "001010", "000101"}),
    ),
    "eight_concat": CorrectableRule(
        damping_weights=(2,),
        incompatible=frozenset({
            "11000000", "10100000", "01010000", "00110000",
            "00001100", "00001010", "00000101", "00000011",
        }),
    ),
    "shor_nine": CorrectableRule(
        damping_weights=(2, 3),
        overlap=frozenset({"111000000", "000111000", "000000111"}),
        self_overlap=_SHOR_ONE_PER_BLOCK,
    ),
    "nonadd_9_12_3": CorrectableRule(unclaimed_weights=(2,)),
}


@dataclass
class CorrectableSet:
    """Errors that get a dedicated recovery operator, and those left out."""
    code_name: str
    accepted: List[ErrorIndex]
    excluded: List[ExcludedError] = field(default_factory=list)
    audit_scope: List[ErrorIndex] = field(default_factory=list)
    regime: str = GAD

    def __post_init__(self):
        labels = [e.label for e in self.accepted]
        if len(set(labels)) != len(labels):
            raise ValueError(f"{self.code_name}: duplicate accepted errors")
        clash = set(labels) & {x.error.label for x in self.excluded}
        if clash:
            raise ValueError(f"{self.code_name}: errors both accepted and excluded: {sorted(clash)}")

    def excluded_labels(self, reasons: Optional[Sequence[str]] = None) -> List[str]:
        return [x.error.label for x in self.excluded if reasons is None or x.reason in reasons]

    def claimed_exclusions(self) -> Dict[str, str]:
        """Exclusions justified by geometry rather than by the regime."""
        return {x.error.label: x.reason for x in self.excluded if x.reason != TRUNCATED}

    def scheme_operators(self) -> List[ErrorIndex]:
        """
        Errors the per-operator accounting counts as recovered.

        The accepted list plus self-overlap exclusions: the nine-qubit
        operator count of the accounting includes errors whose two codeword
        images coincide up to sign, which no recovery can correct.
        """
        return list(self.accepted) + [x.error for x in self.excluded if x.reason == SELF_OVERLAP]

    def with_accepted(self, extra: Sequence[ErrorIndex]) -> "CorrectableSet":
        """Copy with ``extra`` moved into the accepted list."""
        extra_labels = {e.label for e in extra}
        return CorrectableSet(
            self.code_name,
            self.accepted + [e for e in extra if e.label not in {a.label for a in self.accepted}],
            [x for x in self.excluded if x.error.label not in extra_labels],
            self.audit_scope,
            self.regime,
        )

    def without(self, error: ErrorIndex) -> "CorrectableSet":
        """Copy with one accepted error removed (no exclusion entry added)."""
        return CorrectableSet(
            self.code_name,
            [e for e in self.accepted if e != error],
            self.excluded,
            self.audit_scope,
            self.regime,
        )

    def first_order(self) -> "CorrectableSet":
        """Restrict to weight-0 and weight-1 accepted errors."""
        return CorrectableSet(
            self.code_name,
            [e for e in self.accepted if e.weight <= 1],
            [x for x in self.excluded if x.error.weight <= 1],
            [e for e in self.audit_scope if e.weight <= 1],
            self.regime,
        )


def _singles(n: int, digit: int) -> List[ErrorIndex]:
    return [ErrorIndex.single(n, q, digit) for q in range(n)]


def _damping_words(n: int, weight: int) -> List[ErrorIndex]:
    return [ErrorIndex(d) for d in iter_error_digits(n, weight, (1,))]


def default_correctable_set(code: QuantumCode, regime: Optional[str] = None) -> CorrectableSet:
    """
    The recovery scheme's correctable set for a registered code.

    Args:
        code: Registered code
        regime: GAD (excitation singles A3 recovered) or AD_only (weight-0 plus
            A1 errors); defaults to the code's own target regime

    Returns:
        CorrectableSet with accepted, excluded and audit-scope lists

    Raises:
        ValueError: For an unregistered code or unknown regime
    """
    if code.name not in CODE_NAMES:
        raise ValueError(f"Unknown code: {code.name}")
    regime = regime or (AD_ONLY if code.damping_only else GAD)
    if regime not in (GAD, AD_ONLY):
        raise ValueError(f"Unknown regime: {regime}")

    n = code.n
    accepted = [ErrorIndex.identity(n)] + _singles(n, 1)
    excluded: List[ExcludedError] = []
    scope: List[ErrorIndex] = []

    if regime == GAD:
        accepted += _singles(n, 3)
        excluded += [ExcludedError(e, OVERLAP_WITH_WEIGHT_0) for e in _singles(n, 2)]
        scope += _singles(n, 2)
    else:
        excluded += [ExcludedError(e, TRUNCATED) for e in _singles(n, 2) + _singles(n, 3)]

    rule = CORRECTABLE_RULES.get(code.name, CorrectableRule())
    for weight in rule.damping_weights:
        for e in _damping_words(n, weight):
            if e.label in rule.overlap:
                excluded.append(ExcludedError(e, OVERLAP_WITH_WEIGHT_0))
            elif e.label in rule.incompatible:
                excluded.append(ExcludedError(e, INCOMPATIBLE_PAIR))
            elif e.label in rule.self_overlap:
                excluded.append(ExcludedError(e, SELF_OVERLAP))
            else:
                accepted.append(e)
            scope.append(e)
    for weight in rule.unclaimed_weights:
        scope += _damping_words(n, weight)

    return CorrectableSet(code.name, accepted, excluded, scope, regime)


def corrupted_images(code: QuantumCode, errors: Sequence[ErrorIndex], tables: KrausTables) -> np.ndarray:
    """
    Dense corrupted codewords A'_r|i_L>.

    Returns:
        Array of shape (len(errors), K, 2^n)
    """
    digits = np.array([e.digits for e in errors], dtype=np.int64).reshape(len(errors), code.n)
    out = np.zeros((len(errors), code.K, code.dim), dtype=np.complex128)
    rows = np.arange(len(errors))
    for i, word in enumerate(code.codewords):
        idx, amp = apply_errors_batch(digits, _bit_matrix(word.indices, code.n), word.amplitudes, tables)
        np.add.at(out, (np.repeat(rows, word.nnz), i, idx.ravel()), amp.ravel())
    return out


def error_probabilities(code: QuantumCode, errors: Sequence[ErrorIndex], params: GadParams) -> np.ndarray:
    """(1/K) sum_i ||A'_r|i_L>||^2 for each error."""
    images = corrupted_images(code, errors, gad_tables(params))
    return np.sum(np.abs(images) ** 2, axis=(1, 2)) / code.K


class ImageBank:
    """Normalized epsilon-free images of a code, computed once per error."""

    def __init__(self, code: QuantumCode):
        self.code = code
        self._tables = {SHAPE_GAMMA: shape_tables(SHAPE_GAMMA), SHARE_GAMMA: shape_tables(SHARE_GAMMA)}
        self._cache: Dict[Tuple[Tuple[int, ...], float], Tuple[np.ndarray, np.ndarray]] = {}

    def get(self, error: ErrorIndex, gamma: float = SHAPE_GAMMA) -> Tuple[np.ndarray, np.ndarray]:
        """Return (unit images (K, dim), norms (K,)); zero images stay zero."""
        key = (error.digits, gamma)
        if key not in self._cache:
            images = corrupted_images(self.code, [error], self._tables[gamma])[0]
            norms = np.linalg.norm(images, axis=1)
            safe = np.where(norms > 0, norms, 1.0)
            self._cache[key] = (images / safe[:, None], norms)
        return self._cache[key]


def _tolerance(error: ErrorIndex, partner: ErrorIndex) -> Optional[float]:
    if error.is_damping_only and partner.is_damping_only:
        return DAMPING_SINGLE_TOL if error.weight == 1 else DAMPING_MULTI_TOL
    if not error.is_damping_only and partner.weight == 0:
        return EXCITATION_TOL
    return None


def find_incompatibility(
    code: QuantumCode,
    error: ErrorIndex,
    accepted: Sequence[ErrorIndex],
    bank: Optional[ImageBank] = None,
) -> Optional[Conflict]:
    """
    Check an error against accepted errors of strictly lower weight.

    Overlaps are measured between normalized epsilon-free images at a small
    damping probability. An overlap on the same codeword that stays at 1 for
    large damping is a shared vector of a degenerate code, not a conflict.
    The error's own images of different codewords must also stay apart;
    overlaps of order gamma are tolerated, a surviving one is a conflict
    with no partner.

    Returns:
        The first Conflict found, or None when the error is compatible
    """
    bank = bank or ImageBank(code)
    unit, norms = bank.get(error)
    if np.any(norms < NORM_TOL):
        bad = int(np.argmin(norms))
        return Conflict(error, None, (bad, bad), 0.0, VANISHING)

    for partner in accepted:
        if partner.weight >= error.weight:
            continue
        tol = _tolerance(error, partner)
        if tol is None:
            continue
        p_unit, p_norms = bank.get(partner)
        # overlaps[j, i] = |<v_partner^j | v_error^i>|
        overlaps = np.abs(p_unit.conj() @ unit.T)
        overlaps[p_norms < NORM_TOL, :] = 0.0
        for j, i in zip(*np.nonzero(overlaps > tol)):
            if i == j:
                e_wide, _ = bank.get(error, SHARE_GAMMA)
                p_wide, _ = bank.get(partner, SHARE_GAMMA)
                if 1.0 - abs(np.vdot(p_wide[j], e_wide[i])) <= SHARE_TOL:
                    continue
            reason = OVERLAP_WITH_WEIGHT_0 if partner.weight == 0 else INCOMPATIBLE_PAIR
            return Conflict(error, partner, (int(i), int(j)), float(overlaps[j, i]), reason)

    codewords, overlap = _own_overlap(unit)
    if overlap > SELF_OVERLAP_TOL:
        return Conflict(error, None, codewords, overlap, SELF_OVERLAP)
    return None


def _own_overlap(unit: np.ndarray) -> Tuple[Tuple[int, int], float]:
    """Largest |<v^i|v^j>|, i != j, over one error's unit images."""
    own = np.abs(unit.conj() @ unit.T)
    np.fill_diagonal(own, 0.0)
    i, j = np.unravel_index(np.argmax(own), own.shape)
    return (int(i), int(j)), float(own[i, j])


@dataclass(eq=False)
class RecoveryOperator:
    """R_r = sum_i |i_L><frame column for (r, i)|."""
    error: ErrorIndex
    images: List[SparseState]
    columns: Tuple[int, ...]


@dataclass(eq=False)
class RecoverySet:
    """
    Recovery operators plus the complement projector O-hat.

    ``frame`` holds the bra vectors as columns; operator r reads column
    ``columns[i]`` for codeword i (-1 when that direction is already owned
    by an earlier operator). Sum_r R_r^dag R_r = frame frame^dag.
    """
    code_name: str
    params: GadParams
    operators: List[RecoveryOperator]
    frame: np.ndarray
    kind: str = "knill-laflamme"

    @property
    def dim(self) -> int:
        return self.frame.shape[0]

    def column_map(self) -> np.ndarray:
        return np.array([op.columns for op in self.operators], dtype=np.int64)

    @cached_property
    def range_basis(self) -> np.ndarray:
        """Orthonormal basis of the span of the frame."""
        if self.kind == "knill-laflamme":
            return self.frame
        u, s, _ = svd(self.frame, full_matrices=False)
        return u[:, s > 1e-10 * max(s.max(initial=0.0), 1.0)]

    @property
    def vector_count(self) -> int:
        return self.range_basis.shape[1]

    @cached_property
    def ohat_basis(self) -> List[SparseState]:
        """Orthonormal completion of the frame span, in computational-basis order."""
        given = [SparseState.from_dense(v) for v in self.range_basis.T]
        return gram_schmidt_complete(given, self.dim)

    def completeness_defect(self) -> float:
        """max |sum_r R_r^dag R_r + O^dag O - I|."""
        total = self.frame @ self.frame.conj().T
        if self.ohat_basis:
            o = states_to_matrix(self.ohat_basis)
            total = total + o @ o.conj().T
        return float(np.max(np.abs(total - np.eye(self.dim))))


def build_recovery(
    code: QuantumCode,
    correctable: CorrectableSet,
    params: GadParams,
    ortho_tol: float = ORTHO_TOL,
    validate: bool = True,
) -> RecoverySet:
    """
    Build the approximate Knill-Laflamme recovery for a correctable set.

    The normalized images v_r^{i_L} are orthonormalized (Gram-Schmidt,
    twice) with accepted errors in descending probability at ``params`` and
    codewords inner; a residual below 1e-9 marks a direction already owned
    by an earlier, likelier error or by the same error's previous codeword.
    The second case only arises for self-overlapping errors, which validation
    rejects.

    Args:
        code: Code
        correctable: Accepted errors
        params: Channel point
        ortho_tol: Required orthonormality of the recovery frame
        validate: Run the compatibility check on the accepted set; when off,
            self-overlapping errors are only logged

    Returns:
        RecoverySet

    Raises:
        VanishingImageError: An accepted error annihilates a codeword
        IncompatibleErrorSet: Two accepted errors overlap, or one error's
            codeword images overlap each other
    """
    errors = list(correctable.accepted)
    images = corrupted_images(code, errors, shape_tables(params.frame_gamma))
    norms = np.linalg.norm(images, axis=2)
    if np.any(norms < NORM_TOL):
        r, i = np.unravel_index(np.argmin(norms), norms.shape)
        raise VanishingImageError(f"{errors[r]} annihilates codeword {i} of {code.name}")

    bank = ImageBank(code)
    if validate:
        for error in errors:
            conflict = find_incompatibility(code, error, errors, bank)
            if conflict is not None:
                raise IncompatibleErrorSet(conflict)
    else:
        for error in errors:
            codewords, overlap = _own_overlap(bank.get(error)[0])
            if overlap > SELF_OVERLAP_TOL:
                logger.warning(
                    f"{error} maps codewords {codewords} of {code.name} onto each other "
                    f"(overlap {overlap:.3f}); its operator recovers at most part of it"
                )

    unit = images / norms[..., None]
    order = np.argsort(-error_probabilities(code, errors, params), kind="stable")
    candidates = unit[order].reshape(len(errors) * code.K, code.dim).T
    frame, kept = orthonormalize(candidates, FRAME_DROP_TOL)

    defect = float(np.max(np.abs(frame.conj().T @ frame - np.eye(frame.shape[1])))) if frame.size else 0.0
    if defect > ortho_tol:
        raise ValueError(f"recovery frame is not orthonormal (defect {defect:.3e})")

    columns = np.full((len(errors), code.K), -1, dtype=np.int64)
    for pos, r in enumerate(order):
        columns[r] = kept[pos * code.K:(pos + 1) * code.K]

    operators = [
        RecoveryOperator(e, [SparseState.from_dense(v) for v in unit[r]], tuple(int(c) for c in columns[r]))
        for r, e in enumerate(errors)
    ]
    dropped = int(np.sum(columns < 0))
    logger.info(
        f"Recovery for {code.name} at gamma={params.gamma:g}, eps={params.epsilon:g}: "
        f"{len(errors)} operators, {frame.shape[1]} vectors, {dropped} shared"
    )
    return RecoverySet(code.name, params, operators, frame)


@dataclass
class KlSingle:
    """Codespace Gram block of one error: P_C A'^dag A' P_C."""
    error: ErrorIndex
    p_max: float
    p_min: float
    diagonal_spread: float
    max_off_diagonal: float

    @property
    def residue(self) -> float:
        """p_l (1 - lambda_l): gap between the extreme singular values."""
        return self.p_max - self.p_min


@dataclass
class KlPair:
    first: ErrorIndex
    second: ErrorIndex
    max_entry: float


@dataclass
class KlReport:
    """Knill-Laflamme diagnostics for an error list at one channel point."""
    code_name: str
    params: GadParams
    singles: List[KlSingle]
    pairs: List[KlPair]

    @property
    def max_off_diagonal(self) -> float:
        values = [s.max_off_diagonal for s in self.singles] + [p.max_entry for p in self.pairs]
        return max(values, default=0.0)

    @property
    def max_spread(self) -> float:
        return max((s.diagonal_spread for s in self.singles), default=0.0)

    @property
    def max_residue(self) -> float:
        return max((s.residue for s in self.singles), default=0.0)

    def pair(self, first: ErrorIndex, second: ErrorIndex) -> KlPair:
        for p in self.pairs:
            if {p.first, p.second} == {first, second}:
                return p
        raise KeyError(f"no pair ({first}, {second})")


def check_kl_conditions(code: QuantumCode, errors: Sequence[ErrorIndex], params: GadParams) -> KlReport:
    """
    Evaluate <i_L|A_l^dag A_m|j_L> for all listed errors.

    Returns:
        KlReport with per-error spreads, off-diagonals and singular values of
        sqrt(P_C A'^dag A' P_C), and the largest entry of every cross block
    """
    errors = list(errors)
    images = corrupted_images(code, errors, gad_tables(params))
    gram = np.einsum("lid,mjd->limj", images.conj(), images)
    off_mask = ~np.eye(code.K, dtype=bool)

    singles = []
    for l, error in enumerate(errors):
        block = gram[l, :, l, :]
        diag = block.diagonal().real
        values, _ = hermitian_eig(block, herm_tol=1e-10)
        singles.append(KlSingle(
            error,
            float(np.sqrt(max(values[0], 0.0))),
            float(np.sqrt(max(values[-1], 0.0))),
            float(diag.max() - diag.min()),
            float(np.abs(block[off_mask]).max()) if code.K > 1 else 0.0,
        ))

    pairs = [
        KlPair(errors[l], errors[m], float(np.abs(gram[l, :, m, :]).max()))
        for l in range(len(errors))
        for m in range(l + 1, len(errors))
    ]
    return KlReport(code.name, params, singles, pairs)


def transpose_channel_recovery(
    code: QuantumCode,
    errors: Sequence[ErrorIndex],
    params: GadParams,
    rank_tol: float = 1e-12,
) -> RecoverySet:
    """
    Transpose-channel recovery R_k = P_C A_k^dag Lambda(P_C)^(-1/2), completed
    with the projector onto the complement of its range.

    With B the matrix of corrupted codewords, Lambda(P_C)^(-1/2) B = B (B^dag B)^(-1/2),
    so the bra vectors are the columns of W = B G^(-1/2).

    Raises:
        ValueError: If every corrupted codeword vanishes
    """
    errors = list(errors)
    images = corrupted_images(code, errors, gad_tables(params))
    b = images.reshape(len(errors) * code.K, code.dim).T
    gram = b.conj().T @ b
    largest = float(np.max(np.linalg.eigvalsh((gram + gram.conj().T) / 2))) if gram.size else 0.0
    if largest <= rank_tol:
        raise ValueError(f"transpose channel undefined: corrupted codewords of {code.name} vanish")
    w = b @ inv_sqrt_psd(gram, rank_tol * largest)

    norms = np.linalg.norm(images, axis=2)
    operators = []
    for r, e in enumerate(errors):
        unit = [
            SparseState.from_dense(images[r, i] / norms[r, i]) if norms[r, i] > NORM_TOL else SparseState.zero(code.dim)
            for i in range(code.K)
        ]
        operators.append(RecoveryOperator(e, unit, tuple(r * code.K + i for i in range(code.K))))
    return RecoverySet(code.name, params, operators, w, kind="transpose-channel")
