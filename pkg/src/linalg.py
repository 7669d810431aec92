"""
Complex linear-algebra kernel.
Sparse n-qubit states, small dense matrices, basis completion and
Hermitian eigendecomposition.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np


logger = logging.getLogger(__name__)

# Amplitudes below this magnitude are dropped from sparse states
PRUNE_TOL = 1e-14

# Largest dense dimension tensor_product will build
MAX_DENSE_DIM = 4096

Number = Union[int, float, complex]


@dataclass(frozen=True, eq=False)
class SparseState:
    """
    A length-``dim`` complex vector stored as sorted (index, amplitude) pairs.

    Basis index convention: qubit 1 is the most significant bit.
    """
    dim: int
    indices: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        """Canonicalize: sort, merge duplicates and prune tiny amplitudes."""
        idx = np.asarray(self.indices, dtype=np.int64).ravel()
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        if idx.shape != amp.shape:
            raise ValueError("indices and amplitudes must have the same length")
        if idx.size and (idx.min() < 0 or idx.max() >= self.dim):
            raise ValueError(f"basis index out of range for dim {self.dim}")

        if idx.size:
            unique, inverse = np.unique(idx, return_inverse=True)
            merged = np.zeros(unique.size, dtype=np.complex128)
            np.add.at(merged, inverse, amp)
            keep = np.abs(merged) >= PRUNE_TOL
            idx, amp = unique[keep], merged[keep]

        idx.setflags(write=False)
        amp.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_terms(cls, dim: int, terms: Iterable[Tuple[int, Number]]) -> "SparseState":
        """Build a state from (basis index, amplitude) pairs; duplicates add up."""
        terms = list(terms)
        if not terms:
            return cls.zero(dim)
        idx, amp = zip(*terms)
        return cls(dim, np.array(idx), np.array(amp))

    @classmethod
    def from_kets(cls, kets: Dict[str, Number]) -> "SparseState":
        """
        Build a state from ket bit strings.

        Args:
            kets: Mapping like ``{"00000": -1, "01111": 1}``; all strings equal length

        Returns:
            Unnormalized SparseState
        """
        lengths = {len(k) for k in kets}
        if len(lengths) != 1:
            raise ValueError(f"ket strings must share one length, got {sorted(lengths)}")
        n = lengths.pop()
        return cls.from_terms(2 ** n, ((int(k, 2), a) for k, a in kets.items()))

    @classmethod
    def zero(cls, dim: int) -> "SparseState":
        return cls(dim, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.complex128))

    @classmethod
    def basis(cls, dim: int, index: int) -> "SparseState":
        return cls(dim, np.array([index]), np.array([1.0]))

    @classmethod
    def from_dense(cls, vector: np.ndarray) -> "SparseState":
        vector = np.asarray(vector, dtype=np.complex128).ravel()
        nonzero = np.flatnonzero(np.abs(vector) >= PRUNE_TOL)
        return cls(vector.size, nonzero, vector[nonzero])

    @property
    def n_qubits(self) -> int:
        return int(self.dim).bit_length() - 1

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def is_zero(self) -> bool:
        return self.indices.size == 0

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def normalized(self) -> "SparseState":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero state")
        return SparseState(self.dim, self.indices, self.amplitudes / norm)

    def scaled(self, factor: Number) -> "SparseState":
        return SparseState(self.dim, self.indices, self.amplitudes * factor)

    def to_dense(self) -> np.ndarray:
        vector = np.zeros(self.dim, dtype=np.complex128)
        vector[self.indices] = self.amplitudes
        return vector

    def amplitude(self, index: int) -> complex:
        pos = np.searchsorted(self.indices, index)
        if pos < self.indices.size and self.indices[pos] == index:
            return complex(self.amplitudes[pos])
        return 0j

    def bitstrings(self) -> List[str]:
        width = self.n_qubits
        return [format(int(i), f"0{width}b") for i in self.indices]

    def __add__(self, other: "SparseState") -> "SparseState":
        _check_dims(self, other)
        return SparseState(
            self.dim,
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.amplitudes, other.amplitudes]),
        )

    def __sub__(self, other: "SparseState") -> "SparseState":
        return self + other.scaled(-1)

    def __repr__(self) -> str:
        return f"SparseState(dim={self.dim}, nnz={self.nnz})"


def _check_dims(a: SparseState, b: SparseState) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def inner(a: SparseState, b: SparseState) -> complex:
    """
    Inner product <a|b>, summed over shared basis indices.

    Args:
        a: Bra state
        b: Ket state

    Returns:
        Complex inner product
    """
    _check_dims(a, b)
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(a.amplitudes[ia]) * b.amplitudes[ib]))


def tensor_product(a: np.ndarray, b: np.ndarray, max_dim: int = MAX_DENSE_DIM) -> np.ndarray:
    """
    Kronecker product of two dense matrices.

    Args:
        a: Left factor
        b: Right factor
        max_dim: Largest allowed row or column count of the result

    Returns:
        Dense Kronecker product

    Raises:
        ValueError: If the product exceeds ``max_dim``
    """
    a = np.atleast_2d(np.asarray(a))
    b = np.atleast_2d(np.asarray(b))
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise ValueError(f"tensor product of shape ({rows}, {cols}) exceeds max_dim={max_dim}")
    return np.kron(a, b)


def states_to_matrix(states: Sequence[SparseState]) -> np.ndarray:
    """Stack sparse states as the columns of a dense matrix."""
    if not states:
        raise ValueError("need at least one state")
    dim = states[0].dim
    matrix = np.zeros((dim, len(states)), dtype=np.complex128)
    for col, state in enumerate(states):
        _check_dims(states[0], state)
        matrix[state.indices, col] = state.amplitudes
    return matrix


def orthonormalize(
    vectors: np.ndarray,
    drop_tol: float = 1e-9,
    basis: np.ndarray = None,
) -> Tuple[np.ndarray, List[int]]:
    """
    Modified Gram-Schmidt, re-orthogonalized twice, over the columns of ``vectors``.

    Columns whose residual norm falls below ``drop_tol`` are dropped.

    Args:
        vectors: (dim, m) candidate columns, processed left to right
        drop_tol: Residual norm below which a candidate is dropped
        basis: Optional (dim, r) orthonormal columns to orthogonalize against

    Returns:
        (Q, kept) where Q holds the new orthonormal columns and ``kept[j]`` is
        the Q column of candidate j, or -1 if it was dropped
    """
    dim = vectors.shape[0]
    fixed = np.zeros((dim, 0), dtype=np.complex128) if basis is None else basis
    found: List[np.ndarray] = []
    kept: List[int] = []

    for j in range(vectors.shape[1]):
        v = vectors[:, j].astype(np.complex128, copy=True)
        for _ in range(2):
            if fixed.shape[1]:
                v -= fixed @ (fixed.conj().T @ v)
            for q in found:
                v -= q * np.vdot(q, v)
        norm = np.linalg.norm(v)
        if norm < drop_tol:
            logger.debug(f"Gram-Schmidt dropped candidate {j} (residual {norm:.3e})")
            kept.append(-1)
            continue
        found.append(v / norm)
        kept.append(len(found) - 1)

    q_matrix = np.column_stack(found) if found else np.zeros((dim, 0), dtype=np.complex128)
    return q_matrix, kept


def gram_schmidt_complete(given: Sequence[SparseState], dim: int, tol: float = 1e-10) -> List[SparseState]:
    """
    Complete an orthonormal set to a basis of the full space.

    Candidates are computational basis vectors in index order; a candidate
    whose residual after projection is below ``tol`` is skipped.

    Args:
        given: Pairwise orthonormal states
        dim: Dimension of the full space
        tol: Orthonormality tolerance and skip threshold

    Returns:
        Exactly ``dim - len(given)`` new states

    Raises:
        ValueError: If ``given`` is not orthonormal within ``tol``
    """
    if given:
        fixed = states_to_matrix(given)
        if fixed.shape[0] != dim:
            raise ValueError(f"given states have dim {fixed.shape[0]}, expected {dim}")
        gram = fixed.conj().T @ fixed
        defect = float(np.max(np.abs(gram - np.eye(len(given)))))
        if defect > tol:
            raise ValueError(f"given vectors are not orthonormal (defect {defect:.3e} > {tol})")
    else:
        fixed = np.zeros((dim, 0), dtype=np.complex128)

    needed = dim - fixed.shape[1]
    found: List[np.ndarray] = []
    basis = fixed
    for index in range(dim):
        if len(found) == needed:
            break
        v = np.zeros(dim, dtype=np.complex128)
        v[index] = 1.0
        for _ in range(2):
            v -= basis @ (basis.conj().T @ v)
        norm = np.linalg.norm(v)
        if norm < tol:
            continue
        v /= norm
        found.append(v)
        basis = np.column_stack([basis, v])

    if len(found) != needed:
        raise ValueError(f"completion produced {len(found)} vectors, expected {needed}")
    return [SparseState.from_dense(v) for v in found]


def hermitian_eig(m: np.ndarray, herm_tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigendecomposition of a Hermitian matrix.

    Args:
        m: Square Hermitian matrix
        herm_tol: Allowed deviation from Hermiticity

    Returns:
        (eigenvalues in descending order, eigenvector columns)

    Raises:
        ValueError: If ``m`` is not square or not Hermitian
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    asym = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if asym > herm_tol:
        raise ValueError(f"matrix is not Hermitian (deviation {asym:.3e})")
    values, vectors = np.linalg.eigh((m + m.conj().T) / 2)
    return values[::-1], vectors[:, ::-1]


def inv_sqrt_psd(m: np.ndarray, rank_tol: float = 1e-12) -> np.ndarray:
    """
    Pseudo-inverse square root of a positive semidefinite matrix.

    Eigenvalues at or above ``rank_tol`` map to their inverse square root,
    smaller ones to zero.

    Raises:
        ValueError: If an eigenvalue is below ``-rank_tol``
    """
    values, vectors = hermitian_eig(m)
    if values.size and values[-1] < -rank_tol:
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {values[-1]:.3e})")
    inv_root = np.zeros_like(values)
    support = values >= rank_tol
    inv_root[support] = 1.0 / np.sqrt(values[support])
    return (vectors * inv_root) @ vectors.conj().T
