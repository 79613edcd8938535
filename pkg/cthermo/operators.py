import enum
import logging
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import linalg

from .common import (DEGENERACY_GAP, HERMITIAN_TOLERANCE, LOG_FLOOR,
                     InvalidArgument)

logger = logging.getLogger(__name__)

# Dense square complex array. Kept as a plain alias so that everything
# numpy does with matrices keeps working on it.
ComplexMatrix = np.ndarray

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
# |0> is the excited state, the +1 eigenvector
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# Raising and lowering between |1> (ground) and |0> (excited)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

_PHASE_THRESHOLD = 1e-8


class Subsystem(enum.Enum):
    A = enum.auto()
    B = enum.auto()


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def vector(self, k: int) -> np.ndarray:
        return self.eigenvectors[:, k]

    def projector(self, k: int) -> ComplexMatrix:
        v = self.eigenvectors[:, k]
        return np.outer(v, v.conj())

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m: np.ndarray) -> ComplexMatrix:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise InvalidArgument(f'expected a square matrix, got shape '
                              f'{arr.shape}')
    return arr


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return np.conj(np.transpose(m))


def is_hermitian(m: ComplexMatrix, atol: float = HERMITIAN_TOLERANCE) -> bool:
    return bool(np.max(np.abs(m - dagger(m)), initial=0.0) <= atol)


def _check_same_dim(a: ComplexMatrix, b: ComplexMatrix) -> None:
    if a.shape != b.shape:
        raise InvalidArgument(f'dimension mismatch: {a.shape} and {b.shape}')


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return np.kron(as_matrix(a), as_matrix(b))


def partial_trace(m: ComplexMatrix, dims: Tuple[int, int],
                  keep: Subsystem) -> ComplexMatrix:
    m = as_matrix(m)
    dim_a, dim_b = dims
    if dim_a < 1 or dim_b < 1 or m.shape[0] != dim_a * dim_b:
        raise InvalidArgument(f'can\'t split a {m.shape[0]}-dimensional '
                              f'operator into {dim_a}x{dim_b}')
    blocks = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep is Subsystem.A:
        return np.einsum('ijkj->ik', blocks)
    return np.einsum('ijil->jl', blocks)


def _orthonormalize_cluster(vectors: np.ndarray) -> np.ndarray:
    """
    Replace the eigenvectors of one degenerate cluster with the
    Gram-Schmidt orthonormalization of the canonical basis vectors
    projected onto the cluster's subspace, taken in index order.
    """
    dim, size = vectors.shape
    projector = vectors @ vectors.conj().T
    basis: List[np.ndarray] = []
    for k in range(dim):
        candidate = projector[:, k].copy()
        for b in basis:
            candidate -= (b.conj() @ candidate) * b
        norm = np.linalg.norm(candidate)
        if norm > _PHASE_THRESHOLD:
            basis.append(candidate / norm)
        if len(basis) == size:
            break
    return np.column_stack(basis)


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        column = out[:, k]
        index = int(np.argmax(np.abs(column) > _PHASE_THRESHOLD))
        pivot = column[index]
        out[:, k] = column * (abs(pivot) / pivot)
    return out


def eig_hermitian(h: ComplexMatrix,
                  atol: float = HERMITIAN_TOLERANCE) -> SpectralDecomposition:
    h = as_matrix(h)
    if not is_hermitian(h, atol):
        raise InvalidArgument('matrix is not Hermitian')
    values, vectors = linalg.eigh((h + dagger(h)) / 2)
    start = 0
    for end in range(1, len(values) + 1):
        if end == len(values) \
                or values[end] - values[end - 1] >= DEGENERACY_GAP:
            if end - start > 1:
                vectors[:, start:end] = \
                    _orthonormalize_cluster(vectors[:, start:end])
            start = end
    return SpectralDecomposition(values, _fix_phases(vectors))


def matrix_function(h: ComplexMatrix, f: Callable[[float], float],
                    floor: Optional[float] = LOG_FLOOR) -> ComplexMatrix:
    """
    Apply the scalar function f to a Hermitian matrix through its
    eigenvalues. Eigenvalues below floor are clamped before f is applied,
    so logarithms and powers of singular states stay finite. Pass
    floor=None for matrices with negative eigenvalues.
    """
    values, vectors = eig_hermitian(h)
    if floor is not None:
        clamped = int(np.count_nonzero(values < floor))
        if clamped:
            logger.warning(f'clamped {clamped} eigenvalue(s) to {floor:g}')
        values = np.maximum(values, floor)
    mapped = np.array([f(float(x)) for x in values])
    return (vectors * mapped) @ dagger(vectors)


def unitary_step(h: ComplexMatrix, dt: float) -> ComplexMatrix:
    values, vectors = eig_hermitian(h)
    return (vectors * np.exp(-1j * values * dt)) @ dagger(vectors)


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    a, b = as_matrix(a), as_matrix(b)
    _check_same_dim(a, b)
    return a @ b - b @ a


def commutator_norm(a: ComplexMatrix, b: ComplexMatrix) -> float:
    return float(np.linalg.norm(commutator(a, b), 'fro'))
