import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .common import (ENTROPY_FLOOR, STATE_TOLERANCE, SUPPORT_TOLERANCE,
                     InvalidArgument)
from .operators import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, ComplexMatrix,
                        SpectralDecomposition, as_matrix, dagger,
                        eig_hermitian, is_hermitian)

logger = logging.getLogger(__name__)


class DensityOperator:
    """
    A positive, unit-trace, Hermitian matrix. The matrix is validated
    once on construction and never changes afterwards, so the spectral
    decomposition is computed eagerly and shared.
    """

    def __init__(self, matrix: ComplexMatrix,
                 atol: float = STATE_TOLERANCE) -> None:
        m = as_matrix(matrix)
        if not is_hermitian(m, atol):
            raise InvalidArgument('density operator is not Hermitian')
        m = (m + dagger(m)) / 2
        trace = np.trace(m).real
        if abs(trace - 1) > atol:
            raise InvalidArgument(f'density operator has trace {trace:.12g}')
        spectrum = eig_hermitian(m)
        if spectrum.eigenvalues[0] < -atol:
            raise InvalidArgument(f'density operator has negative eigenvalue '
                                  f'{spectrum.eigenvalues[0]:.3g}')
        m.setflags(write=False)
        self._matrix = m
        self._spectrum = spectrum

    def __repr__(self) -> str:
        return f'DensityOperator(dim={self.dim}, purity={self.purity:.6g})'

    @property
    def matrix(self) -> ComplexMatrix:
        return self._matrix

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def spectrum(self) -> SpectralDecomposition:
        return self._spectrum

    @property
    def probabilities(self) -> np.ndarray:
        return np.clip(self._spectrum.eigenvalues, 0.0, 1.0)

    @property
    def purity(self) -> float:
        return float(np.einsum('ij,ji->', self._matrix, self._matrix).real)

    def expectation(self, h: ComplexMatrix) -> float:
        h = as_matrix(h)
        if h.shape != self._matrix.shape:
            raise InvalidArgument(f'dimension mismatch: {h.shape} and '
                                  f'{self._matrix.shape}')
        return float(np.einsum('ij,ji->', self._matrix, h).real)

    def bloch_vector(self) -> np.ndarray:
        if self.dim != 2:
            raise InvalidArgument('only qubit states have a Bloch vector')
        return np.array([self.expectation(s)
                         for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])

    def with_eigenvectors(self, vectors: ComplexMatrix,
                          atol: float = STATE_TOLERANCE
                          ) -> 'DensityOperator':
        """
        The same state labelled by another eigenbasis. Only degenerate
        spectra leave a choice; vectors must diagonalize the matrix with
        the eigenvalues in their current order.
        """
        vectors = as_matrix(vectors)
        if vectors.shape != self._matrix.shape:
            raise InvalidArgument(f'dimension mismatch: {vectors.shape} and '
                                  f'{self._matrix.shape}')
        if not np.allclose(dagger(vectors) @ vectors, np.eye(self.dim),
                           rtol=0, atol=atol):
            raise InvalidArgument('eigenvectors must be orthonormal')
        values = self._spectrum.eigenvalues
        if not np.allclose(dagger(vectors) @ self._matrix @ vectors,
                           np.diag(values), rtol=0, atol=atol):
            raise InvalidArgument('vectors don\'t diagonalize the state')
        relabeled = DensityOperator(self._matrix, atol)
        relabeled._spectrum = SpectralDecomposition(values, vectors)
        return relabeled

    def transformed(self, u: ComplexMatrix,
                    atol: float = STATE_TOLERANCE) -> 'DensityOperator':
        return DensityOperator(u @ self._matrix @ dagger(u), atol)

    @classmethod
    def from_bloch(cls, r: Sequence[float],
                   atol: float = STATE_TOLERANCE) -> 'DensityOperator':
        rx, ry, rz = (float(x) for x in r)
        if math.sqrt(rx**2 + ry**2 + rz**2) > 1 + atol:
            raise InvalidArgument('Bloch vector is longer than 1')
        return cls((IDENTITY + rx * SIGMA_X + ry * SIGMA_Y + rz * SIGMA_Z) / 2,
                   atol)

    @classmethod
    def pure(cls, psi: Sequence[complex]) -> 'DensityOperator':
        v = np.asarray(psi, dtype=complex)
        norm = np.linalg.norm(v)
        if v.ndim != 1 or norm == 0:
            raise InvalidArgument('expected a nonzero state vector')
        v = v / norm
        return cls(np.outer(v, v.conj()))


def thermal_state(h: ComplexMatrix, beta: float) -> DensityOperator:
    if beta < 0:
        raise InvalidArgument('beta must be non-negative')
    values, vectors = eig_hermitian(h)
    log_weights = -beta * values
    weights = np.exp(log_weights - logsumexp(log_weights))
    return DensityOperator((vectors * weights) @ dagger(vectors))


def free_energy(h: ComplexMatrix, beta: float) -> float:
    if beta <= 0:
        raise InvalidArgument('the free energy needs beta > 0')
    values = eig_hermitian(h).eigenvalues
    return float(-logsumexp(-beta * values) / beta)


def internal_energy(rho: DensityOperator, h: ComplexMatrix) -> float:
    return rho.expectation(h)


def _check_basis(rho: DensityOperator, basis: SpectralDecomposition) -> None:
    if basis.dim != rho.dim:
        raise InvalidArgument(f'a {basis.dim}-dimensional basis doesn\'t fit '
                              f'a {rho.dim}-dimensional state')


def populations(rho: DensityOperator,
                basis: SpectralDecomposition) -> np.ndarray:
    _check_basis(rho, basis)
    v = basis.eigenvectors
    diagonal = np.einsum('ik,ij,jk->k', v.conj(), rho.matrix, v).real
    return np.clip(diagonal, 0.0, 1.0)


def dephase(rho: DensityOperator,
            basis: SpectralDecomposition) -> DensityOperator:
    v = basis.eigenvectors
    return DensityOperator((v * populations(rho, basis)) @ dagger(v))


def _entropy_sum(p: np.ndarray) -> float:
    p = p[p > ENTROPY_FLOOR]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: DensityOperator) -> float:
    return _entropy_sum(rho.probabilities)


def relative_entropy(rho: DensityOperator, sigma: DensityOperator) -> float:
    """
    S(rho||sigma) in nats. Returns inf when rho puts more than a tiny
    amount of probability outside the support of sigma.
    """
    if rho.dim != sigma.dim:
        raise InvalidArgument(f'dimension mismatch: {rho.dim} and '
                              f'{sigma.dim}')
    q = sigma.probabilities
    mass = populations(rho, sigma.spectrum)
    support = q > ENTROPY_FLOOR
    outside = float(np.sum(mass[~support]))
    if outside > SUPPORT_TOLERANCE:
        logger.warning(f'relative entropy is infinite: {outside:.3g} of '
                       f'the probability lies outside the support')
        return math.inf
    cross = float(np.sum(mass[support] * np.log(q[support])))
    return max(0.0, -von_neumann_entropy(rho) - cross)


def coherence_C(rho: DensityOperator, h: ComplexMatrix,
                basis: Optional[SpectralDecomposition] = None) -> float:
    """Relative entropy of coherence in the eigenbasis of h."""
    if basis is None:
        basis = eig_hermitian(h)
    return relative_entropy(rho, dephase(rho, basis))


def athermality_D(rho: DensityOperator, h: ComplexMatrix, beta: float,
                  basis: Optional[SpectralDecomposition] = None) -> float:
    if basis is None:
        basis = eig_hermitian(h)
    return relative_entropy(dephase(rho, basis), thermal_state(h, beta))


def generalized_free_energy(rho: DensityOperator, h: ComplexMatrix,
                            beta: float) -> float:
    if beta <= 0:
        raise InvalidArgument('the generalized free energy needs beta > 0')
    basis = eig_hermitian(h)
    return free_energy(h, beta) + (coherence_C(rho, h, basis)
                                   + athermality_D(rho, h, beta, basis)) / beta
