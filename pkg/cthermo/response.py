import functools
import logging
from typing import Callable, NamedTuple, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .common import HERMITIAN_TOLERANCE, InvalidArgument
from .operators import (ComplexMatrix, as_matrix, commutator, dagger,
                        eig_hermitian, is_hermitian, matrix_function)
from .qubit import DrivenQubitParams, hamiltonian_at, propagator_at
from .states import DensityOperator, dephase, free_energy, thermal_state
from .trajectories import closed_model, forward_ensemble

logger = logging.getLogger(__name__)

MIN_QUADRATURE_NODES = 16

# Below this the exact work counts as zero and the deviation is reported as 0
_WORK_FLOOR = 1e-14


class ClosedProtocol(NamedTuple):
    hamiltonian: Callable[[float], ComplexMatrix]
    propagator: Callable[[float], ComplexMatrix]
    beta: float

    @classmethod
    def from_driven_qubit(cls, p: DrivenQubitParams) -> 'ClosedProtocol':
        return cls(functools.partial(hamiltonian_at, p),
                   functools.partial(propagator_at, p), p.beta)


Protocol = Union[ClosedProtocol, DrivenQubitParams]


def _as_protocol(protocol: Protocol) -> ClosedProtocol:
    if isinstance(protocol, DrivenQubitParams):
        return ClosedProtocol.from_driven_qubit(protocol)
    return protocol


class FdrReport(NamedTuple):
    """
    Exact work against the linear response prediction
    W_LR = dF + beta var(W) / 2 - Q0 + E_Q, column by column.
    """
    times: np.ndarray
    exact_work: np.ndarray
    predicted_work: np.ndarray
    predicted_without_eq: np.ndarray
    work_variance: np.ndarray
    q0: np.ndarray
    eq: np.ndarray
    deviation: np.ndarray


def _check_observable(rho: DensityOperator, L: ComplexMatrix) -> None:
    if L.shape != (rho.dim, rho.dim):
        raise InvalidArgument(f'a {L.shape} observable doesn\'t fit a '
                              f'{rho.dim}-dimensional state')
    if not is_hermitian(L):
        raise InvalidArgument('the observable must be hermitian')


def _check_exponent(y: float) -> None:
    if not 0 < y < 1:
        raise InvalidArgument(f'the exponent must lie in (0, 1), got {y}')


def skew_information(rho: DensityOperator, L: ComplexMatrix,
                     y: float) -> float:
    """
    The signed trace tr([rho^y, L][rho^(1-y), L]). It is never positive;
    zero eigenvalues of rho are clamped before the powers are taken.
    """
    L = as_matrix(L)
    _check_observable(rho, L)
    _check_exponent(y)
    first = commutator(matrix_function(rho.matrix, lambda x: x**y, 0.0), L)
    second = commutator(matrix_function(rho.matrix, lambda x: x**(1 - y),
                                        0.0), L)
    return float(np.trace(first @ second).real)


def skew_information_spectral(rho: DensityOperator, L: ComplexMatrix,
                              y: float) -> float:
    """The same trace expanded over the eigenbasis of rho."""
    L = as_matrix(L)
    _check_observable(rho, L)
    _check_exponent(y)
    values, vectors = rho.spectrum
    p = np.maximum(values, 0.0)
    elements = np.abs(dagger(vectors) @ L @ vectors)**2
    left = p[:, None]**y - p[None, :]**y
    right = p[:, None]**(1 - y) - p[None, :]**(1 - y)
    return float(-np.sum(left * right * elements))


def quantum_correction_Q0(protocol: Protocol, t: float,
                          quadrature_nodes: int = 32) -> float:
    """
    The non-negative quantum correction of the work fluctuation
    dissipation relation, (beta / 2) int_0^1 dy (-I^y / 2), with I^y taken
    in the instantaneous Gibbs state and dH = H_t - H_0.
    """
    if quadrature_nodes < MIN_QUADRATURE_NODES:
        raise InvalidArgument(f'at least {MIN_QUADRATURE_NODES} quadrature '
                              f'nodes are needed')
    protocol = _as_protocol(protocol)
    h0 = protocol.hamiltonian(0.0)
    ht = protocol.hamiltonian(t)
    equilibrium = thermal_state(ht, protocol.beta)
    delta_h = ht - h0
    nodes, weights = leggauss(quadrature_nodes)
    ys = (nodes + 1) / 2
    total = sum(w / 2 * -skew_information_spectral(equilibrium, delta_h, y)
                for y, w in zip(ys, weights))
    return float(protocol.beta / 2 * total / 2)


def coherent_part(rho: DensityOperator, h: ComplexMatrix) -> ComplexMatrix:
    """chi = rho - rho^d, the off-diagonal part of rho in the eigenbasis of h."""
    return rho.matrix - dephase(rho, eig_hermitian(h)).matrix


def _heisenberg_work_operator(protocol: ClosedProtocol,
                              t: float) -> ComplexMatrix:
    u = protocol.propagator(t)
    return dagger(u) @ protocol.hamiltonian(t) @ u - protocol.hamiltonian(0.0)


def coherence_correction_EQ(protocol: Protocol, t: float,
                            chi: ComplexMatrix) -> float:
    """tr[(U^dagger H_t U - H_0) chi]."""
    chi = as_matrix(chi)
    protocol = _as_protocol(protocol)
    if not is_hermitian(chi):
        raise InvalidArgument('chi must be hermitian')
    if abs(np.trace(chi)) > HERMITIAN_TOLERANCE:
        raise InvalidArgument('chi must be traceless')
    return float(np.trace(_heisenberg_work_operator(protocol, t) @ chi).real)


def _relative_deviation(exact: float, predicted: float) -> float:
    if abs(exact) < _WORK_FLOOR:
        return 0.0
    return abs(exact - predicted) / abs(exact)


def fdr_work_prediction(protocol: Protocol, rho0: DensityOperator,
                        times: Sequence[float],
                        nodes: int = 32) -> FdrReport:
    """
    Compare the exact work with the linear response prediction. The work
    variance comes from the trajectory network of the dephased initial
    state, so the population part and E_Q add up to the exact work.
    """
    if len(times) == 0:
        raise InvalidArgument('at least one time is needed')
    protocol = _as_protocol(protocol)
    h0 = protocol.hamiltonian(0.0)
    dephased = dephase(rho0, eig_hermitian(h0))
    chi = coherent_part(rho0, h0)
    model = closed_model(protocol.hamiltonian, protocol.propagator,
                         protocol.beta)
    f0 = free_energy(h0, protocol.beta)
    columns = []
    for t in times:
        t = float(t)
        heisenberg = _heisenberg_work_operator(protocol, t)
        exact = float(np.trace(heisenberg @ rho0.matrix).real)
        variance = forward_ensemble(model, dephased, t).variance('work')
        q0 = quantum_correction_Q0(protocol, t, nodes)
        eq = coherence_correction_EQ(protocol, t, chi)
        delta_f = free_energy(protocol.hamiltonian(t), protocol.beta) - f0
        without_eq = delta_f + protocol.beta * variance / 2 - q0
        predicted = without_eq + eq
        columns.append((t, exact, predicted, without_eq, variance, q0, eq,
                        _relative_deviation(exact, predicted)))
    logger.debug(f'fdr prediction at {len(columns)} times')
    return FdrReport(*(np.array(c) for c in zip(*columns)))
