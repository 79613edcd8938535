import dataclasses
import enum
import functools
import itertools
import logging
import math
from typing import Any, Callable, Dict, List, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .common import DEGENERACY_GAP, PROBABILITY_FLOOR, InvalidArgument
from .operators import (IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z,
                        ComplexMatrix, SpectralDecomposition, Subsystem,
                        commutator_norm, dagger, eig_hermitian, kron,
                        partial_trace, unitary_step)
from .qubit import DrivenQubitParams, hamiltonian_at, propagator_at
from .states import DensityOperator, free_energy, populations

logger = logging.getLogger(__name__)


class Direction(enum.Enum):
    FORWARD = 'forward'
    BACKWARD = 'backward'


@dataclasses.dataclass(frozen=True)
class CompositeModel:
    """
    A system driven by system_hamiltonian(t) and coupled through
    interaction to a bath with the time independent bath_hamiltonian.
    propagator(t) evolves the whole composite from 0 to t. A bath of
    dimension one makes the system closed.
    """
    system_hamiltonian: Callable[[float], ComplexMatrix]
    bath_hamiltonian: ComplexMatrix
    interaction: ComplexMatrix
    beta: float
    propagator: Callable[[float], ComplexMatrix]

    @property
    def system_dim(self) -> int:
        return int(self.system_hamiltonian(0.0).shape[0])

    @property
    def bath_dim(self) -> int:
        return int(self.bath_hamiltonian.shape[0])

    @property
    def closed(self) -> bool:
        return self.bath_dim == 1

    def local_hamiltonian(self, t: float) -> ComplexMatrix:
        return kron(self.system_hamiltonian(t), np.eye(self.bath_dim)) \
            + kron(np.eye(self.system_dim), self.bath_hamiltonian)

    def energy_conservation(self, t: float) -> float:
        return commutator_norm(self.local_hamiltonian(t), self.interaction)


def _evolve_constant(h: ComplexMatrix, t: float) -> ComplexMatrix:
    return unitary_step(h, t)


def closed_model(hamiltonian: Callable[[float], ComplexMatrix],
                 propagator: Callable[[float], ComplexMatrix],
                 beta: float) -> CompositeModel:
    dim = hamiltonian(0.0).shape[0]
    return CompositeModel(hamiltonian, np.zeros((1, 1), dtype=complex),
                          np.zeros((dim, dim), dtype=complex), beta,
                          propagator)


def driven_qubit_model(p: DrivenQubitParams) -> CompositeModel:
    return closed_model(functools.partial(hamiltonian_at, p),
                        functools.partial(propagator_at, p), p.beta)


def _constant(h: ComplexMatrix, t: float) -> ComplexMatrix:
    return h


def build_exchange_model(coupling: float, omega0: float,
                         beta: float) -> CompositeModel:
    """
    An undriven qubit exchanging excitations with one resonant bath
    qubit. The flip-flop interaction commutes with the local energy.
    """
    if coupling < 0:
        raise InvalidArgument('the coupling must be non-negative')
    system = omega0 * SIGMA_Z / 2
    bath = omega0 * SIGMA_Z / 2
    interaction = coupling * (kron(SIGMA_PLUS, SIGMA_MINUS)
                              + kron(SIGMA_MINUS, SIGMA_PLUS))
    total = kron(system, IDENTITY) + kron(IDENTITY, bath) + interaction
    return CompositeModel(functools.partial(_constant, system), bath,
                          interaction, beta,
                          functools.partial(_evolve_constant, total))


class Trajectory(NamedTuple):
    i: int
    m: int
    mu: int
    j: int
    nu: int
    n: int
    energy_start: float
    energy_end: float
    bath_energy_start: float
    bath_energy_end: float
    p_start: float
    p_end: float
    p_bath_start: float
    p_bath_end: float


class StochasticRecord(NamedTuple):
    delta_s: float
    delta_s_bath: float
    heat: float
    work: float
    c0: float
    ct: float
    d0: float
    dt: float
    forward: float
    backward: float
    excluded: bool

    @property
    def entropy_production(self) -> float:
        """The exponent of the detailed fluctuation theorem."""
        return self.delta_s + self.delta_s_bath


class PathEntry(NamedTuple):
    trajectory: Trajectory
    record: StochasticRecord


@dataclasses.dataclass(frozen=True)
class NetworkContext:
    """Every eigensystem and probability table of one protocol run."""
    beta: float
    time: float
    delta_f: float
    rho0: DensityOperator
    rho_t: DensityOperator
    energy0: SpectralDecomposition
    energy_t: SpectralDecomposition
    bath: SpectralDecomposition
    bath_probabilities: np.ndarray
    dephased0: np.ndarray
    dephased_t: np.ndarray
    equilibrium0: np.ndarray
    equilibrium_t: np.ndarray
    conditional0: np.ndarray
    conditional_t: np.ndarray
    # transition[j, nu, i, mu] = |<s_j e_nu|U|s_i e_mu>|^2
    transition: np.ndarray
    # backward_transition[i, mu, j, nu] = |<s_i e_mu|U^dagger|s_j e_nu>|^2
    backward_transition: np.ndarray
    degenerate: bool

    @property
    def p0(self) -> np.ndarray:
        return self.rho0.probabilities

    @property
    def pt(self) -> np.ndarray:
        return self.rho_t.probabilities

    @property
    def microreversibility_residual(self) -> float:
        return float(np.max(np.abs(
            self.transition - self.backward_transition.transpose(2, 3, 0, 1))))


def conditional_probability(state_basis: SpectralDecomposition,
                            energy_basis: SpectralDecomposition,
                            i: int, m: int) -> float:
    if state_basis.dim != energy_basis.dim:
        raise InvalidArgument('the bases have different dimensions')
    overlap = energy_basis.vector(m).conj() @ state_basis.vector(i)
    return float(abs(overlap)**2)


def _conditional_table(state_basis: SpectralDecomposition,
                       energy_basis: SpectralDecomposition) -> np.ndarray:
    overlaps = dagger(state_basis.eigenvectors) @ energy_basis.eigenvectors
    return np.abs(overlaps)**2


def _gibbs(values: np.ndarray, beta: float) -> np.ndarray:
    log_weights = -beta * values
    return np.exp(log_weights - logsumexp(log_weights))


def _is_degenerate(spectrum: SpectralDecomposition) -> bool:
    return bool(np.any(np.diff(spectrum.eigenvalues) < DEGENERACY_GAP))


def network_context(model: CompositeModel, rho0: DensityOperator,
                    t: float) -> NetworkContext:
    if model.beta <= 0:
        raise InvalidArgument('the trajectory network needs beta > 0')
    if rho0.dim != model.system_dim:
        raise InvalidArgument(f'a {rho0.dim}-dimensional state doesn\'t fit '
                              f'a {model.system_dim}-dimensional system')
    dims = (model.system_dim, model.bath_dim)
    h0 = model.system_hamiltonian(0.0)
    ht = model.system_hamiltonian(t)
    bath = eig_hermitian(model.bath_hamiltonian)
    bath_p = _gibbs(bath.eigenvalues, model.beta)
    bath_state = (bath.eigenvectors * bath_p) @ dagger(bath.eigenvectors)
    u = model.propagator(t)
    composite = u @ kron(rho0.matrix, bath_state) @ dagger(u)
    rho_t = DensityOperator(partial_trace(composite, dims, Subsystem.A))
    energy0 = eig_hermitian(h0)
    energy_t = eig_hermitian(ht)
    start = kron(rho0.spectrum.eigenvectors, bath.eigenvectors)
    end = kron(rho_t.spectrum.eigenvectors, bath.eigenvectors)
    shape = (dims[0], dims[1], dims[0], dims[1])
    transition = (np.abs(dagger(end) @ u @ start)**2).reshape(shape)
    backward = (np.abs(dagger(start) @ dagger(u) @ end)**2).reshape(shape)
    degenerate = _is_degenerate(rho0.spectrum) \
        or _is_degenerate(rho_t.spectrum)
    if degenerate:
        logger.warning('degenerate state spectrum: eigenstate labels follow '
                       'the canonical basis convention')
    return NetworkContext(
        beta=model.beta, time=t,
        delta_f=free_energy(ht, model.beta) - free_energy(h0, model.beta),
        rho0=rho0, rho_t=rho_t, energy0=energy0, energy_t=energy_t,
        bath=bath, bath_probabilities=bath_p,
        dephased0=populations(rho0, energy0),
        dephased_t=populations(rho_t, energy_t),
        equilibrium0=_gibbs(energy0.eigenvalues, model.beta),
        equilibrium_t=_gibbs(energy_t.eigenvalues, model.beta),
        conditional0=_conditional_table(rho0.spectrum, energy0),
        conditional_t=_conditional_table(rho_t.spectrum, energy_t),
        transition=transition, backward_transition=backward,
        degenerate=degenerate)


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def stochastic_record(trajectory: Trajectory,
                      context: NetworkContext) -> StochasticRecord:
    """
    Path probabilities and stochastic quantities of one trajectory. The
    forward path runs through U and the backward path through U^dagger.
    """
    i, m, mu, j, nu, n = trajectory[:6]
    joint = float(context.transition[j, nu, i, mu])
    joint_backward = float(context.backward_transition[i, mu, j, nu])
    cond0 = float(context.conditional0[i, m])
    cond_t = float(context.conditional_t[j, n])
    forward = trajectory.p_start * trajectory.p_bath_start \
        * cond0 * joint * cond_t
    backward = trajectory.p_end * trajectory.p_bath_end \
        * cond_t * joint_backward * cond0
    dephased0 = float(context.dephased0[m])
    dephased_t = float(context.dephased_t[n])
    logged = (trajectory.p_start, trajectory.p_end, trajectory.p_bath_start,
              trajectory.p_bath_end, dephased0, dephased_t)
    excluded = forward <= PROBABILITY_FLOOR or backward <= PROBABILITY_FLOOR \
        or min(logged) <= PROBABILITY_FLOOR
    delta_s_bath = _log(trajectory.p_bath_start) \
        - _log(trajectory.p_bath_end)
    return StochasticRecord(
        delta_s=_log(trajectory.p_start) - _log(trajectory.p_end),
        delta_s_bath=delta_s_bath,
        heat=delta_s_bath / context.beta,
        work=trajectory.energy_end - trajectory.energy_start
        + trajectory.bath_energy_end - trajectory.bath_energy_start,
        c0=_log(trajectory.p_start) - _log(dephased0),
        ct=_log(trajectory.p_end) - _log(dephased_t),
        d0=_log(dephased0) - _log(float(context.equilibrium0[m])),
        dt=_log(dephased_t) - _log(float(context.equilibrium_t[n])),
        forward=forward, backward=backward, excluded=excluded)


class PathEnsemble:
    def __init__(self, entries: List[PathEntry], beta: float, delta_f: float,
                 time: float, direction: Direction,
                 degenerate: bool = False) -> None:
        self.entries = entries
        self.beta = beta
        self.delta_f = delta_f
        self.time = time
        self.direction = direction
        self.degenerate = degenerate

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def probabilities(self) -> np.ndarray:
        if self.direction is Direction.FORWARD:
            return np.array([e.record.forward for e in self.entries])
        return np.array([e.record.backward for e in self.entries])

    @property
    def included(self) -> List[PathEntry]:
        return [e for e in self.entries if not e.record.excluded]

    @property
    def excluded_count(self) -> int:
        return sum(1 for e in self.entries if e.record.excluded)

    def total(self) -> float:
        return float(np.sum(self.probabilities))

    def average(self, field: str) -> float:
        """Probability weighted mean of a record field over included paths."""
        weights = self.probabilities
        total = 0.0
        for weight, entry in zip(weights, self.entries):
            if not entry.record.excluded:
                total += weight * getattr(entry.record, field)
        return total

    def variance(self, field: str) -> float:
        mean = self.average(field)
        weights = self.probabilities
        return sum(weight * (getattr(entry.record, field) - mean)**2
                   for weight, entry in zip(weights, self.entries)
                   if not entry.record.excluded)


def _enumerate(context: NetworkContext) -> List[PathEntry]:
    d_s = context.rho0.dim
    d_r = len(context.bath_probabilities)
    e0 = context.energy0.eigenvalues
    et = context.energy_t.eigenvalues
    eb = context.bath.eigenvalues
    p0, pt = context.p0, context.pt
    pb = context.bath_probabilities
    entries = []
    for i, m, mu, j, nu, n in itertools.product(range(d_s), range(d_s),
                                                range(d_r), range(d_s),
                                                range(d_r), range(d_s)):
        trajectory = Trajectory(
            i, m, mu, j, nu, n,
            energy_start=float(e0[m]), energy_end=float(et[n]),
            bath_energy_start=float(eb[mu]), bath_energy_end=float(eb[nu]),
            p_start=float(p0[i]), p_end=float(pt[j]),
            p_bath_start=float(pb[mu]), p_bath_end=float(pb[nu]))
        entries.append(PathEntry(trajectory,
                                 stochastic_record(trajectory, context)))
    return entries


def _ensemble(context: NetworkContext, direction: Direction) -> PathEnsemble:
    return PathEnsemble(_enumerate(context), context.beta, context.delta_f,
                        context.time, direction, context.degenerate)


def forward_ensemble(model: CompositeModel, rho0: DensityOperator,
                     t: float) -> PathEnsemble:
    return _ensemble(network_context(model, rho0, t), Direction.FORWARD)


def backward_ensemble(model: CompositeModel, rho0: DensityOperator,
                      t: float) -> PathEnsemble:
    """
    The time reversed network. It starts from rho_t, which is derived
    here from rho0 since both eigenbases enter every path.
    """
    return _ensemble(network_context(model, rho0, t), Direction.BACKWARD)


def _exponent(record: StochasticRecord, beta: float, delta_f: float) -> float:
    return beta * (record.work - delta_f) - (record.ct - record.c0) \
        - (record.dt - record.d0)


def detailed_ft_residuals(fw: PathEnsemble, bw: PathEnsemble) -> List[float]:
    if len(fw) != len(bw) or any(
            a.trajectory[:6] != b.trajectory[:6]
            for a, b in zip(fw.entries, bw.entries)):
        raise InvalidArgument('the ensembles don\'t enumerate the same paths')
    residuals = []
    for a, b in zip(fw.entries, bw.entries):
        if a.record.excluded or b.record.excluded:
            continue
        ratio = math.log(a.record.forward) - math.log(b.record.backward)
        residuals.append(abs(ratio - _exponent(a.record, fw.beta,
                                               fw.delta_f)))
    return residuals


def integral_ft(fw: PathEnsemble) -> float:
    return float(sum(e.record.forward
                     * math.exp(-_exponent(e.record, fw.beta, fw.delta_f))
                     for e in fw.included))


class JensenReport(NamedTuple):
    lhs: float
    rhs: float
    slack: float
    w_max: float
    extraction_possible: bool


def jensen_bound_report(fw: PathEnsemble) -> JensenReport:
    lhs = fw.beta * (fw.average('work') - fw.delta_f)
    rhs = fw.average('ct') - fw.average('c0') \
        + fw.average('dt') - fw.average('d0')
    return JensenReport(lhs=lhs, rhs=rhs, slack=lhs - rhs,
                        w_max=-fw.delta_f - rhs / fw.beta,
                        extraction_possible=rhs < 0)


def ft_report(model: CompositeModel, rho0: DensityOperator,
              t: float) -> Dict[str, Any]:
    context = network_context(model, rho0, t)
    fw = _ensemble(context, Direction.FORWARD)
    bw = _ensemble(context, Direction.BACKWARD)
    residuals = detailed_ft_residuals(fw, bw)
    jensen = jensen_bound_report(fw)
    logger.info(f'{len(fw)} paths at t={t:g}, {fw.excluded_count} excluded')
    return {
        'time': t,
        'paths': len(fw),
        'excluded_paths': fw.excluded_count,
        'degenerate': context.degenerate,
        'sum_forward': fw.total(),
        'sum_backward': bw.total(),
        'integral_ft': integral_ft(fw),
        'max_detailed_residual': max(residuals, default=0.0),
        'microreversibility_residual': context.microreversibility_residual,
        'energy_conservation': model.energy_conservation(t),
        'jensen': jensen._asdict(),
    }
