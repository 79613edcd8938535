import dataclasses
import enum
import functools
import logging
import math
from typing import (Callable, Iterator, List, NamedTuple, Optional, Sequence,
                    Tuple, Union)

import numpy as np

from .common import (POSITIVITY_TOLERANCE, IntegratorError, InvalidArgument,
                     ModelError)
from .operators import (SIGMA_MINUS, SIGMA_PLUS, ComplexMatrix, dagger,
                        eig_hermitian, unitary_step)
from .qubit import (DrivenQubitParams, hamiltonian_at, hamiltonian_rate_at,
                    rotating_hamiltonian, z_rotation)
from .states import (DensityOperator, athermality_D, coherence_C,
                     internal_energy, von_neumann_entropy)

logger = logging.getLogger(__name__)

HamiltonianProtocol = Callable[[float], ComplexMatrix]

# Denominators of the decoherence rate at or below this are treated as zero
_RATE_FLOOR = 1e-15
# Central difference step for dH/dt when the model has no closed form
_DIFFERENCE_STEP = 1e-6


class Frame(enum.Enum):
    ROTATING = 'rotating'
    LAB = 'lab'


class Jump(NamedTuple):
    operator: ComplexMatrix
    rate: float


@dataclasses.dataclass(frozen=True)
class LindbladModel:
    """
    A master equation integrated in some frame. hamiltonian(t) is the
    generator in that frame, frame(t) the unitary taking integration
    frame states to the lab, and lab_hamiltonian(t) the lab frame energy
    operator. hamiltonian_rate(t) is the lab frame dH/dt; without it the
    energy operator is differenced numerically. Without a frame the
    integration frame is the lab.

    The jump operators must only pick up phases under the frame change,
    so that the dissipator looks the same in both frames.
    """
    hamiltonian: HamiltonianProtocol
    jumps: Tuple[Jump, ...]
    beta: float
    nbar: float
    frame: Optional[Callable[[float], ComplexMatrix]] = None
    lab_hamiltonian: Optional[HamiltonianProtocol] = None
    hamiltonian_rate: Optional[HamiltonianProtocol] = None

    def __post_init__(self) -> None:
        if any(j.rate < 0 for j in self.jumps):
            raise InvalidArgument('jump rates must be non-negative')
        if self.nbar < 0:
            raise InvalidArgument('nbar must be non-negative')

    def energy_operator(self, t: float) -> ComplexMatrix:
        if self.lab_hamiltonian is not None:
            return self.lab_hamiltonian(t)
        return self.hamiltonian(t)

    def energy_rate(self, t: float) -> ComplexMatrix:
        if self.hamiltonian_rate is not None:
            return self.hamiltonian_rate(t)
        step = _DIFFERENCE_STEP
        return (self.energy_operator(t + step)
                - self.energy_operator(t - step)) / (2 * step)

    def to_lab(self, m: ComplexMatrix, t: float) -> ComplexMatrix:
        if self.frame is None:
            return m
        v = self.frame(t)
        return v @ m @ dagger(v)

    def from_lab(self, m: ComplexMatrix, t: float) -> ComplexMatrix:
        if self.frame is None:
            return m
        v = self.frame(t)
        return dagger(v) @ m @ v


def thermal_occupation(omega: float, beta: float) -> float:
    if beta * omega <= 0:
        raise InvalidArgument('the thermal occupation needs beta * omega > 0')
    return 1 / math.expm1(beta * omega)


def _constant_generator(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    return rotating_hamiltonian(p)


def _drive_frame(omega: float, t: float) -> ComplexMatrix:
    return z_rotation(omega * t)


def qubit_bath_model(p: DrivenQubitParams, gamma: float,
                     nbar: Optional[float] = None,
                     frame: Frame = Frame.ROTATING) -> LindbladModel:
    if gamma < 0:
        raise InvalidArgument('gamma must be non-negative')
    if nbar is None:
        nbar = thermal_occupation(p.omega0, p.beta)
    jumps = (Jump(SIGMA_MINUS, gamma * (nbar + 1)),
             Jump(SIGMA_PLUS, gamma * nbar))
    lab = functools.partial(hamiltonian_at, p)
    rate = functools.partial(hamiltonian_rate_at, p)
    if frame is Frame.LAB:
        return LindbladModel(lab, jumps, p.beta, nbar, hamiltonian_rate=rate)
    return LindbladModel(functools.partial(_constant_generator, p), jumps,
                         p.beta, nbar,
                         frame=functools.partial(_drive_frame, p.omega),
                         lab_hamiltonian=lab, hamiltonian_rate=rate)


def _dissipator(m: LindbladModel, rho: ComplexMatrix) -> ComplexMatrix:
    out = np.zeros_like(rho)
    for operator, rate in m.jumps:
        if rate == 0:
            continue
        ld = dagger(operator)
        decay = ld @ operator
        out += rate * (operator @ rho @ ld
                       - (decay @ rho + rho @ decay) / 2)
    return out


def _rhs(m: LindbladModel, rho: ComplexMatrix, t: float) -> ComplexMatrix:
    h = m.hamiltonian(t)
    return -1j * (h @ rho - rho @ h) + _dissipator(m, rho)


def lindblad_rhs(m: LindbladModel, rho: Union[DensityOperator, ComplexMatrix],
                 t: float) -> ComplexMatrix:
    matrix = rho.matrix if isinstance(rho, DensityOperator) else rho
    return _rhs(m, np.asarray(matrix, dtype=complex), t)


def evolve_unitary(h: HamiltonianProtocol, rho0: DensityOperator,
                   t_end: float, dt: float
                   ) -> Tuple[DensityOperator, ComplexMatrix]:
    """
    Midpoint exponential stepping of the propagator. The step is shrunk
    so that a whole number of steps lands on t_end.
    """
    if dt <= 0:
        raise InvalidArgument('dt must be positive')
    steps = max(0, math.ceil(t_end / dt - 1e-9))
    u = np.eye(rho0.dim, dtype=complex)
    if steps:
        step = t_end / steps
        for k in range(steps):
            u = unitary_step(h((k + 0.5) * step), step) @ u
    return rho0.transformed(u), u


class ThermoRecord(NamedTuple):
    t: float
    energy: float
    heat: float
    work: float
    work_flow: float
    coherence: float
    athermality: float
    entropy: float
    state: DensityOperator


class ThermoTimeSeries:
    """
    Thermodynamic bookkeeping along one run. heat is the cumulative heat
    absorbed by the system and work the cumulative work done on it, the
    energy change minus the heat. work_flow is the same work integrated
    independently from the power tr(rho dH/dt).
    """

    def __init__(self, records: Sequence[ThermoRecord], beta: float) -> None:
        if not records:
            raise InvalidArgument('a time series needs at least one record')
        self._records = list(records)
        self.beta = beta

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[ThermoRecord]:
        return iter(self._records)

    def __getitem__(self, index: int) -> ThermoRecord:
        return self._records[index]

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self._records])

    @property
    def times(self) -> np.ndarray:
        return self._column('t')

    @property
    def energy(self) -> np.ndarray:
        return self._column('energy')

    @property
    def heat(self) -> np.ndarray:
        return self._column('heat')

    @property
    def work(self) -> np.ndarray:
        return self._column('work')

    @property
    def coherence(self) -> np.ndarray:
        return self._column('coherence')

    @property
    def athermality(self) -> np.ndarray:
        return self._column('athermality')

    @property
    def entropy(self) -> np.ndarray:
        return self._column('entropy')

    @property
    def states(self) -> List[DensityOperator]:
        return [r.state for r in self._records]

    @property
    def work_flow(self) -> np.ndarray:
        return self._column('work_flow')

    def first_law_residual(self) -> float:
        energy = self.energy
        return float(np.max(np.abs(self.work_flow + self.heat
                                   - (energy - energy[0]))))


def _record(t: float, rho: DensityOperator, h: ComplexMatrix, beta: float,
            energy0: float, heat: float,
            work_flow: Optional[float] = None) -> ThermoRecord:
    basis = eig_hermitian(h)
    energy = internal_energy(rho, h)
    work = energy - energy0 - heat
    return ThermoRecord(t=t, energy=energy, heat=heat, work=work,
                        work_flow=work if work_flow is None else work_flow,
                        coherence=coherence_C(rho, h, basis),
                        athermality=athermality_D(rho, h, beta, basis),
                        entropy=von_neumann_entropy(rho), state=rho)


def closed_time_series(h: HamiltonianProtocol,
                       propagator: Callable[[float], ComplexMatrix],
                       rho0: DensityOperator, beta: float,
                       times: Sequence[float]) -> ThermoTimeSeries:
    """Closed evolution through a known propagator, sampled at times."""
    energy0 = rho0.expectation(h(0.0))
    records = [_record(float(t), rho0.transformed(propagator(t)), h(t), beta,
                       energy0, 0.0)
               for t in times]
    return ThermoTimeSeries(records, beta)


def _flows(m: LindbladModel, rho: ComplexMatrix,
           t: float) -> Tuple[float, float]:
    """Power tr(rho dH/dt) and heat flow tr(H D[rho]) in the lab frame."""
    power = np.einsum('ij,ji->', m.energy_rate(t), m.to_lab(rho, t))
    dissipated = m.to_lab(_dissipator(m, rho), t)
    heat = np.einsum('ij,ji->', m.energy_operator(t), dissipated)
    return float(power.real), float(heat.real)


def _lab_state(m: LindbladModel, rho: ComplexMatrix,
               t: float) -> DensityOperator:
    try:
        return DensityOperator(m.to_lab(rho, t), POSITIVITY_TOLERANCE)
    except InvalidArgument as e:
        raise IntegratorError(f'the state left the physical region at '
                              f't={t:g} ({e}); try a smaller dt')


def evolve_lindblad(m: LindbladModel, rho0: DensityOperator, t_end: float,
                    dt: float, record_every: int = 1) -> ThermoTimeSeries:
    """
    Fixed step fourth order Runge-Kutta integration of the master
    equation from 0 to t_end, recording every record_every steps.

    The number of steps is rounded up to a multiple of record_every and
    the step shrunk to fit, so the last record is at t_end. Power and
    heat flow are integrated with the Runge-Kutta weights over the stage
    states, so with a time independent generator their sum matches the
    energy change to rounding.
    """
    if dt <= 0 or t_end < 0:
        raise InvalidArgument('dt must be positive and t_end non-negative')
    if record_every < 1:
        raise InvalidArgument('record_every must be at least 1')
    steps = max(1, math.ceil(t_end / dt - 1e-9))
    steps = record_every * math.ceil(steps / record_every)
    step = t_end / steps
    logger.debug(f'integrating {steps} steps of {step:.6g} up to {t_end:g}')
    beta = m.beta
    rho = m.from_lab(np.array(rho0.matrix, dtype=complex), 0.0)
    energy0 = rho0.expectation(m.energy_operator(0.0))
    heat = 0.0
    work_flow = 0.0
    records = [_record(0.0, rho0, m.energy_operator(0.0), beta, energy0, 0.0)]
    for k in range(steps):
        t = k * step
        k1 = _rhs(m, rho, t)
        s2 = rho + step / 2 * k1
        k2 = _rhs(m, s2, t + step / 2)
        s3 = rho + step / 2 * k2
        k3 = _rhs(m, s3, t + step / 2)
        s4 = rho + step * k3
        k4 = _rhs(m, s4, t + step)
        stages = ((rho, t, 1), (s2, t + step / 2, 2), (s3, t + step / 2, 2),
                  (s4, t + step, 1))
        for state, time, weight in stages:
            power, flow = _flows(m, state, time)
            work_flow += step / 6 * weight * power
            heat += step / 6 * weight * flow
        rho = rho + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t_next = (k + 1) * step
        lowest = np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0]
        if lowest < -POSITIVITY_TOLERANCE:
            raise IntegratorError(f'negative eigenvalue {lowest:.3g} at '
                                  f't={t_next:g}; try a smaller dt')
        if (k + 1) % record_every == 0:
            records.append(_record(t_next, _lab_state(m, rho, t_next),
                                   m.energy_operator(t_next), beta, energy0,
                                   heat, work_flow))
    return ThermoTimeSeries(records, beta)


def _generalized_covariance(rho: ComplexMatrix, x: ComplexMatrix,
                            y: ComplexMatrix) -> float:
    return float((np.trace(rho @ x @ y @ rho)
                  - np.trace(x @ rho @ y @ rho)).real)


def decoherence_time_general(m: LindbladModel,
                             rho0: DensityOperator) -> float:
    """
    Short time purity decay time of rho0 under the dissipator of m.
    Returns inf when the dissipator leaves the purity unchanged to first
    order.
    """
    rho = m.from_lab(np.array(rho0.matrix, dtype=complex), 0.0)
    denominator = 2 * sum(rate * _generalized_covariance(rho, dagger(op), op)
                          for op, rate in m.jumps)
    if abs(denominator) <= _RATE_FLOOR:
        return math.inf
    if denominator < 0:
        raise ModelError('the dissipator increases the purity of this state')
    return rho0.purity / denominator


def _qubit_time(rate: float) -> float:
    if abs(rate) <= _RATE_FLOOR:
        return math.inf
    if rate < 0:
        raise ModelError('the dissipator increases the purity of this state')
    return 1 / rate


def decoherence_time_qubit(bloch: Tuple[float, float], gamma: float,
                           nbar: float) -> float:
    """bloch is (r_perp, r_z) with r_z = +1 the excited state."""
    r_perp, r_z = bloch
    r2 = r_perp**2 + r_z**2
    if math.sqrt(r2) > 1 + 1e-12:
        raise InvalidArgument('Bloch vector is longer than 1')
    rate = 2 / (1 + r2) * (gamma * (nbar + 0.5) * (r2 + r_z**2)
                           + gamma * r_z)
    return _qubit_time(rate)


def decoherence_time_mismatch(r_perp: float, gamma: float, nbar: float,
                              mbar: float) -> float:
    """
    Decoherence time of a qubit whose populations are thermal at
    occupation mbar while the bath sits at nbar.
    """
    r_z = -1 / (2 * mbar + 1)
    r2 = r_perp**2 + r_z**2
    if math.sqrt(r2) > 1 + 1e-12:
        raise InvalidArgument('Bloch vector is longer than 1')
    purity = (1 + r2) / 2
    mismatch = (1 / (mbar + 0.5) - 1 / (nbar + 0.5)) / (2 * mbar + 1)
    return _qubit_time(gamma * (nbar + 0.5) / purity
                       * (r_perp**2 + mismatch))


def coupling_for_ratio(p: DrivenQubitParams, rho0: DensityOperator,
                       ratio: float, nbar: Optional[float] = None) -> float:
    """The bath coupling gamma that makes tau_D equal ratio * tau_W."""
    if ratio <= 0:
        raise InvalidArgument('the ratio must be positive')
    unit = decoherence_time_general(qubit_bath_model(p, 1.0, nbar), rho0)
    if math.isinf(unit):
        raise ModelError('the initial state doesn\'t decohere')
    return unit / (ratio * p.extraction_time)


def work_extraction_time(series: ThermoTimeSeries) -> Optional[float]:
    """
    Time of maximal work extraction, refined by a parabola through the
    samples around the grid minimum. None when no work is extracted or
    the minimum sits on the edge of the grid.
    """
    work = series.work
    times = series.times
    k = int(np.argmin(work))
    if work[k] >= 0 or k == 0 or k == len(work) - 1:
        return None
    t0, t1, t2 = times[k - 1:k + 2]
    w0, w1, w2 = work[k - 1:k + 2]
    numerator = (t1 - t0)**2 * (w1 - w2) - (t1 - t2)**2 * (w1 - w0)
    denominator = (t1 - t0) * (w1 - w2) - (t1 - t2) * (w1 - w0)
    if denominator == 0:
        return float(t1)
    return float(t1 - numerator / (2 * denominator))
