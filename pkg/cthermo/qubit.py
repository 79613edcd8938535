import dataclasses
import enum
import logging
import math
from typing import Any

import numpy as np
from scipy.optimize import minimize_scalar

from .common import DEGENERACY_GAP, InvalidArgument, ModelError
from .operators import (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z, ComplexMatrix,
                        dagger, eig_hermitian)
from .states import DensityOperator

logger = logging.getLogger(__name__)


class AverageWindow(enum.Enum):
    RABI = 'rabi'
    PROTOCOL = 'protocol'


@dataclasses.dataclass(frozen=True)
class DrivenQubitParams:
    """
    A spin-1/2 with splitting omega0 in a field of amplitude g rotating
    at angular frequency omega, prepared at inverse temperature beta with
    a fraction a of the maximal energetic coherence.
    """
    omega0: float
    omega: float
    g: float
    beta: float
    a: float = 0.0

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise InvalidArgument('omega must be positive')
        if self.g < 0:
            raise InvalidArgument('g must be non-negative')
        if self.beta < 0:
            raise InvalidArgument('beta must be non-negative')
        if not 0 <= self.a <= 1:
            raise InvalidArgument('a must lie in [0, 1]')

    @property
    def delta(self) -> float:
        return self.omega0 - self.omega

    @property
    def energy_gap(self) -> float:
        return math.hypot(self.g, self.omega0)

    @property
    def rabi(self) -> float:
        return math.hypot(self.g, self.delta)

    @property
    def theta(self) -> float:
        return math.atan2(self.g, self.omega0)

    @property
    def protocol_period(self) -> float:
        return 2 * math.pi / self.omega

    @property
    def rabi_period(self) -> float:
        return 2 * math.pi / self.rabi if self.rabi > 0 else math.inf

    @property
    def extraction_time(self) -> float:
        return math.pi / self.rabi if self.rabi > 0 else math.inf

    def replace(self, **changes: Any) -> 'DrivenQubitParams':
        return dataclasses.replace(self, **changes)


def z_rotation(angle: float) -> ComplexMatrix:
    """exp(-i angle sigma_z / 2)"""
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def hamiltonian_at(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    drive = p.g / 2 * np.exp(-1j * p.omega * t)
    return np.array([[p.omega0 / 2, drive],
                     [np.conj(drive), -p.omega0 / 2]], dtype=complex)


def hamiltonian_rate_at(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    """dH/dt, the operator whose expectation is the power."""
    drive = -0.5j * p.g * p.omega * np.exp(-1j * p.omega * t)
    return np.array([[0, drive], [np.conj(drive), 0]], dtype=complex)


def rotating_hamiltonian(p: DrivenQubitParams) -> ComplexMatrix:
    """The time independent generator in the frame co-rotating with the drive."""
    return (p.delta * SIGMA_Z + p.g * SIGMA_X) / 2


def _rotating_propagator(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    rabi = p.rabi
    if rabi == 0:
        return IDENTITY.copy()
    axis = (p.delta * SIGMA_Z + p.g * SIGMA_X) / rabi
    return math.cos(rabi * t / 2) * IDENTITY \
        - 1j * math.sin(rabi * t / 2) * axis


def propagator_at(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    return z_rotation(p.omega * t) @ _rotating_propagator(p, t)


def energy_basis_rotation(p: DrivenQubitParams, t: float) -> ComplexMatrix:
    """
    The unitary R with R H_t R^dagger = E sigma_z / 2. Its first row is
    the (conjugated) excited state, the (1,1) entry is real and positive.
    """
    c = math.cos(p.theta / 2)
    s = math.sin(p.theta / 2)
    phase = np.exp(-1j * p.omega * t)
    return np.array([[c, s * phase],
                     [-s * np.conj(phase), c]], dtype=complex)


def frame_transform(p: DrivenQubitParams, t: float,
                    op: ComplexMatrix) -> ComplexMatrix:
    """Map a lab frame operator into the doubly rotated frame at time t."""
    r = energy_basis_rotation(p, 0.0) @ dagger(z_rotation(p.omega * t))
    return r @ op @ dagger(r)


def initial_state(p: DrivenQubitParams) -> DensityOperator:
    half = p.beta * p.energy_gap / 2
    tanh = math.tanh(half)
    sech = 1 / math.cosh(half)
    energy_frame = (IDENTITY - tanh * SIGMA_Z + p.a * sech * SIGMA_X) / 2
    r = energy_basis_rotation(p, 0.0)
    return DensityOperator(dagger(r) @ energy_frame @ r)


def state_at(p: DrivenQubitParams, t: float) -> DensityOperator:
    """The lab frame state after closed evolution from initial_state."""
    return initial_state(p).transformed(propagator_at(p, t))


def bloch_rotation_axis(p: DrivenQubitParams) -> np.ndarray:
    """
    Unit axis about which the doubly rotated Bloch vector precesses at
    the Rabi frequency.
    """
    if p.rabi == 0:
        return np.array([0.0, 0.0, 1.0])
    energy = p.energy_gap
    return np.array([p.g * p.omega,
                     0.0,
                     energy**2 - p.omega * p.omega0]) / (energy * p.rabi)


def rotating_frame_state(p: DrivenQubitParams, t: float) -> DensityOperator:
    half = p.beta * p.energy_gap / 2
    tanh = math.tanh(half)
    sech = 1 / math.cosh(half)
    start = (IDENTITY - tanh * SIGMA_Z + p.a * sech * SIGMA_X) / 2
    n = bloch_rotation_axis(p)
    angle = p.rabi * t / 2
    w = math.cos(angle) * IDENTITY \
        - 1j * math.sin(angle) * (n[0] * SIGMA_X + n[2] * SIGMA_Z)
    return DensityOperator(w @ start @ dagger(w))


def _work_amplitude(p: DrivenQubitParams) -> float:
    """The coefficient of sin^2(Omega t / 2) in the work."""
    if p.g == 0:
        return 0.0
    energy = p.energy_gap
    rabi = p.rabi
    half = p.beta * energy / 2
    coherent = p.a * (energy**2 + rabi**2 - p.omega**2) / (2 * p.g * p.omega)
    return (math.tanh(half) + coherent / math.cosh(half)) \
        * p.g**2 * p.omega**2 / (energy * rabi**2)


def analytic_work(p: DrivenQubitParams, t: float) -> float:
    """
    Work done on the qubit up to time t. Zero without a drive, in which
    case the Rabi frequency can vanish too.
    """
    if p.g == 0:
        return 0.0
    return _work_amplitude(p) * math.sin(p.rabi * t / 2)**2


def extraction_condition(p: DrivenQubitParams) -> bool:
    if p.g == 0:
        return False
    energy = p.energy_gap
    bound = p.a * (p.omega**2 - energy**2 - p.rabi**2) / (2 * p.g * p.omega)
    return math.sinh(p.beta * energy / 2) < bound


def optimal_frequency(p: DrivenQubitParams) -> float:
    energy = p.energy_gap
    half = p.beta * energy / 2
    denominator = energy**2 - 2 * p.g * (p.omega0 * math.sinh(half) + p.g)
    if denominator <= 0:
        raise ModelError(f'no optimal frequency for g={p.g:g}, '
                         f'beta={p.beta:g}: the drive is too strong')
    return energy**2 * (p.omega0 + p.g * math.exp(-half)) / denominator


def numeric_optimal_frequency(p: DrivenQubitParams) -> float:
    """
    Minimize the work at half a Rabi period over the drive frequency for
    a maximally coherent start.
    """
    coherent = p.replace(a=1.0)

    def work(omega: float) -> float:
        return _work_amplitude(coherent.replace(omega=omega))

    result = minimize_scalar(work, bounds=(0.5 * p.omega0, 2 * p.omega0),
                             method='bounded', options={'xatol': 1e-12})
    logger.debug(f'optimal frequency search took {result.nfev} evaluations')
    return float(result.x)


def averaged_work(p: DrivenQubitParams, window: AverageWindow) -> float:
    if p.g == 0:
        return 0.0
    rabi_average = _work_amplitude(p) / 2
    if window is AverageWindow.RABI:
        return rabi_average
    # numpy's sinc is sin(pi x)/(pi x)
    return (1 - float(np.sinc(2 * p.rabi / p.omega))) * rabi_average


def adiabatic_time(p: DrivenQubitParams, samples: int = 512) -> float:
    """
    Largest ratio of the off-diagonal matrix element of dH/dr to the
    squared gap along the protocol, with r = t / tau_P running over a
    uniform grid of [0, 1].
    """
    if samples < 2:
        raise InvalidArgument('at least two samples are needed')
    period = p.protocol_period
    largest = 0.0
    for r in np.linspace(0.0, 1.0, samples):
        phase = p.omega * r * period
        derivative = period * p.g * p.omega / 2 \
            * (-math.sin(phase) * SIGMA_X + math.cos(phase) * SIGMA_Y)
        values, vectors = eig_hermitian(hamiltonian_at(p, r * period))
        gap = values[1] - values[0]
        if gap < DEGENERACY_GAP:
            raise ModelError(f'the spectrum is degenerate at r={r:g}')
        element = abs(vectors[:, 1].conj() @ derivative @ vectors[:, 0])
        largest = max(largest, element / gap**2)
    return largest


def unitary_criterion(p: DrivenQubitParams, samples: int = 512,
                      margin: float = 2.0) -> bool:
    return p.protocol_period <= margin * adiabatic_time(p, samples)
