import dataclasses
import functools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cthermo.common import IntegratorError, InvalidArgument, ModelError
from cthermo.dynamics import (Frame, Jump, LindbladModel, ThermoTimeSeries,
                              closed_time_series, coupling_for_ratio,
                              decoherence_time_general,
                              decoherence_time_mismatch,
                              decoherence_time_qubit, evolve_lindblad,
                              evolve_unitary, lindblad_rhs, qubit_bath_model,
                              thermal_occupation, work_extraction_time)
from cthermo.operators import (IDENTITY, SIGMA_MINUS, SIGMA_PLUS, SIGMA_X,
                               SIGMA_Z, unitary_step)
from cthermo.qubit import (DrivenQubitParams, analytic_work, hamiltonian_at,
                           initial_state, propagator_at)
from cthermo.states import DensityOperator


@pytest.fixture
def fig2():
    return DrivenQubitParams(omega0=0.995, omega=1.0, g=0.005, beta=0.5,
                             a=0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(99)


def random_state(rng):
    direction = rng.normal(size=3)
    r = direction / np.linalg.norm(direction) * rng.uniform(0, 1)
    return DensityOperator.from_bloch(r)


def closed_series(p, samples):
    times = np.linspace(0, p.rabi_period, samples)
    return closed_time_series(functools.partial(hamiltonian_at, p),
                              functools.partial(propagator_at, p),
                              initial_state(p), p.beta, times)


def test_thermal_occupation():
    assert thermal_occupation(1.0, 0.5) \
        == pytest.approx(1 / (math.exp(0.5) - 1))
    with pytest.raises(InvalidArgument):
        thermal_occupation(1.0, 0.0)


def test_qubit_bath_rates(fig2):
    model = qubit_bath_model(fig2, 0.02, nbar=1.5)
    assert model.jumps[0].rate == pytest.approx(0.02 * 2.5)
    assert model.jumps[1].rate == pytest.approx(0.02 * 1.5)
    with pytest.raises(InvalidArgument):
        qubit_bath_model(fig2, -1.0)


def test_negative_rate_rejected():
    with pytest.raises(InvalidArgument):
        LindbladModel(lambda t: SIGMA_Z, (Jump(SIGMA_MINUS, -1.0),), 1.0, 0.0)


def test_lindblad_rhs_traceless_and_hermitian(fig2, rng):
    model = qubit_bath_model(fig2, 0.3)
    for _ in range(10):
        rhs = lindblad_rhs(model, random_state(rng), rng.uniform(0, 10))
        assert abs(np.trace(rhs)) < 1e-12
        assert_allclose(rhs, rhs.conj().T, atol=1e-15)


def test_lindblad_rhs_without_coupling(fig2, rng):
    model = qubit_bath_model(fig2, 0.0, frame=Frame.LAB)
    rho = random_state(rng)
    h = hamiltonian_at(fig2, 2.0)
    assert_allclose(lindblad_rhs(model, rho, 2.0),
                    -1j * (h @ rho.matrix - rho.matrix @ h), atol=1e-15)


def test_dissipator_fixed_point():
    nbar = 0.7
    model = LindbladModel(lambda t: np.zeros((2, 2), dtype=complex),
                          (Jump(SIGMA_MINUS, 0.4 * (nbar + 1)),
                           Jump(SIGMA_PLUS, 0.4 * nbar)), 1.0, nbar)
    excited = nbar / (2 * nbar + 1)
    rho = DensityOperator(np.diag([excited, 1 - excited]))
    assert_allclose(lindblad_rhs(model, rho, 0.0), np.zeros((2, 2)),
                    atol=1e-15)


def test_evolve_unitary_constant_hamiltonian(rng):
    h = SIGMA_X * 0.3 + SIGMA_Z * 0.8
    rho0 = random_state(rng)
    rho, u = evolve_unitary(lambda t: h, rho0, 2.5, 0.01)
    assert_allclose(u, unitary_step(h, 2.5), atol=1e-12)
    assert_allclose(rho.matrix, rho0.transformed(unitary_step(h, 2.5)).matrix,
                    atol=1e-12)


def test_evolve_unitary_matches_propagator(fig2):
    rho0 = initial_state(fig2)
    _, u = evolve_unitary(functools.partial(hamiltonian_at, fig2), rho0,
                          1.0, 1e-3)
    assert_allclose(u, propagator_at(fig2, 1.0), atol=1e-8)


def test_evolve_unitary_second_order(fig2):
    p = fig2.replace(omega0=1.0, omega=0.7, g=0.2)
    rho0 = initial_state(p)
    h = functools.partial(hamiltonian_at, p)
    exact = propagator_at(p, 2.0)
    errors = [np.linalg.norm(evolve_unitary(h, rho0, 2.0, dt)[1] - exact)
              for dt in (0.02, 0.01)]
    assert 3 < errors[0] / errors[1] < 5


def test_evolve_lindblad_without_coupling_matches_analytic_work(fig2):
    model = qubit_bath_model(fig2, 0.0)
    dt = fig2.rabi_period / 2 * 1e-4
    series = evolve_lindblad(model, initial_state(fig2), fig2.rabi_period,
                             dt, record_every=100)
    assert len(series) == 201
    assert series.times[-1] == pytest.approx(fig2.rabi_period)
    for record in series:
        assert abs(record.work - analytic_work(fig2, record.t)) < 1e-6
        assert abs(record.heat) < 1e-15
        assert abs(np.trace(record.state.matrix) - 1) < 1e-9
        assert record.state.spectrum.eigenvalues[0] > -1e-9


def test_evolve_lindblad_first_law(fig2):
    model = qubit_bath_model(fig2, 0.002)
    series = evolve_lindblad(model, initial_state(fig2), 200.0, 0.05,
                             record_every=40)
    assert series.first_law_residual() \
        < 1e-8 * np.max(np.abs(series.energy))
    assert np.all(np.diff(series.times) > 0)
    assert_allclose(series.work_flow, series.work, atol=1e-9)


def test_first_law_residual_catches_a_wrong_power(fig2):
    model = dataclasses.replace(qubit_bath_model(fig2, 0.002),
                                hamiltonian_rate=lambda t: np.zeros((2, 2)))
    series = evolve_lindblad(model, initial_state(fig2), 200.0, 0.05,
                             record_every=40)
    assert np.all(series.work_flow == 0)
    assert series.first_law_residual() > 1e-3


def test_power_without_closed_form_rate(fig2):
    model = dataclasses.replace(qubit_bath_model(fig2, 0.002),
                                hamiltonian_rate=None)
    series = evolve_lindblad(model, initial_state(fig2), 200.0, 0.05,
                             record_every=40)
    assert series.first_law_residual() < 1e-6


def test_evolve_lindblad_undriven_decay_rates():
    p = DrivenQubitParams(omega0=1.0, omega=1.0, g=0.0, beta=0.5)
    gamma = 0.01
    nbar = thermal_occupation(1.0, 0.5)
    rho0 = DensityOperator.from_bloch([0.6, 0.0, 0.3])
    t_end = 50.0
    series = evolve_lindblad(qubit_bath_model(p, gamma), rho0, t_end, 0.05,
                             record_every=100)
    final = series[-1].state.matrix
    coherence_rate = -math.log(abs(final[0, 1]) / 0.3) / t_end
    assert coherence_rate == pytest.approx(gamma * (nbar + 0.5), rel=0.01)
    equilibrium = -1 / (2 * nbar + 1)
    r_z = (final[0, 0] - final[1, 1]).real
    population_rate = -math.log((r_z - equilibrium)
                                / (0.3 - equilibrium)) / t_end
    assert population_rate == pytest.approx(gamma * (2 * nbar + 1), rel=0.01)


def test_evolve_lindblad_frames_agree(fig2):
    rho0 = initial_state(fig2)
    rotating = evolve_lindblad(qubit_bath_model(fig2, 0.01), rho0, 20.0,
                               0.002, record_every=500)
    lab = evolve_lindblad(qubit_bath_model(fig2, 0.01, frame=Frame.LAB),
                          rho0, 20.0, 0.002, record_every=500)
    for column in ('energy', 'heat', 'work', 'coherence', 'athermality',
                   'entropy'):
        assert_allclose(getattr(rotating, column), getattr(lab, column),
                        atol=1e-8)


def test_evolve_lindblad_positivity_violation(fig2):
    model = qubit_bath_model(fig2, 10.0)
    with pytest.raises(IntegratorError, match='smaller dt'):
        evolve_lindblad(model, DensityOperator.pure([1, 0]), 5.0, 1.0)


def test_time_series_needs_records():
    with pytest.raises(InvalidArgument):
        ThermoTimeSeries([], 0.5)


def test_decoherence_time_maximally_mixed(fig2):
    model = qubit_bath_model(fig2, 0.1)
    assert decoherence_time_general(model, DensityOperator(IDENTITY / 2)) \
        == math.inf


def test_decoherence_time_maximally_coherent(fig2):
    gamma = 0.1
    model = qubit_bath_model(fig2, gamma)
    expected = 1 / (gamma * (model.nbar + 0.5))
    plus = DensityOperator.pure([1, 1])
    assert decoherence_time_general(model, plus) \
        == pytest.approx(expected, rel=1e-12)
    assert decoherence_time_qubit((1.0, 0.0), gamma, model.nbar) \
        == pytest.approx(expected, rel=1e-12)


def test_decoherence_time_general_matches_qubit_form(fig2, rng):
    gamma = 0.07
    model = qubit_bath_model(fig2, gamma)
    for _ in range(50):
        direction = rng.normal(size=3)
        direction[2] = abs(direction[2])
        r = direction / np.linalg.norm(direction) * rng.uniform(0.05, 1)
        rho = DensityOperator.from_bloch(r)
        expected = decoherence_time_qubit((math.hypot(r[0], r[1]), r[2]),
                                          gamma, model.nbar)
        assert decoherence_time_general(model, rho) \
            == pytest.approx(expected, rel=1e-10)


def test_decoherence_time_qubit_edge_cases():
    assert decoherence_time_qubit((0.0, 0.0), 0.1, 1.0) == math.inf
    with pytest.raises(InvalidArgument):
        decoherence_time_qubit((0.9, 0.9), 0.1, 1.0)
    with pytest.raises(ModelError):
        decoherence_time_qubit((0.0, -0.1), 0.1, 1.5)


def test_decoherence_time_general_purity_gain(fig2):
    model = qubit_bath_model(fig2, 0.1)
    hotter = DensityOperator.from_bloch([0.0, 0.0, -0.1])
    with pytest.raises(ModelError):
        decoherence_time_general(model, hotter)


def test_decoherence_time_mismatch():
    assert decoherence_time_mismatch(0.0, 0.1, 1.2, 1.2) == math.inf
    mbar, nbar, r_perp = 0.8, 1.2, 0.4
    r_z = -1 / (2 * mbar + 1)
    assert decoherence_time_mismatch(r_perp, 0.1, nbar, mbar) \
        == pytest.approx(decoherence_time_qubit((r_perp, r_z), 0.1, nbar),
                         rel=1e-12)


@pytest.mark.parametrize('ratio', [5.0, 1.0, 0.5])
def test_coupling_for_ratio(fig2, ratio):
    rho0 = initial_state(fig2)
    gamma = coupling_for_ratio(fig2, rho0, ratio)
    tau_d = decoherence_time_general(qubit_bath_model(fig2, gamma), rho0)
    assert tau_d == pytest.approx(ratio * fig2.extraction_time, rel=1e-12)


def test_work_extraction_time(fig2):
    tau_w = work_extraction_time(closed_series(fig2, 401))
    assert tau_w == pytest.approx(fig2.extraction_time, rel=1e-3)
    finer = work_extraction_time(closed_series(fig2, 801))
    assert finer == pytest.approx(tau_w, rel=5e-4)


def test_work_extraction_time_without_coherence(fig2):
    assert work_extraction_time(closed_series(fig2.replace(a=0.0), 101)) \
        is None
