import csv
import functools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import (Any, Callable, Dict, Iterable, List, NamedTuple,
                    Optional, Sequence, TypeVar)

import numpy as np

from .common import (IntegratorError, ModelError, OutputFormat, Scenario,
                     ScenarioConfig)
from .dynamics import (ThermoTimeSeries, closed_time_series,
                       coupling_for_ratio, decoherence_time_general,
                       evolve_lindblad, qubit_bath_model)
from .qubit import (AverageWindow, DrivenQubitParams, adiabatic_time,
                    analytic_work, averaged_work, extraction_condition,
                    hamiltonian_at, initial_state, optimal_frequency,
                    propagator_at, state_at, unitary_criterion)
from .response import fdr_work_prediction
from .states import coherence_C
from .trajectories import (build_exchange_model, driven_qubit_model,
                           ft_report)

logger = logging.getLogger(__name__)

A = TypeVar('A')
R = TypeVar('R')

# A Lindblad series whose W + Q misses E - E0 by more than this is rejected
FIRST_LAW_TOLERANCE = 1e-9

SERIES_COLUMNS = ('t', 'betaW', 'deltaC', 'deltaC_plus_D', 'W_LR', 'sigma2W')
SWEEP_COLUMNS = ('value', 'tau_W', 'work_at_tau_W', 'delta_C_at_tau_W',
                 'extraction_possible', 'averaged_work_rabi',
                 'averaged_work_protocol', 'optimal_frequency')


class LindbladRun(NamedTuple):
    params: DrivenQubitParams
    gamma: float
    nbar: Optional[float]
    t_end: float
    samples: int
    dt: float


def model_params(cfg: ScenarioConfig) -> DrivenQubitParams:
    return DrivenQubitParams(omega0=cfg.omega0, omega=cfg.omega, g=cfg.g,
                             beta=cfg.beta, a=cfg.a)


def default_dt(p: DrivenQubitParams) -> float:
    return p.rabi_period / 2 * 1e-4


def time_grid(cfg: ScenarioConfig, p: DrivenQubitParams) -> np.ndarray:
    t_end = cfg.t_end if cfg.t_end is not None else p.rabi_period
    if math.isinf(t_end):
        raise ModelError('no Rabi oscillation to sample: set "t end"')
    return np.linspace(0.0, t_end, cfg.time_samples)


def evaluate(func: Callable[[A], R], items: Sequence[A],
             threads: int) -> List[R]:
    """Map func over items, in a process pool when threads > 1."""
    if threads > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def _cell(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f'{float(value):.17g}'
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_json(path: Path, data: Any) -> Path:
    path.write_text(json.dumps(_jsonable(data), indent=2) + '\n',
                    encoding='utf-8')
    return path


def write_table(out: Path, name: str, columns: Sequence[str],
                rows: Iterable[Sequence[Any]], fmt: OutputFormat) -> Path:
    """
    Write rows as <name>.csv with full double precision, or as
    <name>.json holding one object per row.
    """
    if fmt is OutputFormat.JSON:
        return write_json(out / f'{name}.json',
                          [dict(zip(columns, row)) for row in rows])
    path = out / f'{name}.csv'
    with path.open('w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def coherence_change(p: DrivenQubitParams) -> float:
    """Delta C after half a Rabi period, 0 without Rabi oscillation."""
    if p.rabi == 0:
        return 0.0
    t = p.extraction_time
    return coherence_C(state_at(p, t), hamiltonian_at(p, t)) \
        - coherence_C(initial_state(p), hamiltonian_at(p, 0.0))


def _check_first_law(series: ThermoTimeSeries) -> None:
    residual = series.first_law_residual()
    if residual > FIRST_LAW_TOLERANCE:
        raise IntegratorError(f'the first law is off by {residual:.3g}; '
                              f'try a smaller dt')


def lindblad_series(run: LindbladRun) -> ThermoTimeSeries:
    """Integrate with a step that puts a record on every grid point."""
    p = run.params
    intervals = run.samples - 1
    per_interval = max(1, math.ceil(run.t_end / intervals / run.dt - 1e-9))
    step = run.t_end / (intervals * per_interval)
    series = evolve_lindblad(qubit_bath_model(p, run.gamma, run.nbar),
                             initial_state(p), run.t_end, step,
                             record_every=per_interval)
    _check_first_law(series)
    return series


def decoherence_coupling(cfg: ScenarioConfig, p: DrivenQubitParams,
                         ratio: Optional[float] = None) -> float:
    if ratio is None:
        ratio = cfg.decoherence_ratio
    if ratio is None:
        return cfg.gamma
    return coupling_for_ratio(p, initial_state(p), ratio, cfg.nbar)


def _series_rows(p: DrivenQubitParams, series: ThermoTimeSeries,
                 nodes: int) -> List[List[float]]:
    reference = fdr_work_prediction(p, initial_state(p), series.times, nodes)
    c0 = series.coherence[0]
    cd0 = c0 + series.athermality[0]
    return [[t, p.beta * w, c - c0, c + d - cd0, w_lr, variance]
            for t, w, c, d, w_lr, variance in zip(
                series.times, series.work, series.coherence,
                series.athermality, reference.predicted_work,
                reference.work_variance)]


def _closed_series(p: DrivenQubitParams,
                   times: np.ndarray) -> ThermoTimeSeries:
    return closed_time_series(functools.partial(hamiltonian_at, p),
                              functools.partial(propagator_at, p),
                              initial_state(p), p.beta, times)


def run_fig1(cfg: ScenarioConfig) -> List[Path]:
    omegas = cfg.omega0 * np.linspace(*cfg.omega_range, cfg.omega_count)
    couplings = cfg.omega0 * np.linspace(*cfg.g_range, cfg.g_count)
    base = model_params(cfg)
    grid = [base.replace(omega=float(omega), g=float(g))
            for g in couplings for omega in omegas]
    logger.info(f'fig1: {len(grid)} grid points')
    changes = evaluate(coherence_change, grid, cfg.threads)
    rows = [(p.omega, p.g, change) for p, change in zip(grid, changes)]
    return [write_table(cfg.out, 'fig1', ('omega', 'g', 'delta_C'), rows,
                        cfg.format)]


def run_fig2(cfg: ScenarioConfig) -> List[Path]:
    p = model_params(cfg)
    times = time_grid(cfg, p)
    gamma = decoherence_coupling(cfg, p)
    if gamma > 0:
        dt = cfg.dt if cfg.dt is not None else default_dt(p)
        logger.info(f'{cfg.scenario.value}: open dynamics, gamma={gamma:.6g}')
        series = lindblad_series(LindbladRun(p, gamma, cfg.nbar,
                                             float(times[-1]), len(times),
                                             dt))
    else:
        logger.info(f'{cfg.scenario.value}: closed dynamics')
        series = _closed_series(p, times)
    rows = _series_rows(p, series, cfg.quadrature_nodes)
    return [write_table(cfg.out, cfg.scenario.value, SERIES_COLUMNS, rows,
                        cfg.format)]


def ratio_label(ratio: float) -> str:
    return f'{ratio:g}'.replace('.', '')


def tau_d_markers(times: np.ndarray, ratios: Sequence[float],
                  tau_w: float) -> List[str]:
    """Per row, the ratios whose tau_D lies in (t_previous, t]."""
    markers = []
    for k, t in enumerate(times):
        previous = times[k - 1] if k else -math.inf
        markers.append(';'.join(ratio_label(r) for r in ratios
                                if previous < r * tau_w <= t))
    return markers


def run_fig3(cfg: ScenarioConfig) -> List[Path]:
    p = model_params(cfg)
    times = time_grid(cfg, p)
    dt = cfg.dt if cfg.dt is not None else default_dt(p)
    runs = [LindbladRun(p, decoherence_coupling(cfg, p, ratio), cfg.nbar,
                        float(times[-1]), len(times), dt)
            for ratio in cfg.ratios]
    logger.info(f'fig3: {len(runs)} decoherence ratios')
    works = [p.beta * series.work
             for series in evaluate(lindblad_series, runs, cfg.threads)]
    markers = tau_d_markers(times, cfg.ratios, p.extraction_time)
    columns = ['t'] + [f'betaW_ratio{ratio_label(r)}' for r in cfg.ratios] \
        + ['tauD_markers']
    rows = [[t] + [w[k] for w in works] + [markers[k]]
            for k, t in enumerate(times)]
    return [write_table(cfg.out, 'fig3', columns, rows, cfg.format)]


def run_ft_check(cfg: ScenarioConfig) -> List[Path]:
    p = model_params(cfg)
    t = cfg.ft_time if cfg.ft_time is not None else p.extraction_time
    if cfg.ft_model == 'exchange':
        model = build_exchange_model(cfg.exchange_coupling, cfg.omega0,
                                     cfg.beta)
        rho0 = initial_state(p.replace(g=0.0))
    else:
        model = driven_qubit_model(p)
        rho0 = initial_state(p)
    report = ft_report(model, rho0, t)
    report['model'] = cfg.ft_model
    return [write_json(cfg.out / 'ft-check.json', report)]


def sweep_row(p: DrivenQubitParams) -> List[Any]:
    tau_w = p.extraction_time
    try:
        omega_opt: Optional[float] = optimal_frequency(p)
    except ModelError as e:
        logger.warning(str(e))
        omega_opt = None
    return [tau_w,
            analytic_work(p, tau_w) if math.isfinite(tau_w) else 0.0,
            coherence_change(p),
            extraction_condition(p),
            averaged_work(p, AverageWindow.RABI),
            averaged_work(p, AverageWindow.PROTOCOL),
            omega_opt]


def run_sweep(cfg: ScenarioConfig) -> List[Path]:
    base = model_params(cfg)
    grid = [base.replace(**{cfg.sweep_parameter: value})
            for value in cfg.sweep_values]
    logger.info(f'sweep over {cfg.sweep_parameter}: {len(grid)} values')
    rows = [[value] + row for value, row in
            zip(cfg.sweep_values, evaluate(sweep_row, grid, cfg.threads))]
    return [write_table(cfg.out, 'sweep', SWEEP_COLUMNS, rows, cfg.format)]


RUNNERS: Dict[Scenario, Callable[[ScenarioConfig], List[Path]]] = {
    Scenario.FIG1: run_fig1,
    Scenario.FIG2A: run_fig2,
    Scenario.FIG2B: run_fig2,
    Scenario.FIG2C: run_fig2,
    Scenario.FIG3: run_fig3,
    Scenario.FT_CHECK: run_ft_check,
    Scenario.SWEEP: run_sweep,
}


def run_scenario(cfg: ScenarioConfig) -> List[Path]:
    cfg.out.mkdir(parents=True, exist_ok=True)
    paths = RUNNERS[cfg.scenario](cfg)
    for path in paths:
        logger.info(f'wrote {path}')
    return paths


def _decoherence_time(cfg: ScenarioConfig, p: DrivenQubitParams,
                      gamma: float) -> float:
    if gamma == 0:
        return math.inf
    return decoherence_time_general(qubit_bath_model(p, gamma, cfg.nbar),
                                    initial_state(p))


def report_criteria(cfg: ScenarioConfig) -> Dict[str, Any]:
    """
    The timescales of the configured model and whether the unitary
    (tau_P <= margin * tau_A) and nonunitary (tau_D >= margin * tau_W)
    criteria hold. fig3 reports one tau_D per ratio.
    """
    p = model_params(cfg)
    tau_w = p.extraction_time
    margin = cfg.criterion_margin
    report: Dict[str, Any] = {
        'tau_P': p.protocol_period,
        'tau_A': adiabatic_time(p, cfg.adiabatic_samples),
        'tau_R': p.rabi_period,
        'tau_W': tau_w,
        'unitary_criterion': unitary_criterion(p, cfg.adiabatic_samples,
                                               margin),
    }
    if cfg.scenario is Scenario.FIG3:
        tau_d = [_decoherence_time(cfg, p,
                                   decoherence_coupling(cfg, p, ratio))
                 for ratio in cfg.ratios]
        report['ratios'] = list(cfg.ratios)
        report['tau_D'] = tau_d
        report['nonunitary_criterion'] = [t >= margin * tau_w for t in tau_d]
    else:
        tau_d_single = _decoherence_time(cfg, p, decoherence_coupling(cfg, p))
        report['tau_D'] = tau_d_single
        report['nonunitary_criterion'] = tau_d_single >= margin * tau_w
    return report


def write_criteria(cfg: ScenarioConfig) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    return write_json(cfg.out / 'criteria.json', report_criteria(cfg))
