import json
from pathlib import Path

import pytest

from cthermo.common import (ConfigError, CthermoError, InvalidArgument,
                            OutputFormat, Scenario, ScenarioConfig)


def write_config(tmp_path, data):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


def test_defaults():
    cfg, missing = ScenarioConfig.load(Scenario.FIG1)
    assert missing == set()
    assert cfg.omega0 == 0.995
    assert cfg.omega == 1.0
    assert cfg.g == 0.005
    assert cfg.beta == 0.5
    assert cfg.time_samples == 401
    assert cfg.dt is None
    assert cfg.omega_range == (0.05, 2.0)
    assert cfg.ratios == [5.0, 1.0, 0.5]
    assert cfg.format is OutputFormat.CSV
    assert cfg.out == Path('.')
    assert cfg.threads == 1


@pytest.mark.parametrize('scenario,a,ratio', [
    (Scenario.FIG2A, 0.0, None),
    (Scenario.FIG2B, 0.3, None),
    (Scenario.FIG2C, 0.3, 1.0),
])
def test_presets(scenario, a, ratio):
    cfg, _ = ScenarioConfig.load(scenario)
    assert cfg.a == a
    assert cfg.decoherence_ratio == ratio


def test_config_file_beats_preset(tmp_path):
    path = write_config(tmp_path, {'a': 0.5, 'time samples': 11})
    cfg, missing = ScenarioConfig.load(Scenario.FIG2A, path)
    assert cfg.a == 0.5
    assert cfg.time_samples == 11
    assert 'a' not in missing
    assert 'omega0' in missing


def test_overrides_beat_config_file(tmp_path):
    path = write_config(tmp_path, {'dt': 0.1, 'format': 'json'})
    cfg, _ = ScenarioConfig.load(Scenario.FIG2B, path,
                                 {'dt': 0.01, 'format': None,
                                  'out': str(tmp_path)})
    assert cfg.dt == 0.01
    assert cfg.format is OutputFormat.JSON
    assert cfg.out == tmp_path


def test_reload_replaces_values(tmp_path):
    cfg, _ = ScenarioConfig.load(Scenario.FIG2B)
    cfg.reload(write_config(tmp_path, {'g': 0.01}))
    assert cfg.g == 0.01


@pytest.mark.parametrize('data,key', [
    ({'a': 1.5}, 'a'),
    ({'omega': 0}, 'omega'),
    ({'omega': True}, 'omega'),
    ({'beta': 'hot'}, 'beta'),
    ({'time samples': 1}, 'time samples'),
    ({'time samples': 2.5}, 'time samples'),
    ({'omega range': [2.0, 1.0]}, 'omega range'),
    ({'g range': [0.1]}, 'g range'),
    ({'ratios': 'all'}, 'ratios'),
    ({'ft model': 'bath'}, 'ft model'),
    ({'quadrature nodes': 8}, 'quadrature nodes'),
    ({'format': 'xml'}, 'format'),
    ({'sweep parameter': 'gamma'}, 'sweep parameter'),
    ({'omega0': -1.0}, 'omega0'),
    ({'gamma': 0.1, 'decoherence ratio': 2.0}, 'decoherence ratio'),
])
def test_invalid_values(tmp_path, data, key):
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(Scenario.FIG2B, write_config(tmp_path, data))
    assert excinfo.value.key == key
    assert str(excinfo.value).startswith(f'Config error in "{key}": ')


def test_error_message():
    e = ConfigError('must be at most 1.0', 'a')
    assert str(e) == 'Config error in "a": must be at most 1.0'
    assert str(ConfigError('oops')) == 'Config error: oops'
    assert isinstance(e, CthermoError)
    assert issubclass(InvalidArgument, ValueError)


def test_unknown_keys(tmp_path):
    with pytest.raises(ConfigError, match='unknown keys: colour'):
        ScenarioConfig.load(Scenario.FIG1,
                            write_config(tmp_path, {'colour': 'red'}))


def test_invalid_json(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{"a": 0.3,\n', encoding='utf-8')
    with pytest.raises(ConfigError, match='invalid json'):
        ScenarioConfig.load(Scenario.FIG1, path)


def test_config_must_be_an_object(tmp_path):
    with pytest.raises(ConfigError, match='json object'):
        ScenarioConfig.load(Scenario.FIG1, write_config(tmp_path, [1, 2]))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match='can\'t read'):
        ScenarioConfig.load(Scenario.FIG1, tmp_path / 'nope.json')


def test_damping_at_infinite_temperature_needs_nbar(tmp_path):
    damped = {'beta': 0.0, 'gamma': 0.01}
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(Scenario.FIG1, write_config(tmp_path, damped))
    assert excinfo.value.key == 'nbar'
    cfg, _ = ScenarioConfig.load(
        Scenario.FIG1, write_config(tmp_path, dict(damped, nbar=2.0)))
    assert cfg.nbar == 2.0


@pytest.mark.parametrize('scenario', [
    Scenario.FIG2A, Scenario.FIG2B, Scenario.FIG2C, Scenario.FIG3,
    Scenario.FT_CHECK,
])
def test_driven_scenarios_need_positive_beta(tmp_path, scenario):
    path = write_config(tmp_path, {'beta': 0.0, 'nbar': 1.0})
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(scenario, path)
    assert excinfo.value.key == 'beta'
    cfg, _ = ScenarioConfig.load(Scenario.SWEEP, path)
    assert cfg.beta == 0.0


def test_driven_scenarios_need_a_drive(tmp_path):
    path = write_config(tmp_path, {'g': 0.0})
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(Scenario.FIG2B, path)
    assert excinfo.value.key == 'g'
    cfg, _ = ScenarioConfig.load(Scenario.FIG1, path)
    assert cfg.g == 0.0


@pytest.mark.parametrize('data', [
    {'sweep values': []},
    {'sweep parameter': 'a', 'sweep values': [0.5, 1.2]},
    {'sweep parameter': 'omega', 'sweep values': [1.0, 0.0]},
    {'sweep parameter': 'beta', 'sweep values': [-0.5]},
])
def test_sweep_values(tmp_path, data):
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(Scenario.SWEEP, write_config(tmp_path, data))
    assert excinfo.value.key == 'sweep values'


def test_fig3_needs_ratios(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        ScenarioConfig.load(Scenario.FIG3,
                            write_config(tmp_path, {'ratios': []}))
    assert excinfo.value.key == 'ratios'
