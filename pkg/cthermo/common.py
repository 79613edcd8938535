import enum
import json
import math
from pathlib import Path
from typing import (Any, Dict, List, Mapping, Optional, Set, Tuple, Type,
                    TypeVar)

LOCAL_DIR = Path(__file__).resolve().parent
DATA_DIR = LOCAL_DIR / 'data'

# Numerical tolerances shared by the modules
HERMITIAN_TOLERANCE = 1e-10
STATE_TOLERANCE = 1e-10
DEGENERACY_GAP = 1e-10
ENTROPY_FLOOR = 1e-14
SUPPORT_TOLERANCE = 1e-12
PROBABILITY_FLOOR = 1e-14
LOG_FLOOR = 1e-300
POSITIVITY_TOLERANCE = 1e-6


class CthermoError(Exception):
    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class InvalidArgument(CthermoError, ValueError):
    pass


class ModelError(CthermoError):
    pass


class IntegratorError(CthermoError):
    pass


class ConfigError(CthermoError):
    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key

    def __str__(self) -> str:
        where = f' in "{self.key}"' if self.key else ''
        return f'Config error{where}: {self.message}'


class Scenario(enum.Enum):
    FIG1 = 'fig1'
    FIG2A = 'fig2a'
    FIG2B = 'fig2b'
    FIG2C = 'fig2c'
    FIG3 = 'fig3'
    FT_CHECK = 'ft-check'
    SWEEP = 'sweep'


DRIVEN_SCENARIOS = (Scenario.FIG2A, Scenario.FIG2B, Scenario.FIG2C,
                    Scenario.FIG3, Scenario.FT_CHECK)


class OutputFormat(enum.Enum):
    CSV = 'csv'
    JSON = 'json'


# Applied on top of the defaults, below the user's config file
SCENARIO_PRESETS: Dict[Scenario, Dict[str, Any]] = {
    Scenario.FIG2A: {'a': 0.0, 'gamma': 0.0, 'decoherence ratio': None},
    Scenario.FIG2B: {'a': 0.3, 'gamma': 0.0, 'decoherence ratio': None},
    Scenario.FIG2C: {'a': 0.3, 'decoherence ratio': 1.0},
    Scenario.FIG3: {'a': 0.3},
}

SWEEPABLE = ('omega0', 'omega', 'g', 'beta', 'a')

T = TypeVar('T', bound='ScenarioConfig')


class ScenarioConfig:
    default_config_path = DATA_DIR / 'defaultconfig.json'

    def __init__(self, scenario: Scenario) -> None:
        self.scenario = scenario
        self.omega0 = 0.995
        self.omega = 1.0
        self.g = 0.005
        self.beta = 0.5
        self.a = 0.3
        self.gamma = 0.0
        self.decoherence_ratio: Optional[float] = None
        self.nbar: Optional[float] = None
        self.t_end: Optional[float] = None
        self.time_samples = 401
        self.dt: Optional[float] = None
        self.omega_range: Tuple[float, float] = (0.05, 2.0)
        self.omega_count = 40
        self.g_range: Tuple[float, float] = (0.0, 0.5)
        self.g_count = 26
        self.ratios: List[float] = [5.0, 1.0, 0.5]
        self.ft_model = 'closed'
        self.ft_time: Optional[float] = None
        self.exchange_coupling = 0.05
        self.quadrature_nodes = 32
        self.adiabatic_samples = 512
        self.criterion_margin = 2.0
        self.sweep_parameter = 'omega'
        self.sweep_values: List[float] = []
        self.format = OutputFormat.CSV
        self.out = Path('.')
        self.threads = 1

    @classmethod
    def _get_config_json(cls, config_file: Optional[Path]) -> Dict[str, Any]:
        if config_file is None:
            return {}
        try:
            data = json.loads(config_file.read_text(encoding='utf-8'))
        except OSError as e:
            raise ConfigError(f'can\'t read config file {str(config_file)!r}: '
                              f'{e.strerror}')
        except json.JSONDecodeError as e:
            raise ConfigError(f'invalid json on line {e.lineno}: {e.msg}')
        if not isinstance(data, dict):
            raise ConfigError('the config file must contain a json object')
        return data

    def reload(self, config_file: Optional[Path],
               overrides: Optional[Mapping[str, Any]] = None) -> Set[str]:
        default_config: Dict[str, Any] = \
            json.loads(self.default_config_path.read_text(encoding='utf-8'))
        config = self._get_config_json(config_file)
        unknown = set(config) - set(default_config)
        if unknown:
            keys = ', '.join(sorted(unknown))
            raise ConfigError(f'unknown keys: {keys}')
        layered = dict(default_config)
        layered.update(SCENARIO_PRESETS.get(self.scenario, {}))
        layered.update(config)
        layered.update({k: v for k, v in (overrides or {}).items()
                        if v is not None})
        missing_keys = set(default_config) - set(config) \
            if config_file is not None else set()

        def get(key: str) -> Any:
            return layered[key]

        self.omega0 = _number(get('omega0'), 'omega0')
        self.omega = _number(get('omega'), 'omega', positive=True)
        self.g = _number(get('g'), 'g', minimum=0.0)
        self.beta = _number(get('beta'), 'beta', minimum=0.0)
        self.a = _number(get('a'), 'a', minimum=0.0, maximum=1.0)
        self.gamma = _number(get('gamma'), 'gamma', minimum=0.0)
        self.decoherence_ratio = _optional_number(
            get('decoherence ratio'), 'decoherence ratio', positive=True)
        self.nbar = _optional_number(get('nbar'), 'nbar', minimum=0.0)
        self.t_end = _optional_number(get('t end'), 't end', positive=True)
        self.time_samples = _count(get('time samples'), 'time samples', 2)
        self.dt = _optional_number(get('dt'), 'dt', positive=True)
        self.omega_range = _range(get('omega range'), 'omega range',
                                  positive=True)
        self.omega_count = _count(get('omega count'), 'omega count', 1)
        self.g_range = _range(get('g range'), 'g range')
        self.g_count = _count(get('g count'), 'g count', 1)
        self.ratios = _number_list(get('ratios'), 'ratios', positive=True)
        self.ft_model = _choice(get('ft model'), 'ft model',
                                ('closed', 'exchange'))
        self.ft_time = _optional_number(get('ft time'), 'ft time',
                                        minimum=0.0)
        self.exchange_coupling = _number(get('exchange coupling'),
                                         'exchange coupling', minimum=0.0)
        self.quadrature_nodes = _count(get('quadrature nodes'),
                                       'quadrature nodes', 16)
        self.adiabatic_samples = _count(get('adiabatic samples'),
                                        'adiabatic samples', 2)
        self.criterion_margin = _number(get('criterion margin'),
                                        'criterion margin', positive=True)
        self.sweep_parameter = _choice(get('sweep parameter'),
                                       'sweep parameter', SWEEPABLE)
        self.sweep_values = _number_list(get('sweep values'), 'sweep values')
        try:
            self.format = OutputFormat(get('format'))
        except ValueError:
            raise ConfigError('must be "csv" or "json"', 'format')
        self.out = Path(str(get('out'))).expanduser()
        self.threads = _count(get('threads'), 'threads', 1)
        self._check_consistency()
        return missing_keys

    def _check_consistency(self) -> None:
        if self.gamma > 0 and self.decoherence_ratio is not None:
            raise ConfigError('can\'t set both "gamma" and '
                              '"decoherence ratio"', 'decoherence ratio')
        if self.beta == 0 and self.nbar is None \
                and (self.gamma > 0 or self.decoherence_ratio is not None):
            raise ConfigError('a damped run at beta = 0 needs an explicit '
                              '"nbar"', 'nbar')
        if self.omega0 <= 0:
            raise ConfigError('must be positive', 'omega0')
        if self.scenario in DRIVEN_SCENARIOS:
            if self.g == 0:
                raise ConfigError('the driven scenarios need a nonzero '
                                  'drive', 'g')
            if self.beta == 0:
                raise ConfigError('the driven scenarios need a finite '
                                  'temperature, beta > 0', 'beta')
        if self.scenario is Scenario.FIG3 and not self.ratios:
            raise ConfigError('at least one ratio is needed', 'ratios')
        if self.scenario is Scenario.SWEEP:
            if not self.sweep_values:
                raise ConfigError('at least one value is needed',
                                  'sweep values')
            if self.sweep_parameter == 'a' \
                    and not all(0 <= v <= 1 for v in self.sweep_values):
                raise ConfigError('values of "a" must lie in [0, 1]',
                                  'sweep values')
            if self.sweep_parameter in ('omega', 'omega0') \
                    and not all(v > 0 for v in self.sweep_values):
                raise ConfigError('frequencies must be positive',
                                  'sweep values')
            if self.sweep_parameter in ('g', 'beta') \
                    and not all(v >= 0 for v in self.sweep_values):
                raise ConfigError('values must be non-negative',
                                  'sweep values')

    @classmethod
    def load(cls: Type[T], scenario: Scenario,
             config_file: Optional[Path] = None,
             overrides: Optional[Mapping[str, Any]] = None
             ) -> Tuple[T, Set[str]]:
        c = cls(scenario)
        missing_keys = c.reload(config_file, overrides)
        return (c, missing_keys)


def _number(value: Any, key: str, *, positive: bool = False,
            minimum: Optional[float] = None,
            maximum: Optional[float] = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f'expected a number, got {value!r}', key)
    number = float(value)
    if not math.isfinite(number):
        raise ConfigError('must be finite', key)
    if positive and number <= 0:
        raise ConfigError('must be positive', key)
    if minimum is not None and number < minimum:
        raise ConfigError(f'must be at least {minimum}', key)
    if maximum is not None and number > maximum:
        raise ConfigError(f'must be at most {maximum}', key)
    return number


def _optional_number(value: Any, key: str, **kwargs: Any
                     ) -> Optional[float]:
    if value is None:
        return None
    return _number(value, key, **kwargs)


def _count(value: Any, key: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f'expected an integer, got {value!r}', key)
    if value < minimum:
        raise ConfigError(f'must be at least {minimum}', key)
    return value


def _range(value: Any, key: str, positive: bool = False
           ) -> Tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError('expected a list of two numbers', key)
    low = _number(value[0], key, positive=positive, minimum=0.0)
    high = _number(value[1], key, positive=positive, minimum=0.0)
    if high < low:
        raise ConfigError('the upper bound is below the lower bound', key)
    return (low, high)


def _number_list(value: Any, key: str, positive: bool = False
                 ) -> List[float]:
    if not isinstance(value, list):
        raise ConfigError('expected a list of numbers', key)
    return [_number(v, key, positive=positive) for v in value]


def _choice(value: Any, key: str, choices: Tuple[str, ...]) -> str:
    if value not in choices:
        options = ', '.join(f'"{c}"' for c in choices)
        raise ConfigError(f'must be one of {options}', key)
    return str(value)
