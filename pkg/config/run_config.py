"""
Run configuration: defaults ← preset ← user file ← environment ← CLI flags.
"""
import copy
import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional, Tuple

from core.config_manager import ConfigManager, ConfigurationError

logger = logging.getLogger(__name__)

MODES = ('test-fluid', 'coupled')
SCHEMES = ('rk4',)

_NUMBER = (int, float)

SCHEMA = {
    'mode': str,
    'preset': (str, type(None)),
    'input': (str, type(None)),
    'grid': {
        'nr': int, 'dim': int, 'r_far': _NUMBER, 'band_width': _NUMBER,
        'order': int, 'allow_straddle_fallback': bool,
    },
    'step': {
        'dt': _NUMBER, 'steps': int, 'scheme': str, 'picard_iters': int,
        'picard_tol': _NUMBER, 'cfl_limit': _NUMBER, 'monitor_every': int,
        'checkpoint_every': int,
    },
    'tolerances': {
        'theta0_floor': _NUMBER, 'sigma_floor': _NUMBER, 'gram_floor': _NUMBER,
        'time_coefficient_floor': _NUMBER, 'det_floor': _NUMBER, 'c0': _NUMBER,
        'kappa_min': _NUMBER, 'constraint_tol': _NUMBER, 'compatibility_tol': _NUMBER,
    },
    'diagnostics': {
        'energy_order': int, 'strict_compatibility': bool, 'resolutions': int,
        'multiplier_margin': _NUMBER,
    },
    'output': {'dir': str, 'log_level': str},
    'seed': int,
}


@dataclass(frozen=True)
class GridConfig:
    nr: int = 16
    dim: int = 1
    r_far: float = 1.5
    band_width: float = 0.125
    order: int = 4
    allow_straddle_fallback: bool = False


@dataclass(frozen=True)
class Tolerances:
    """
    :ivar theta0_floor: smallest admissible Θ̂⁰ in the closures
    :ivar sigma_floor: smallest admissible σ²
    :ivar gram_floor: Gram determinant floor of the adapted frames
    :ivar time_coefficient_floor: smallest admissible |g^{00}|
    :ivar det_floor: determinant floor of metric reconstruction
    :ivar c0: Taylor bound, a² ≥ c0² on the boundary
    :ivar kappa_min: spectral floor of the curvature time matrix
    :ivar constraint_tol: warning level for the constraint residuals
    :ivar compatibility_tol: pass level of the compatibility residuals
    """
    theta0_floor: float = 1e-6
    sigma_floor: float = 1e-8
    gram_floor: float = 1e-8
    time_coefficient_floor: float = 1e-8
    det_floor: float = 1e-8
    c0: float = 0.1
    kappa_min: float = 0.1
    constraint_tol: float = 1e-6
    compatibility_tol: float = 1e-6


@dataclass(frozen=True)
class StepConfig:
    dt: float = 0.01
    steps: int = 100
    scheme: str = 'rk4'
    picard_iters: int = 0
    picard_tol: float = 1e-14
    cfl_limit: float = 0.5
    monitor_every: int = 10
    checkpoint_every: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)


@dataclass(frozen=True)
class DiagnosticsConfig:
    energy_order: int = 1
    strict_compatibility: bool = False
    resolutions: int = 1
    multiplier_margin: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    mode: str
    preset: Optional[str]
    input: Optional[str]
    grid: GridConfig
    step: StepConfig
    diagnostics: DiagnosticsConfig
    output_dir: str
    log_level: str
    seed: int

    @property
    def tolerances(self) -> Tolerances:
        return self.step.tolerances

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _deep_update(original: Dict[str, Any], updates: Dict[str, Any]) -> Dict[str, Any]:
    """Recursively merge ``updates`` into ``original``."""
    for key, value in updates.items():
        if isinstance(value, dict):
            original[key] = _deep_update(original.get(key) or {}, value)
        else:
            original[key] = value
    return original


def _check_ranges(raw: Dict[str, Any]):
    grid, step, tol, diag = raw['grid'], raw['step'], raw['tolerances'], raw['diagnostics']
    checks: Tuple[Tuple[bool, str], ...] = (
        (raw['mode'] in MODES, f"mode must be one of {MODES}"),
        (grid['dim'] in (1, 2, 3), "grid.dim must be 1, 2 or 3"),
        (grid['nr'] >= 4, "grid.nr must be at least 4"),
        (grid['order'] >= 2 and grid['order'] % 2 == 0, "grid.order must be an even integer ≥ 2"),
        (grid['r_far'] > 1.0, "grid.r_far must exceed 1"),
        (grid['band_width'] >= 0.0, "grid.band_width must be non-negative"),
        (step['dt'] > 0.0, "step.dt must be positive"),
        (step['steps'] >= 0, "step.steps must be non-negative"),
        (step['scheme'] in SCHEMES, f"step.scheme must be one of {SCHEMES}"),
        (step['picard_iters'] >= 0, "step.picard_iters must be non-negative"),
        (0.0 < step['cfl_limit'], "step.cfl_limit must be positive"),
        (step['monitor_every'] >= 1, "step.monitor_every must be at least 1"),
        (step['checkpoint_every'] >= 0, "step.checkpoint_every must be non-negative"),
        (tol['c0'] >= 0.0, "tolerances.c0 must be non-negative"),
        (tol['kappa_min'] >= 0.0, "tolerances.kappa_min must be non-negative"),
        (0 <= diag['energy_order'] <= 3, "diagnostics.energy_order must lie in 0..3"),
        (diag['resolutions'] >= 1, "diagnostics.resolutions must be at least 1"),
        (0.0 <= diag['multiplier_margin'] < 1.0, "diagnostics.multiplier_margin must lie in [0, 1)"),
        (raw['preset'] is not None or raw['input'] is not None, "either a preset or an input file is required"),
    )
    for ok, message in checks:
        if not ok:
            raise ConfigurationError(message)


class RunConfigBuilder:
    """
    Assembles a :class:`RunConfig` from the layered sources.

    :ivar manager: file and environment access
    """

    def __init__(self, manager: Optional[ConfigManager] = None, env_prefix: str = 'HARDPHASE_'):
        self.manager = manager or ConfigManager()
        self.env_prefix = env_prefix

    def layers(
        self,
        preset: Optional[str] = None,
        config_file: Optional[str] = None,
        cli_overrides: Optional[Dict[str, Any]] = None
    ) -> Dict[str, Any]:
        """Merged raw dictionary before validation."""
        raw = copy.deepcopy(self.manager.load_config('default'))
        user = self.manager.load_file(config_file) if config_file else {}
        cli_overrides = cli_overrides or {}
        env = self.manager.env_overrides(self.env_prefix)

        chosen = cli_overrides.get('preset') or env.get('preset') or user.get('preset') or preset or raw.get('preset')
        if chosen:
            try:
                _deep_update(raw, self.manager.load_config(f"presets/{chosen}"))
            except ConfigurationError:
                raise ConfigurationError(f"Unknown preset: {chosen}")
            raw['preset'] = chosen
        _deep_update(raw, user)
        _deep_update(raw, env)
        _deep_update(raw, cli_overrides)
        return raw

    def build(
        self,
        preset: Optional[str] = None,
        config_file: Optional[str] = None,
        cli_overrides: Optional[Dict[str, Any]] = None
    ) -> RunConfig:
        raw = self.layers(preset, config_file, cli_overrides)
        self.manager.validate_config(raw, SCHEMA)
        _check_ranges(raw)
        logger.debug(f"Resolved run configuration for preset {raw['preset']!r} in {raw['mode']} mode")
        return self.from_dict(raw)

    @staticmethod
    def from_dict(raw: Dict[str, Any]) -> RunConfig:
        tolerances = Tolerances(**{k: float(v) for k, v in raw['tolerances'].items()})
        step = dict(raw['step'])
        step['dt'] = float(step['dt'])
        step['picard_tol'] = float(step['picard_tol'])
        step['cfl_limit'] = float(step['cfl_limit'])
        grid = dict(raw['grid'])
        grid['r_far'] = float(grid['r_far'])
        grid['band_width'] = float(grid['band_width'])
        return RunConfig(
            mode=raw['mode'],
            preset=raw['preset'],
            input=raw['input'],
            grid=GridConfig(**grid),
            step=StepConfig(tolerances=tolerances, **step),
            diagnostics=DiagnosticsConfig(**raw['diagnostics']),
            output_dir=raw['output']['dir'],
            log_level=raw['output']['log_level'],
            seed=raw['seed'],
        )
