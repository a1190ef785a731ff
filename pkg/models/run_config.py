"""
Run Config Model Module

This module defines the validated configuration of one experiment run.
Every range is checked before any computation starts, and all offending
keys are reported together.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional

from utils.exceptions import ConfigError
from utils.number_format import format_float

KERNELS = ('alg1', 'alg2', 'hybrid')
SUITES = ('benchmark', 'quadratic')
GRAPHS = ('ring', 'path', 'complete', 'geometric')
WEIGHT_SCHEMES = ('metropolis', 'lazy-metropolis')
SCHEDULES = ('manual', 'theorem1', 'theorem2', 'theorem3', 'theorem4')

REQUIRED_KEYS = ('kernel', 'suite', 'd', 'n', 'T', 'seed')
SCHEDULE_PARAM_KEYS = ('eta0', 'eta_power', 'u0', 'u_power', 'alpha_eta', 'alpha_u', 'gamma',
                       'alpha', 'u1', 'lambda_tilde')
CONSTANT_KEYS = ('L', 'G', 'mu')
OPTIONAL_KEYS = ('graph', 'max_angle', 'weights', 'schedule', 'init_std', 'log_every', 'output')
KNOWN_KEYS = REQUIRED_KEYS + OPTIONAL_KEYS + SCHEDULE_PARAM_KEYS + CONSTANT_KEYS

# Schedule parameters each kind cannot do without
SCHEDULE_REQUIREMENTS = {
    'manual': ('eta0', 'u0'),
    'theorem1': ('alpha_eta', 'alpha_u', 'gamma'),
    'theorem2': ('alpha_eta', 'alpha_u'),
    'theorem3': ('u0',),
    'theorem4': ('alpha', 'u1'),
}
# Suite constants each kind needs; the quadratic suite supplies L and mu itself
CONSTANT_REQUIREMENTS = {
    'manual': (),
    'theorem1': ('L', 'G'),
    'theorem2': ('L', 'mu'),
    'theorem3': ('L',),
    'theorem4': ('L', 'mu'),
}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration of one run."""

    kernel: str
    suite: str
    d: int
    n: int
    T: int
    seed: int
    graph: str = 'geometric'
    max_angle: float = math.pi / 4
    weights: str = 'metropolis'
    schedule: str = 'manual'
    schedule_params: Dict[str, float] = field(default_factory=dict)
    L: Optional[float] = None
    G: Optional[float] = None
    mu: Optional[float] = None
    init_std: Optional[float] = None
    log_every: int = 0
    output: Optional[str] = None

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> 'RunConfig':
        """Validate raw key-value pairs and build a config.

        Raises:
            ConfigError: listing every missing, unknown or invalid key
        """
        bad: List[str] = []
        details: List[str] = []

        def fail(key: str, why: str) -> None:
            bad.append(key)
            details.append(f"{key}: {why}")

        for key in raw:
            if key not in KNOWN_KEYS:
                fail(key, 'unknown key')
        for key in REQUIRED_KEYS:
            if key not in raw or str(raw[key]).strip() == '':
                fail(key, 'missing')

        def as_int(key: str, default=None, minimum=None):
            if key not in raw or str(raw[key]).strip() == '':
                return default
            try:
                value = int(str(raw[key]).strip())
            except ValueError:
                fail(key, f"expected an integer, got '{raw[key]}'")
                return default
            if minimum is not None and value < minimum:
                fail(key, f"must be >= {minimum}")
            return value

        def as_float(key: str, default=None):
            if key not in raw or str(raw[key]).strip() == '':
                return default
            try:
                value = float(str(raw[key]).strip())
            except ValueError:
                fail(key, f"expected a number, got '{raw[key]}'")
                return default
            if not math.isfinite(value):
                fail(key, 'must be finite')
            return value

        def as_choice(key: str, choices, default=None):
            if key not in raw:
                return default
            value = str(raw[key]).strip()
            if value not in choices:
                fail(key, f"expected one of {', '.join(choices)}, got '{value}'")
                return default
            return value

        kernel = as_choice('kernel', KERNELS)
        suite = as_choice('suite', SUITES)
        d = as_int('d', minimum=1)
        n = as_int('n', minimum=2)
        T = as_int('T', minimum=1)
        seed = as_int('seed', minimum=0)
        graph = as_choice('graph', GRAPHS, 'geometric')
        weights = as_choice('weights', WEIGHT_SCHEMES, 'metropolis')
        schedule = as_choice('schedule', SCHEDULES, 'manual')
        max_angle = as_float('max_angle', math.pi / 4)
        if max_angle is not None and not 0 < max_angle <= math.pi:
            fail('max_angle', 'must lie in (0, pi]')
        init_std = as_float('init_std')
        if init_std is not None and init_std < 0:
            fail('init_std', 'must be non-negative')
        log_every = as_int('log_every', 0, minimum=0)
        output = str(raw['output']).strip() if raw.get('output') else None

        constants = {key: as_float(key) for key in CONSTANT_KEYS}
        for key, value in constants.items():
            if value is not None and value <= 0:
                fail(key, 'must be positive')
        params = {key: as_float(key) for key in SCHEDULE_PARAM_KEYS if key in raw}

        if schedule is not None:
            for key in SCHEDULE_REQUIREMENTS[schedule]:
                if params.get(key) is None:
                    fail(key, f"required by the {schedule} schedule")
            for key in CONSTANT_REQUIREMENTS[schedule]:
                supplied_by_suite = suite == 'quadratic' and key in ('L', 'mu')
                if constants[key] is None and not supplied_by_suite:
                    fail(key, f"required by the {schedule} schedule on the {suite} suite")

        if kernel in ('alg2', 'hybrid') and schedule is not None:
            constant_step = schedule in ('theorem3', 'theorem4') or (
                schedule == 'manual' and (params.get('eta_power') or 0.0) == 0.0)
            if not constant_step:
                fail('schedule', f"the {kernel} kernel needs a constant step size")
        if kernel == 'alg1' and schedule in ('theorem3', 'theorem4'):
            fail('schedule', f"{schedule} schedules apply to the tracking kernels")

        if bad:
            raise ConfigError(bad, details)

        return cls(kernel=kernel, suite=suite, d=d, n=n, T=T, seed=seed, graph=graph,
                   max_angle=max_angle, weights=weights, schedule=schedule,
                   schedule_params={k: v for k, v in params.items() if v is not None},
                   L=constants['L'], G=constants['G'], mu=constants['mu'],
                   init_std=init_std, log_every=log_every, output=output)

    def with_seed(self, seed: int) -> 'RunConfig':
        return replace(self, seed=seed)

    def with_output(self, output: Optional[str]) -> 'RunConfig':
        return replace(self, output=output)

    def to_entries(self) -> Dict[str, str]:
        """Key-value rendering that from_mapping parses back to an equal config."""
        entries = {
            'kernel': self.kernel,
            'suite': self.suite,
            'd': str(self.d),
            'n': str(self.n),
            'T': str(self.T),
            'seed': str(self.seed),
            'graph': self.graph,
            'max_angle': format_float(self.max_angle),
            'weights': self.weights,
            'schedule': self.schedule,
        }
        for key in SCHEDULE_PARAM_KEYS:
            if key in self.schedule_params:
                entries[key] = format_float(self.schedule_params[key])
        for key in CONSTANT_KEYS:
            value = getattr(self, key)
            if value is not None:
                entries[key] = format_float(value)
        if self.init_std is not None:
            entries['init_std'] = format_float(self.init_std)
        entries['log_every'] = str(self.log_every)
        return entries
