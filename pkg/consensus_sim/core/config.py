"""Configuration management for Async Consensus Sim.

Scenario files are YAML documents with one section per concern. Agent
indices inside a config file are 1-based, like every other human-facing
surface; update indices count from 0.
"""

import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

import numpy as np
import yaml

from .graph import DirectedWeightedGraph
from .interfaces import IConfigManager
from .models import DelayPolicy, ScheduleKind, Strategy, TopologyKind, WindowMode


logger = logging.getLogger(__name__)

SEED_ENV_VAR = "CONSENSUS_SIM_SEED"

EXAMPLE_WEIGHTS = [
    [0, 1, 1, 0],
    [1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, 0, 1, 0],
]


class ConfigError(Exception):
    """Raised when a configuration fails validation."""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) or "invalid configuration")


@dataclass
class AgentsConfig:
    """Agent count and constant pre-history."""
    n: int = 4
    initial_state: List[float] = field(default_factory=lambda: [5.0, 6.0, 7.0, 8.0])


@dataclass
class TimingConfig:
    """Update-time bounds and schedule generation."""
    tau_u_min: float = 0.2
    tau_u_max: float = 0.9
    schedule: str = ScheduleKind.ASYNCHRONOUS.value
    update_times: Optional[List[List[float]]] = None


@dataclass
class TopologyConfig:
    """Available-channel weights and the reception rule."""
    kind: str = TopologyKind.FIXED.value
    weights: List[List[float]] = field(default_factory=lambda: [list(map(float, r)) for r in EXAMPLE_WEIGHTS])
    weight_bounds: Optional[List[float]] = None
    phases: Optional[List[List[List[int]]]] = None
    availability: float = 1.0


@dataclass
class DelaysConfig:
    """Communication delays and the reading strategy."""
    K: int = 0
    policy: str = DelayPolicy.NONE.value
    strategy: str = Strategy.PLAIN.value
    explicit: List[List[float]] = field(default_factory=list)


@dataclass
class RunConfig:
    """Seed, horizon and output sampling."""
    seed: int = 0
    horizon: float = 100.0
    sample_dt: float = 0.1
    consensus_tol: float = 1e-6


@dataclass
class AnalysisConfig:
    """Verification settings."""
    window_mode: str = WindowMode.OBSERVED.value
    union_window: Optional[float] = None
    certificate_window: Optional[float] = None


@dataclass
class OutputConfig:
    """Optional artifacts."""
    dump_pi: bool = False
    compress_pi: bool = False


@dataclass
class SimulationConfig:
    """Complete configuration for a scenario."""
    agents: AgentsConfig
    timing: TimingConfig
    topology: TopologyConfig
    delays: DelaysConfig
    run: RunConfig
    analysis: AnalysisConfig
    output: OutputConfig

    def __init__(self):
        self.agents = AgentsConfig()
        self.timing = TimingConfig()
        self.topology = TopologyConfig()
        self.delays = DelaysConfig()
        self.run = RunConfig()
        self.analysis = AnalysisConfig()
        self.output = OutputConfig()


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, 0-based description of one run."""
    n: int
    tau_u_min: float
    tau_u_max: float
    K: int
    weights: Tuple[Tuple[float, ...], ...]
    initial_state: Tuple[float, ...]
    seed: int = 0
    horizon: float = 100.0
    sample_dt: float = 0.1
    consensus_tol: float = 1e-6
    schedule: ScheduleKind = ScheduleKind.ASYNCHRONOUS
    update_times: Optional[Tuple[Tuple[float, ...], ...]] = None
    topology: TopologyKind = TopologyKind.FIXED
    weight_bounds: Optional[Tuple[float, float]] = None
    phases: Optional[Tuple[Tuple[FrozenSet[int], ...], ...]] = None
    availability: float = 1.0
    delay_policy: DelayPolicy = DelayPolicy.NONE
    strategy: Strategy = Strategy.PLAIN
    explicit_delays: Tuple[Tuple[int, int, int, float], ...] = ()
    window_mode: WindowMode = WindowMode.OBSERVED
    union_window: Optional[float] = None
    certificate_window: Optional[float] = None
    dump_pi: bool = False
    compress_pi: bool = False

    @property
    def tau_d(self) -> float:
        """Maximum delay K * tau_u_min."""
        return self.K * self.tau_u_min

    def graph(self) -> DirectedWeightedGraph:
        return DirectedWeightedGraph(np.array(self.weights, dtype=float), self.weight_bounds)

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        """Nested, 1-based config document equivalent to this scenario."""
        return {
            'agents': {'n': self.n, 'initial_state': list(self.initial_state)},
            'timing': {
                'tau_u_min': self.tau_u_min,
                'tau_u_max': self.tau_u_max,
                'schedule': self.schedule.value,
                'update_times': None if self.update_times is None else [list(t) for t in self.update_times],
            },
            'topology': {
                'kind': self.topology.value,
                'weights': [list(r) for r in self.weights],
                'weight_bounds': None if self.weight_bounds is None else list(self.weight_bounds),
                'phases': None if self.phases is None else [
                    [sorted(j + 1 for j in phase) for phase in agent] for agent in self.phases
                ],
                'availability': self.availability,
            },
            'delays': {
                'K': self.K,
                'policy': self.delay_policy.value,
                'strategy': self.strategy.value,
                'explicit': [[i + 1, k, j + 1, tau] for i, k, j, tau in self.explicit_delays],
            },
            'run': {
                'seed': self.seed,
                'horizon': self.horizon,
                'sample_dt': self.sample_dt,
                'consensus_tol': self.consensus_tol,
            },
            'analysis': {
                'window_mode': self.window_mode.value,
                'union_window': self.union_window,
                'certificate_window': self.certificate_window,
            },
            'output': {'dump_pi': self.dump_pi, 'compress_pi': self.compress_pi},
        }


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _choices(enum_cls) -> List[str]:
    return [member.value for member in enum_cls]


class ConfigManager(IConfigManager):
    """Manages scenario loading, saving, validation and conversion."""

    DEFAULT_CONFIG_NAME = "scenario.yml"

    def __init__(self, output_dir: Optional[Path] = None):
        self.output_dir = output_dir or Path.cwd()
        self.config_path = self.output_dir / self.DEFAULT_CONFIG_NAME

    def load_config(self, config_path: Optional[Path] = None) -> Dict[str, Any]:
        """Load a scenario from YAML, merged over defaults.

        Raises:
            ConfigError: If the file cannot be read or parsed
        """
        path = Path(config_path) if config_path else self.config_path

        if not path.exists():
            logger.debug(f"No config at {path}, using defaults")
            return self.apply_environment(self.get_default_config())

        try:
            with open(path, 'r', encoding='utf-8') as f:
                config_data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError([f"failed to load config from {path}: {e}"]) from e

        if not isinstance(config_data, dict):
            raise ConfigError([f"config root in {path} must be a mapping"])

        merged_config = self._merge_configs(self.get_default_config(), config_data)
        return self.apply_environment(merged_config)

    def apply_environment(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """Let CONSENSUS_SIM_SEED override run.seed."""
        raw = os.environ.get(SEED_ENV_VAR)
        if raw is None or raw.strip() == "":
            return config
        try:
            seed = int(raw)
        except ValueError:
            seed = raw
        logger.info(f"{SEED_ENV_VAR} overrides run.seed with {raw!r}")
        config = self._merge_configs(config, {'run': {'seed': seed}})
        return config

    def save_config(self, config: Dict[str, Any], config_path: Optional[Path] = None) -> bool:
        """Save configuration to YAML file."""
        path = Path(config_path) if config_path else self.config_path

        try:
            path.parent.mkdir(parents=True, exist_ok=True)

            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                yaml.safe_dump(config, f, default_flow_style=None, sort_keys=False, indent=2)

            return True
        except OSError as e:
            logger.error(f"Failed to save config to {path}: {e}")
            return False

    def get_default_config(self) -> Dict[str, Any]:
        """Get default configuration values (the fixed-topology example)."""
        default_config = SimulationConfig()
        return {
            'agents': asdict(default_config.agents),
            'timing': asdict(default_config.timing),
            'topology': asdict(default_config.topology),
            'delays': asdict(default_config.delays),
            'run': asdict(default_config.run),
            'analysis': asdict(default_config.analysis),
            'output': asdict(default_config.output),
        }

    def validate_config(self, config: Dict[str, Any]) -> List[str]:
        """Validate configuration and return any errors."""
        errors: List[str] = []

        # Agents
        agents = config.get('agents') or {}
        n = agents.get('n')
        if not _is_int(n) or n < 1:
            errors.append("agents.n must be a positive integer")
            return errors

        initial_state = agents.get('initial_state')
        if not isinstance(initial_state, list) or len(initial_state) != n:
            errors.append(f"agents.initial_state must list {n} values")
        elif not all(_is_number(v) for v in initial_state):
            errors.append("agents.initial_state must contain finite numbers")

        # Timing
        timing = config.get('timing') or {}
        tau_u_min = timing.get('tau_u_min')
        tau_u_max = timing.get('tau_u_max')
        bounds_ok = _is_number(tau_u_min) and _is_number(tau_u_max)
        if not _is_number(tau_u_min) or tau_u_min <= 0:
            errors.append("timing.tau_u_min must be greater than 0")
            bounds_ok = False
        if not _is_number(tau_u_max) or (bounds_ok and tau_u_max < tau_u_min):
            errors.append("timing.tau_u_max must be at least timing.tau_u_min")
            bounds_ok = False

        schedule = timing.get('schedule')
        if schedule not in _choices(ScheduleKind):
            errors.append(f"timing.schedule must be one of {', '.join(_choices(ScheduleKind))}")
        elif schedule == ScheduleKind.EXPLICIT.value:
            errors.extend(self._validate_update_times(timing.get('update_times'), n,
                                                      tau_u_min if bounds_ok else None,
                                                      tau_u_max if bounds_ok else None))

        # Topology
        topology = config.get('topology') or {}
        kind = topology.get('kind')
        if kind not in _choices(TopologyKind):
            errors.append(f"topology.kind must be one of {', '.join(_choices(TopologyKind))}")

        weights = topology.get('weights')
        weights_ok = (
            isinstance(weights, list) and len(weights) == n
            and all(isinstance(r, list) and len(r) == n and all(_is_number(v) for v in r) for r in weights)
        )
        if not weights_ok:
            errors.append(f"topology.weights must be a {n}x{n} matrix of numbers")
        else:
            w = np.array(weights, dtype=float)
            if np.any(w < 0):
                errors.append("topology.weights must be nonnegative")
            if np.any(np.diag(w) != 0):
                errors.append("topology.weights must have a zero diagonal")
            bounds = topology.get('weight_bounds')
            if bounds is not None:
                if not (isinstance(bounds, list) and len(bounds) == 2 and all(_is_number(b) for b in bounds)
                        and 0 < bounds[0] <= bounds[1]):
                    errors.append("topology.weight_bounds must be [a_min, a_max] with 0 < a_min <= a_max")
                else:
                    nonzero = w[w > 0]
                    if nonzero.size and (nonzero.min() < bounds[0] or nonzero.max() > bounds[1]):
                        errors.append("topology.weights must lie within topology.weight_bounds")

        if kind == TopologyKind.PERIODIC.value:
            errors.extend(self._validate_phases(topology.get('phases'), n,
                                                np.array(weights, dtype=float) if weights_ok else None))
        availability = topology.get('availability')
        if not _is_number(availability) or not 0 < availability <= 1:
            errors.append("topology.availability must be in (0, 1]")

        # Delays
        delays = config.get('delays') or {}
        K = delays.get('K')
        if not _is_int(K) or K < 0:
            errors.append("delays.K must be a nonnegative integer")
        policy = delays.get('policy')
        if policy not in _choices(DelayPolicy):
            errors.append(f"delays.policy must be one of {', '.join(_choices(DelayPolicy))}")
        if delays.get('strategy') not in _choices(Strategy):
            errors.append(f"delays.strategy must be one of {', '.join(_choices(Strategy))}")
        if policy == DelayPolicy.EXPLICIT.value:
            tau_d = K * tau_u_min if _is_int(K) and bounds_ok else None
            errors.extend(self._validate_explicit_delays(delays.get('explicit'), n, tau_d))

        # Run
        run = config.get('run') or {}
        seed = run.get('seed')
        if not _is_int(seed) or seed < 0:
            errors.append("run.seed must be a nonnegative integer")
        horizon = run.get('horizon')
        if not _is_number(horizon) or horizon < 0:
            errors.append("run.horizon must be nonnegative")
        sample_dt = run.get('sample_dt')
        if not _is_number(sample_dt) or sample_dt <= 0:
            errors.append("run.sample_dt must be greater than 0")
        consensus_tol = run.get('consensus_tol')
        if not _is_number(consensus_tol) or consensus_tol <= 0:
            errors.append("run.consensus_tol must be greater than 0")

        # Analysis
        analysis = config.get('analysis') or {}
        if analysis.get('window_mode') not in _choices(WindowMode):
            errors.append(f"analysis.window_mode must be one of {', '.join(_choices(WindowMode))}")
        for key in ('union_window', 'certificate_window'):
            value = analysis.get(key)
            if value is not None and (not _is_number(value) or value <= 0):
                errors.append(f"analysis.{key} must be greater than 0")

        # Output
        output = config.get('output') or {}
        for key in ('dump_pi', 'compress_pi'):
            if not isinstance(output.get(key), bool):
                errors.append(f"output.{key} must be true or false")

        return errors

    def _validate_update_times(self, update_times: Any, n: int,
                               tau_u_min: Optional[float], tau_u_max: Optional[float]) -> List[str]:
        errors: List[str] = []
        if not isinstance(update_times, list) or len(update_times) != n:
            return [f"timing.update_times must list {n} sequences for an explicit schedule"]
        for i, times in enumerate(update_times, start=1):
            if not isinstance(times, list) or not times or not all(_is_number(t) for t in times):
                errors.append(f"timing.update_times[{i}] must be a nonempty list of numbers")
                continue
            if times[0] != 0:
                errors.append(f"timing.update_times[{i}] must start at 0")
            gaps = np.diff(np.asarray(times, dtype=float))
            if np.any(gaps <= 0):
                errors.append(f"timing.update_times[{i}] must be strictly increasing")
            elif tau_u_min is not None and gaps.size and (
                    gaps.min() < tau_u_min - 1e-12 or gaps.max() > tau_u_max + 1e-12):
                errors.append(f"timing.update_times[{i}] gaps must lie in [tau_u_min, tau_u_max]")
        return errors

    def _validate_phases(self, phases: Any, n: int, weights: Optional[np.ndarray]) -> List[str]:
        if not isinstance(phases, list) or len(phases) != n:
            return [f"topology.phases must list {n} per-agent phase cycles"]
        errors: List[str] = []
        for i, cycle in enumerate(phases, start=1):
            if not isinstance(cycle, list) or not cycle:
                errors.append(f"topology.phases[{i}] must be a nonempty list of received sets")
                continue
            for phase in cycle:
                if not isinstance(phase, list) or not all(_is_int(j) and 1 <= j <= n for j in phase):
                    errors.append(f"topology.phases[{i}] entries must be lists of agents 1..{n}")
                    break
                if weights is not None and any(weights[i - 1, j - 1] <= 0 for j in phase):
                    errors.append(f"topology.phases[{i}] receives over a missing edge")
                    break
        return errors

    def _validate_explicit_delays(self, explicit: Any, n: int, tau_d: Optional[float]) -> List[str]:
        if not isinstance(explicit, list):
            return ["delays.explicit must be a list of [i, k, j, tau] entries"]
        errors: List[str] = []
        for entry in explicit:
            if not (isinstance(entry, list) and len(entry) == 4 and _is_int(entry[0]) and _is_int(entry[1])
                    and _is_int(entry[2]) and _is_number(entry[3])):
                errors.append(f"delays.explicit entry {entry!r} must be [i, k, j, tau]")
                continue
            i, k, j, tau = entry
            if not (1 <= i <= n and 1 <= j <= n) or k < 0:
                errors.append(f"delays.explicit entry {entry!r} has an invalid index")
            elif tau < 0 or (tau_d is not None and tau > tau_d + 1e-12):
                errors.append(f"delays.explicit entry {entry!r} must have 0 <= tau <= K * tau_u_min")
        return errors

    def build_scenario(self, config: Dict[str, Any]) -> ScenarioConfig:
        """Convert a validated config document into a ScenarioConfig.

        Raises:
            ConfigError: With every validation error found
        """
        errors = self.validate_config(config)
        if errors:
            raise ConfigError(errors)

        agents, timing, topology = config['agents'], config['timing'], config['topology']
        delays, run = config['delays'], config['run']
        analysis, output = config['analysis'], config['output']

        schedule = ScheduleKind(timing['schedule'])
        update_times = None
        if schedule is ScheduleKind.EXPLICIT:
            update_times = tuple(tuple(float(t) for t in times) for times in timing['update_times'])

        kind = TopologyKind(topology['kind'])
        phases = None
        if kind is TopologyKind.PERIODIC:
            phases = tuple(
                tuple(frozenset(j - 1 for j in phase) for phase in cycle) for cycle in topology['phases']
            )
        bounds = topology.get('weight_bounds')

        policy = DelayPolicy(delays['policy'])
        explicit: Tuple[Tuple[int, int, int, float], ...] = ()
        if policy is DelayPolicy.EXPLICIT:
            explicit = tuple((int(i) - 1, int(k), int(j) - 1, float(tau)) for i, k, j, tau in delays['explicit'])

        return ScenarioConfig(
            n=int(agents['n']),
            tau_u_min=float(timing['tau_u_min']),
            tau_u_max=float(timing['tau_u_max']),
            K=int(delays['K']),
            weights=tuple(tuple(float(v) for v in row) for row in topology['weights']),
            initial_state=tuple(float(v) for v in agents['initial_state']),
            seed=int(run['seed']),
            horizon=float(run['horizon']),
            sample_dt=float(run['sample_dt']),
            consensus_tol=float(run['consensus_tol']),
            schedule=schedule,
            update_times=update_times,
            topology=kind,
            weight_bounds=None if bounds is None else (float(bounds[0]), float(bounds[1])),
            phases=phases,
            availability=float(topology['availability']),
            delay_policy=policy,
            strategy=Strategy(delays['strategy']),
            explicit_delays=explicit,
            window_mode=WindowMode(analysis['window_mode']),
            union_window=None if analysis.get('union_window') is None else float(analysis['union_window']),
            certificate_window=(None if analysis.get('certificate_window') is None
                                else float(analysis['certificate_window'])),
            dump_pi=bool(output['dump_pi']),
            compress_pi=bool(output['compress_pi']),
        )

    def load_scenario(self, config_path: Optional[Path] = None) -> ScenarioConfig:
        """Load, validate and convert in one step."""
        return self.build_scenario(self.load_config(config_path))

    def _merge_configs(self, default: Dict[str, Any], user: Dict[str, Any]) -> Dict[str, Any]:
        """Recursively merge user config with default config."""
        result = default.copy()

        for key, value in user.items():
            if key in result and isinstance(result[key], dict) and isinstance(value, dict):
                result[key] = self._merge_configs(result[key], value)
            else:
                result[key] = value

        return result
