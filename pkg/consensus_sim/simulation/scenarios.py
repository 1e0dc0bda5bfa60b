"""Built-in scenarios reproduced by the ``reproduce`` command.

Each builder returns a config document (1-based, as a user would write it)
so the built-ins go through the same validation path as files on disk.
"""

import math
from typing import Any, Callable, Dict, List, Tuple

from ..core.config import ConfigManager, EXAMPLE_WEIGHTS, ScenarioConfig
from ..core.models import DelayPolicy, ScheduleKind, Strategy, TopologyKind


EXAMPLE_STATE = [5.0, 6.0, 7.0, 8.0]
LN2 = math.log(2.0)

# Counterexample: gaps (k + 3) ln 2, 30 events inside the horizon.
COUNTEREXAMPLE_EVENTS = 30

# Example delay levels tau_d = K * 0.2.
DELAY_LEVELS = (10, 50)

SWITCHING_PHASES = [
    [[2], [], [3], []],
    [[], [1], [], []],
    [[], [], [2], []],
    [[], [], [], [3]],
]


class ScenarioNotFoundError(KeyError):
    """Raised for an unknown built-in scenario name."""
    pass


def _document(**sections: Dict[str, Any]) -> Dict[str, Any]:
    manager = ConfigManager()
    return manager._merge_configs(manager.get_default_config(), sections)


def example_fixed(seed: int = 0) -> Dict[str, Any]:
    """Four agents, fixed spanning-tree topology, no delays, asynchronous updates."""
    return _document(
        agents={'n': 4, 'initial_state': list(EXAMPLE_STATE)},
        timing={'tau_u_min': 0.2, 'tau_u_max': 0.9, 'schedule': ScheduleKind.ASYNCHRONOUS.value},
        topology={'kind': TopologyKind.FIXED.value, 'weights': [list(map(float, r)) for r in EXAMPLE_WEIGHTS]},
        run={'seed': seed, 'horizon': 100.0, 'sample_dt': 0.1, 'consensus_tol': 1e-6},
        analysis={'union_window': 0.9},
    )


def synchronous_fixed(seed: int = 0) -> Dict[str, Any]:
    """The fixed example with one shared update stream."""
    config = example_fixed(seed)
    config['timing']['schedule'] = ScheduleKind.SYNCHRONOUS.value
    config['run']['consensus_tol'] = 1e-8
    return config


def counterexample_times(events: int = COUNTEREXAMPLE_EVENTS) -> List[float]:
    """t_0 = 0 and t_{k+1} = t_k + (k + 3) ln 2, one entry past the last event."""
    times = [0.0]
    steps = 0
    for k in range(events):
        steps += k + 3
        times.append(steps * LN2)
    return times


def counterexample(seed: int = 0) -> Dict[str, Any]:
    """Two agents swapping states with ever longer synchronous gaps."""
    times = counterexample_times()
    return _document(
        agents={'n': 2, 'initial_state': [1.0, -1.0]},
        timing={
            'tau_u_min': 3 * LN2,
            'tau_u_max': (COUNTEREXAMPLE_EVENTS + 3) * LN2,
            'schedule': ScheduleKind.EXPLICIT.value,
            'update_times': [list(times), list(times)],
        },
        topology={'kind': TopologyKind.FIXED.value, 'weights': [[0.0, 1.0], [1.0, 0.0]]},
        run={'seed': seed, 'horizon': times[COUNTEREXAMPLE_EVENTS - 1], 'sample_dt': 1.0, 'consensus_tol': 0.9},
        analysis={'union_window': times[-1]},
    )


def example_delay(K: int, strategy: Strategy, seed: int = 0) -> Dict[str, Any]:
    """The fixed example with uniform delays bounded by K * 0.2."""
    config = example_fixed(seed)
    config['delays'] = {'K': K, 'policy': DelayPolicy.UNIFORM.value, 'strategy': strategy.value, 'explicit': []}
    config['run']['horizon'] = 30.0
    return config


def example_switching(seed: int = 0) -> Dict[str, Any]:
    """Four-phase reception cycles over the example graph with tau_d = 2."""
    config = example_fixed(seed)
    config['topology'] = {
        'kind': TopologyKind.PERIODIC.value,
        'weights': [list(map(float, r)) for r in EXAMPLE_WEIGHTS],
        'weight_bounds': None,
        'phases': [[list(p) for p in cycle] for cycle in SWITCHING_PHASES],
        'availability': 1.0,
    }
    config['delays'] = {'K': 10, 'policy': DelayPolicy.UNIFORM.value, 'strategy': Strategy.PLAIN.value,
                        'explicit': []}
    config['run']['horizon'] = 200.0
    config['run']['consensus_tol'] = 1e-4
    config['analysis']['union_window'] = 8 * 0.9
    return config


def _delay_variants(seed: int) -> List[Tuple[str, Dict[str, Any]]]:
    return [
        (f"tau_d-{K * 0.2:g}-{strategy.value}", example_delay(K, strategy, seed))
        for K in DELAY_LEVELS
        for strategy in (Strategy.PLAIN, Strategy.MOST_RECENT_DATA)
    ]


BUILTINS: Dict[str, Callable[[int], List[Tuple[str, Dict[str, Any]]]]] = {
    "example-fixed": lambda seed: [("example-fixed", example_fixed(seed))],
    "counterexample": lambda seed: [("counterexample", counterexample(seed))],
    "example-delay": _delay_variants,
    "example-switching": lambda seed: [("example-switching", example_switching(seed))],
    "synchronous-fixed": lambda seed: [("synchronous-fixed", synchronous_fixed(seed))],
}


def builtin_names() -> List[str]:
    return list(BUILTINS)


def builtin_documents(name: str, seed: int = 0) -> List[Tuple[str, Dict[str, Any]]]:
    """Labelled config documents of a built-in scenario."""
    try:
        builder = BUILTINS[name]
    except KeyError:
        raise ScenarioNotFoundError(f"unknown scenario {name!r}; choose from {', '.join(BUILTINS)}") from None
    return builder(seed)


def builtin_scenarios(name: str, seed: int = 0) -> List[Tuple[str, ScenarioConfig]]:
    """Labelled, validated scenarios of a built-in."""
    manager = ConfigManager()
    return [(label, manager.build_scenario(doc)) for label, doc in builtin_documents(name, seed)]
