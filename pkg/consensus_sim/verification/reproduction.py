"""Built-in scenario runs with pass/fail checks per expected behavior."""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..core.models import Strategy
from ..simulation.dynamics import RunResult, run
from ..simulation.scenarios import DELAY_LEVELS, builtin_scenarios
from ..storage.writers import sample_times
from .analysis import (
    check_union_condition, containment_violations, detect_consensus, predicted_group_value,
    spread, spread_at, window_extrema,
)
from .augmented import observed_lookback


logger = logging.getLogger(__name__)

MONOTONE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CheckLine:
    """One pass/fail line of a reproduction."""
    name: str
    passed: bool
    detail: str

    def as_tuple(self) -> Tuple[str, bool, str]:
        return self.name, self.passed, self.detail


@dataclass
class Reproduction:
    """Runs of a built-in scenario and the checks applied to them."""
    name: str
    runs: List[Tuple[str, RunResult]] = field(default_factory=list)
    checks: List[CheckLine] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def invariant_checks(label: str, result: RunResult) -> List[CheckLine]:
    """Containment, monotone window extrema and the interval-count audit."""
    times = sample_times(result.scenario.horizon, result.scenario.sample_dt, result.events.times)
    outside = containment_violations(result, times)
    highs, lows = window_extrema(result.states, observed_lookback(result))
    rises = int(np.sum(np.diff(highs) > MONOTONE_TOLERANCE))
    drops = int(np.sum(np.diff(lows) < -MONOTONE_TOLERANCE))
    audit = result.log.interval_audit
    excess = len(audit.violations) if audit is not None else 0
    return [
        CheckLine(f"{label}: containment", outside == 0, f"{outside} sampled values outside the initial range"),
        CheckLine(f"{label}: monotone window", rises + drops == 0,
                  f"{rises} window-max increases, {drops} window-min decreases"),
        CheckLine(f"{label}: interval bound", excess == 0,
                  f"max {audit.max_observed if audit else 0} events per interval, bound "
                  f"{audit.bound if audit else 'none'}"),
    ]


def _check_counterexample(rep: Reproduction) -> None:
    label, result = rep.runs[0]
    spreads = np.ptp(result.states, axis=1)
    expected = [2.0, 1.5, 1.3125]
    first = spreads[:3]
    rep.checks.append(CheckLine(
        "counterexample: first spreads",
        len(first) == 3 and bool(np.all(np.abs(first - expected) <= 1e-12)),
        "spreads " + ", ".join(repr(float(s)) for s in first),
    ))
    rep.checks.append(CheckLine(
        "counterexample: no consensus",
        float(spreads.min()) >= 1.0,
        f"min spread {float(spreads.min())!r} over {len(spreads)} events",
    ))


def _final_values(name: str, seeds: Sequence[int]) -> List[float]:
    values = []
    for seed in seeds:
        (_, scenario), = builtin_scenarios(name, seed)
        values.append(float(np.mean(run(scenario).final_state)))
    return values


def _check_fixed(rep: Reproduction, statistics_seeds: int) -> None:
    label, result = rep.runs[0]
    tol = result.scenario.consensus_tol
    reached = detect_consensus(result, tol)
    final = result.state_at(result.scenario.horizon)
    rep.checks.append(CheckLine(f"{label}: consensus", reached is not None,
                                f"spread < {tol} from t={reached!r}"))
    rep.checks.append(CheckLine(f"{label}: final value range", bool(np.all((final >= 5.0) & (final <= 8.0))),
                                f"final value {float(np.mean(final))!r}"))
    seed0 = result.scenario.seed
    values = _final_values("example-fixed", range(seed0, seed0 + statistics_seeds))
    variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
    rep.checks.append(CheckLine(f"{label}: final values depend on update times", variance > 0.0,
                                f"sample variance {variance!r} over {len(values)} seeds"))


def _check_delay(rep: Reproduction, statistics_seeds: int) -> None:
    seed0 = rep.runs[0][1].scenario.seed
    samples: Dict[str, List[float]] = {label: [] for label, _ in rep.runs}
    for label, result in rep.runs:
        samples[label].append(spread_at(result, 30.0))
    for seed in range(seed0 + 1, seed0 + statistics_seeds):
        for label, scenario in builtin_scenarios("example-delay", seed):
            samples[label].append(spread_at(run(scenario), 30.0))
    medians = {label: float(np.median(values)) for label, values in samples.items()}
    for label, value in medians.items():
        rep.checks.append(CheckLine(f"{label}: spread at t=30", True, f"median {value!r}"))

    def key(K: int, strategy: Strategy) -> str:
        return f"tau_d-{K * 0.2:g}-{strategy.value}"

    low, high = DELAY_LEVELS
    for strategy in (Strategy.PLAIN, Strategy.MOST_RECENT_DATA):
        a, b = medians[key(low, strategy)], medians[key(high, strategy)]
        rep.checks.append(CheckLine(f"example-delay: shorter delays converge faster ({strategy.value})",
                                    a <= b, f"{a!r} <= {b!r}"))
    for K in DELAY_LEVELS:
        a, b = medians[key(K, Strategy.MOST_RECENT_DATA)], medians[key(K, Strategy.PLAIN)]
        rep.checks.append(CheckLine(f"example-delay: most-recent-data helps (tau_d={K * 0.2:g})",
                                    a <= b, f"{a!r} <= {b!r}"))


def _check_switching(rep: Reproduction) -> None:
    label, result = rep.runs[0]
    scenario = result.scenario
    T = scenario.union_window or 8 * scenario.tau_u_max
    condition = check_union_condition(result.topology, result.schedules, T, scenario.horizon)
    rep.checks.append(CheckLine(f"{label}: union condition", condition.holds,
                                f"T={T!r}, {condition.windows_checked} windows"))
    reached = detect_consensus(result, scenario.consensus_tol)
    rep.checks.append(CheckLine(f"{label}: consensus", reached is not None,
                                f"spread < {scenario.consensus_tol} from t={reached!r}"))


def _check_synchronous(rep: Reproduction) -> None:
    label, result = rep.runs[0]
    scenario = result.scenario
    predicted = predicted_group_value(result.graph, scenario.initial_state)
    final = result.state_at(scenario.horizon)
    gap = abs(float(np.mean(final)) - predicted)
    rep.checks.append(CheckLine(f"{label}: group value", gap <= 1e-6 and spread(final) < 1e-8,
                                f"predicted {predicted!r}, |final - predicted| = {gap!r}"))


def reproduce(name: str, seed: int = 0, statistics_seeds: int = 20) -> Reproduction:
    """Run a built-in scenario and evaluate its checks.

    Raises:
        ScenarioNotFoundError: For an unknown name
    """
    rep = Reproduction(name)
    for label, scenario in builtin_scenarios(name, seed):
        result = run(scenario)
        rep.runs.append((label, result))
        rep.checks.extend(invariant_checks(label, result))

    if name == "counterexample":
        _check_counterexample(rep)
    elif name == "example-fixed":
        _check_fixed(rep, statistics_seeds)
    elif name == "example-delay":
        _check_delay(rep, statistics_seeds)
    elif name == "example-switching":
        _check_switching(rep)
    elif name == "synchronous-fixed":
        _check_synchronous(rep)

    logger.info(f"reproduced {name}: {sum(c.passed for c in rep.checks)}/{len(rep.checks)} checks passed")
    return rep
