"""Update schedules, delay sampling, event merging and window constants.

Randomness comes from counter-based Philox streams keyed by
(seed, purpose, agent), so adding agents or purposes never perturbs the
streams that already exist.
"""

import logging
import math
from collections import defaultdict
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import ScenarioConfig
from ..core.interfaces import IDelaySampler, ITopologyProcess
from ..core.models import (
    AgentIndex, DelayAssignment, DelayPolicy, GlobalEvent, GlobalEventSequence,
    IntervalAudit, ReadAnnotation, Reception, ScheduleKind, Seconds,
    SIMULTANEITY_TOLERANCE, StreamPurpose, UpdateSchedule, WindowConstants,
)


logger = logging.getLogger(__name__)


class ScheduleError(Exception):
    """Raised for invalid timing bounds, schedules or delays."""
    pass


def stream(seed: int, purpose: StreamPurpose, agent: int = 0) -> np.random.Generator:
    """Independent generator for one (purpose, agent) pair of a master seed."""
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(agent)))
    return np.random.Generator(np.random.Philox(sequence))


def _check_bounds(tau_u_min: Seconds, tau_u_max: Seconds, horizon: Seconds) -> None:
    if not 0 < tau_u_min <= tau_u_max:
        raise ScheduleError(f"update bounds must satisfy 0 < tau_u_min <= tau_u_max, "
                            f"got {tau_u_min}, {tau_u_max}")
    if horizon < 0:
        raise ScheduleError(f"horizon must be nonnegative, got {horizon}")


def _draw_times(rng: np.random.Generator, tau_u_min: Seconds, tau_u_max: Seconds,
                horizon: Seconds) -> Tuple[Seconds, ...]:
    # Enough gaps to pass the horizon; the stream prefix does not depend on the horizon.
    count = int(math.floor(horizon / tau_u_min)) + 2
    gaps = rng.uniform(tau_u_min, tau_u_max, size=count)
    times = np.concatenate(([0.0], np.cumsum(gaps)))
    last = int(np.searchsorted(times, horizon, side="right"))
    return tuple(float(t) for t in times[:last + 1])


def generate_schedules(n: int, tau_u_min: Seconds, tau_u_max: Seconds, seed: int,
                       horizon: Seconds) -> List[UpdateSchedule]:
    """Independent asynchronous schedules, one stream per agent.

    Gaps are uniform on [tau_u_min, tau_u_max]. Each schedule starts at 0 and
    ends with the first update past the horizon.
    """
    _check_bounds(tau_u_min, tau_u_max, horizon)
    schedules = [
        UpdateSchedule(i, _draw_times(stream(seed, StreamPurpose.SCHEDULE, i), tau_u_min, tau_u_max, horizon))
        for i in range(n)
    ]
    logger.debug(f"generated {n} asynchronous schedules up to t={horizon}")
    return schedules


def generate_synchronous_schedule(n: int, tau_u_min: Seconds, tau_u_max: Seconds, seed: int,
                                  horizon: Seconds) -> List[UpdateSchedule]:
    """One shared gap stream, so every agent updates at the same instants."""
    _check_bounds(tau_u_min, tau_u_max, horizon)
    times = _draw_times(stream(seed, StreamPurpose.SYNCHRONOUS), tau_u_min, tau_u_max, horizon)
    return [UpdateSchedule(i, times) for i in range(n)]


def explicit_schedules(update_times: Sequence[Sequence[Seconds]], tau_u_min: Seconds,
                       tau_u_max: Seconds, horizon: Seconds) -> List[UpdateSchedule]:
    """Schedules from user-supplied times, checked against the update bounds.

    Raises:
        ScheduleError: If a sequence does not start at 0, is not increasing,
            or has a gap outside [tau_u_min, tau_u_max]
    """
    _check_bounds(tau_u_min, tau_u_max, horizon)
    schedules = []
    for i, times in enumerate(update_times):
        times = tuple(float(t) for t in times)
        if not times or times[0] != 0.0:
            raise ScheduleError(f"update times of agent {i + 1} must start at 0")
        gaps = np.diff(times)
        if np.any(gaps <= 0):
            raise ScheduleError(f"update times of agent {i + 1} must be strictly increasing")
        tol = SIMULTANEITY_TOLERANCE
        if gaps.size and (gaps.min() < tau_u_min - tol or gaps.max() > tau_u_max + tol):
            raise ScheduleError(f"update gaps of agent {i + 1} leave [{tau_u_min}, {tau_u_max}]")
        if times[-1] <= horizon:
            logger.warning(f"update times of agent {i + 1} end at {times[-1]} before the horizon {horizon}")
        schedules.append(UpdateSchedule(i, times))
    return schedules


def build_schedules(scenario: ScenarioConfig) -> List[UpdateSchedule]:
    """Schedules for a scenario according to its schedule kind."""
    if scenario.schedule is ScheduleKind.EXPLICIT:
        return explicit_schedules(scenario.update_times or (), scenario.tau_u_min,
                                  scenario.tau_u_max, scenario.horizon)
    if scenario.schedule is ScheduleKind.SYNCHRONOUS:
        return generate_synchronous_schedule(scenario.n, scenario.tau_u_min, scenario.tau_u_max,
                                             scenario.seed, scenario.horizon)
    return generate_schedules(scenario.n, scenario.tau_u_min, scenario.tau_u_max,
                              scenario.seed, scenario.horizon)


class NoDelay(IDelaySampler):
    """Every reading is instantaneous."""

    def delay(self, i: AgentIndex, k: int, j: AgentIndex, t: Seconds) -> Seconds:
        return 0.0


class UniformDelay(IDelaySampler):
    """Delays u * tau_d with u uniform on [0, 1), one row of n draws per update.

    The unit draws depend only on (seed, agent, update index), so runs with
    different tau_d share them.
    """

    def __init__(self, seed: int, tau_d: Seconds, n: int):
        self.tau_d = float(tau_d)
        self.n = n
        self._streams = [stream(seed, StreamPurpose.DELAY, i) for i in range(n)]
        self._rows: Dict[AgentIndex, List[np.ndarray]] = defaultdict(list)

    def delay(self, i: AgentIndex, k: int, j: AgentIndex, t: Seconds) -> Seconds:
        rows = self._rows[i]
        while len(rows) <= k:
            rows.append(self._streams[i].random(self.n))
        return float(rows[k][j]) * self.tau_d


class ExplicitDelay(IDelaySampler):
    """User-listed delays; unlisted receptions are instantaneous."""

    def __init__(self, entries: Sequence[Tuple[int, int, int, float]]):
        self.entries: Dict[Reception, Seconds] = {(i, k, j): float(tau) for i, k, j, tau in entries}

    def delay(self, i: AgentIndex, k: int, j: AgentIndex, t: Seconds) -> Seconds:
        return self.entries.get((i, k, j), 0.0)


class AlwaysMaxDelay(IDelaySampler):
    """Adversarial policy: every reading is delayed by tau_d."""

    def __init__(self, tau_d: Seconds):
        self.tau_d = float(tau_d)

    def delay(self, i: AgentIndex, k: int, j: AgentIndex, t: Seconds) -> Seconds:
        return self.tau_d


def build_delay_sampler(scenario: ScenarioConfig) -> IDelaySampler:
    if scenario.delay_policy is DelayPolicy.UNIFORM:
        return UniformDelay(scenario.seed, scenario.tau_d, scenario.n)
    if scenario.delay_policy is DelayPolicy.EXPLICIT:
        return ExplicitDelay(scenario.explicit_delays)
    if scenario.delay_policy is DelayPolicy.ALWAYS_MAX:
        return AlwaysMaxDelay(scenario.tau_d)
    return NoDelay()


def assign_delays(schedules: Sequence[UpdateSchedule], topology: ITopologyProcess,
                  sampler: IDelaySampler, tau_d: Seconds, horizon: Seconds) -> DelayAssignment:
    """Delays for every reception at updates up to the horizon.

    Raises:
        ScheduleError: If a delay leaves [0, tau_d]
    """
    delays: Dict[Reception, Seconds] = {}
    for schedule in schedules:
        i = schedule.agent
        for k, t in enumerate(schedule.times):
            if t > horizon + SIMULTANEITY_TOLERANCE:
                break
            for j in sorted(topology.received(i, k)):
                delays[(i, k, j)] = sampler.delay(i, k, j, t)
    assignment = DelayAssignment(delays, float(tau_d))
    violations = assignment.violations()
    if violations:
        i, k, j = violations[0]
        raise ScheduleError(f"delay {assignment.get(i, k, j)} of reception ({i + 1}, {k}, {j + 1}) "
                            f"leaves [0, {tau_d}]")
    return assignment


def merge_events(schedules: Sequence[UpdateSchedule], delays: Optional[DelayAssignment],
                 horizon: Seconds) -> GlobalEventSequence:
    """Sorted, deduplicated union of update times and nonnegative read times.

    Only updates at or before the horizon contribute. Instants within the
    simultaneity tolerance share one event; an update time wins over a read
    time as the event's representative.
    """
    raw: List[Tuple[Seconds, int, object]] = []
    times_of = {s.agent: s.times for s in schedules}
    for schedule in schedules:
        for k, t in enumerate(schedule.times):
            if t > horizon + SIMULTANEITY_TOLERANCE:
                break
            raw.append((t, 0, (schedule.agent, k)))
    if delays is not None:
        for (i, k, j), tau in delays.delays.items():
            t = times_of[i][k]
            if t > horizon + SIMULTANEITY_TOLERANCE:
                continue
            read_time = t - tau
            if read_time < 0.0:
                continue
            raw.append((read_time, 1, ReadAnnotation(i, k, j, read_time)))
    raw.sort(key=lambda item: (item[0], item[1]))

    events: List[GlobalEvent] = []
    group: List[Tuple[Seconds, int, object]] = []

    def flush() -> None:
        updates = sorted(item[2] for item in group if item[1] == 0)
        reads = tuple(sorted((item[2] for item in group if item[1] == 1),
                             key=lambda r: (r.agent, r.update_index, r.neighbor)))
        time = times_of[updates[0][0]][updates[0][1]] if updates else group[0][0]
        events.append(GlobalEvent(time, tuple(updates), reads))

    for item in raw:
        if group and item[0] - group[0][0] > SIMULTANEITY_TOLERANCE:
            flush()
            group = []
        group.append(item)
    if group:
        flush()

    logger.debug(f"merged {len(raw)} instants into {len(events)} events")
    return GlobalEventSequence(events)


def window_constants(n: int, tau_u_min: Seconds, tau_u_max: Seconds, K: int) -> WindowConstants:
    """Bounds on events per update interval and on the window depth.

    interval_events bounds events per interval without delays, delayed_interval_events with delays,
    and delayed_depth = (K + 1) delayed_interval_events is the required window depth.
    """
    if not 0 < tau_u_min <= tau_u_max:
        raise ScheduleError(f"invalid update bounds {tau_u_min}, {tau_u_max}")
    if K < 0:
        raise ScheduleError(f"K must be nonnegative, got {K}")
    # Guard against ratios like 33 ln 2 / ln 8 landing just below an integer.
    ratio = int(math.floor(tau_u_max / tau_u_min + 1e-9))
    interval_events = (ratio + 1) * (n - 1) + 1
    delayed_interval_events = interval_events * n * (K * (n - 1) + 1)
    return WindowConstants(interval_events, delayed_interval_events, (K + 1) * delayed_interval_events)


def interval_counts(schedules: Sequence[UpdateSchedule], events: GlobalEventSequence,
                    horizon: Seconds) -> List[Tuple[AgentIndex, int, int]]:
    """(agent, k, number of events in [t_k, t_{k+1})) for every started interval."""
    counts = []
    for schedule in schedules:
        times = schedule.times
        for k, start in enumerate(times):
            if start > horizon + SIMULTANEITY_TOLERANCE:
                break
            end = times[k + 1] if k + 1 < len(times) else math.inf
            counts.append((schedule.agent, k, events.count_in(start, end)))
    return counts


def max_events_per_interval(schedules: Sequence[UpdateSchedule], events: GlobalEventSequence,
                            horizon: Seconds) -> int:
    counts = interval_counts(schedules, events, horizon)
    return max((c for _, _, c in counts), default=0)


def audit_intervals(schedules: Sequence[UpdateSchedule], events: GlobalEventSequence,
                    horizon: Seconds, bound: int) -> IntervalAudit:
    """Compare per-interval event counts with a bound and list the excesses."""
    counts = interval_counts(schedules, events, horizon)
    violations = [(i, k, c) for i, k, c in counts if c > bound]
    if violations:
        logger.warning(f"{len(violations)} update intervals exceed the event bound {bound}")
    return IntervalAudit(bound, max((c for _, _, c in counts), default=0), violations)
