"""Exact event-driven simulation of asynchronous consensus.

Between its updates agent i follows dx_i/dt = u_i - x_i with a target u_i
fixed at the update, so trajectories are piecewise exponential and can be
evaluated in closed form at any past instant. Delayed readings use that
history; before t = 0 every agent holds its initial value.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import ScenarioConfig
from ..core.graph import DirectedWeightedGraph
from ..core.interfaces import IDelaySampler, ITopologyProcess
from ..core.matrices import InvalidReceptionError, normalize_weights
from ..core.models import (
    AgentIndex, DelayAssignment, DelayPolicy, GlobalEventSequence, ReadRecord,
    RunLog, Seconds, Segment, SIMULTANEITY_TOLERANCE, Strategy, UpdateRecord,
    UpdateSchedule,
)
from .errors import HorizonError, ReceptionError, SimulationError
from .scheduler import (
    assign_delays, audit_intervals, build_delay_sampler, build_schedules,
    merge_events, window_constants,
)
from .topology import build_topology


logger = logging.getLogger(__name__)

__all__ = [
    "AgentTrajectory", "RunResult", "SimulationError", "ReceptionError", "HorizonError",
    "evaluate", "step_agent", "most_recent_data_filter", "run",
]


@dataclass
class AgentTrajectory:
    """Piecewise-exponential history of one agent.

    The last segment stays open (t_end = inf) until the run closes it at
    the horizon.
    """
    agent: AgentIndex
    initial_value: float
    segments: List[Segment] = field(default_factory=list)
    _starts: List[Seconds] = field(default_factory=list, repr=False)

    @property
    def end(self) -> Seconds:
        return self.segments[-1].t_end if self.segments else 0.0

    def value_at(self, t: Seconds) -> float:
        """Exact state at t; the initial value for t <= 0.

        Raises:
            HorizonError: If t lies beyond the simulated end
        """
        if t <= 0.0 or not self.segments:
            if t > 0.0:
                raise HorizonError(f"agent {self.agent + 1} has no history at t={t!r}")
            return self.initial_value
        if t > self.end + SIMULTANEITY_TOLERANCE:
            raise HorizonError(f"t={t!r} is beyond the trajectory end {self.end!r} of agent {self.agent + 1}")
        idx = bisect.bisect_right(self._starts, t) - 1
        return self.segments[max(idx, 0)].value_at(t)

    def start_segment(self, t: Seconds, x_start: float, target: float) -> None:
        """Close the open segment at t and open a new one toward target."""
        if self.segments:
            self.segments[-1] = replace(self.segments[-1], t_end=t)
        self.segments.append(Segment(t, math.inf, x_start, target))
        self._starts.append(t)

    def close(self, t_end: Seconds) -> None:
        if self.segments:
            self.segments[-1] = replace(self.segments[-1], t_end=t_end)


def evaluate(tr: AgentTrajectory, t: Seconds) -> float:
    """x(t) = u + (x_start - u) e^{-(t - t_start)} on the segment containing t."""
    return tr.value_at(t)


def step_agent(i: AgentIndex, t: Seconds, reads: Iterable[ReadRecord], g: DirectedWeightedGraph,
               current_value: float) -> Tuple[float, np.ndarray]:
    """New target of agent i at its update t, and the normalized row used.

    With no readings the target is the current value, which freezes the agent
    until its next update.

    Raises:
        ReceptionError: If a reading comes from a non-neighbor
    """
    reads = list(reads)
    try:
        row = normalize_weights(g, (r.neighbor for r in reads), i)
    except InvalidReceptionError as e:
        raise ReceptionError(f"at t={t!r}: {e}") from e
    if not reads:
        return current_value, row
    target = math.fsum(row[r.neighbor] * r.value for r in reads)
    return target, row


def most_recent_data_filter(history: Sequence[ReadRecord]) -> ReadRecord:
    """Reading with the latest effective time; later updates win ties."""
    if not history:
        raise SimulationError("most-recent-data filter needs at least one reading")
    return max(history, key=lambda r: (r.effective_time, r.update_index))


@dataclass
class RunResult:
    """Everything a run produced."""
    scenario: ScenarioConfig
    graph: DirectedWeightedGraph
    schedules: List[UpdateSchedule]
    topology: ITopologyProcess
    delays: DelayAssignment
    events: GlobalEventSequence
    trajectories: List[AgentTrajectory]
    states: np.ndarray
    updates: Dict[Tuple[AgentIndex, int], UpdateRecord]
    log: RunLog

    @property
    def n(self) -> int:
        return self.scenario.n

    def state_at(self, t: Seconds) -> np.ndarray:
        return np.array([tr.value_at(t) for tr in self.trajectories])

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def active_update(self, i: AgentIndex, t: Seconds) -> UpdateRecord:
        """Update of agent i governing the interval that contains t."""
        k = self.schedules[i].interval_index(t)
        return self.updates[(i, k)]


def run(scenario: ScenarioConfig, schedules: Optional[Sequence[UpdateSchedule]] = None,
        topology: Optional[ITopologyProcess] = None,
        sampler: Optional[IDelaySampler] = None) -> RunResult:
    """Simulate a scenario up to its horizon.

    Readings at one event are all taken before any agent at that event
    commits its new segment.

    Raises:
        SimulationError: On receptions over missing edges or history lookups past the end
        ScheduleError: On invalid schedules or delays
    """
    n = scenario.n
    horizon = scenario.horizon
    schedules = list(schedules) if schedules is not None else build_schedules(scenario)
    topology = topology or build_topology(scenario)
    sampler = sampler or build_delay_sampler(scenario)
    graph = topology.base_graph
    if graph.n != n or len(schedules) != n:
        raise SimulationError(f"scenario has {n} agents but topology/schedules cover {graph.n}/{len(schedules)}")

    delays = assign_delays(schedules, topology, sampler, scenario.tau_d, horizon)
    events = merge_events(schedules, delays, horizon)
    logger.info(f"running {n} agents over {len(events)} events up to t={horizon} "
                f"({topology.describe()}, {scenario.strategy.value})")

    trajectories = [AgentTrajectory(i, float(scenario.initial_state[i])) for i in range(n)]
    updates: Dict[Tuple[AgentIndex, int], UpdateRecord] = {}
    best: Dict[Tuple[AgentIndex, AgentIndex], ReadRecord] = {}
    most_recent = scenario.strategy is Strategy.MOST_RECENT_DATA
    states = np.empty((len(events), n))

    for index, event in enumerate(events):
        t = event.time
        pending: List[UpdateRecord] = []
        for i, k in event.updates:
            received: FrozenSet[AgentIndex] = topology.received(i, k)
            chosen: List[ReadRecord] = []
            for j in sorted(received):
                read_time = t - delays.get(i, k, j)
                record = ReadRecord(j, read_time, evaluate(trajectories[j], read_time),
                                    max(read_time, 0.0), k)
                if most_recent:
                    if (i, j) in best:
                        record = most_recent_data_filter([best[(i, j)], record])
                    best[(i, j)] = record
                chosen.append(record)
            x_now = evaluate(trajectories[i], t)
            target, row = step_agent(i, t, chosen, graph, x_now)
            pending.append(UpdateRecord(i, k, t, received, tuple(chosen), row, x_now, target))

        for record in pending:
            trajectories[record.agent].start_segment(record.time, record.x_start, record.target)
            updates[(record.agent, record.index)] = record
        states[index] = [tr.value_at(t) for tr in trajectories]
        logger.debug(f"t={t!r}: updated {[i + 1 for i in event.updating_agents]}")

    for tr in trajectories:
        tr.close(horizon)

    log = RunLog()
    constants = window_constants(n, scenario.tau_u_min, scenario.tau_u_max, scenario.K)
    delayed = scenario.delay_policy is not DelayPolicy.NONE and scenario.tau_d > 0
    bound = constants.delayed_interval_events if delayed else constants.interval_events
    log.interval_audit = audit_intervals(schedules, events, horizon, bound)
    log.note(f"events per update interval: max {log.interval_audit.max_observed}, bound {bound}")
    if not log.interval_audit.ok:
        log.note(f"{len(log.interval_audit.violations)} update intervals exceed the bound")

    logger.info(f"run finished: spread {float(np.ptp(states[-1])):.3e} at t={events[len(events) - 1].time!r}")
    return RunResult(scenario, graph, schedules, topology, delays, events, trajectories, states, updates, log)
