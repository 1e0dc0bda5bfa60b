"""Consensus detection, connectivity conditions and group-value prediction."""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.graph import DirectedWeightedGraph, has_spanning_tree, union
from ..core.interfaces import ITopologyProcess
from ..core.matrices import CertificationError, normalized_matrix, stationary_vector, step_matrix
from ..core.models import (
    DelayPolicy, GlobalEventSequence, RunSummary, ScheduleKind, Seconds, SIMULTANEITY_TOLERANCE,
    TopologyKind, UnionConditionResult, UpdateSchedule,
)
from ..simulation.dynamics import RunResult
from ..simulation.scheduler import window_constants
from .augmented import AugmentationError, consensus_certificate, decompose_run, stack_window, windows_by_duration


logger = logging.getLogger(__name__)


class AnalysisError(Exception):
    """Raised for invalid analysis inputs."""
    pass


def spread(x: Sequence[float]) -> float:
    """max_i x_i - min_i x_i."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise AnalysisError("spread of an empty state")
    return float(np.ptp(x))


def detect_consensus(result: RunResult, tol: float) -> Optional[Seconds]:
    """Earliest event time after which the spread stays below tol up to the horizon.

    The spread is sampled at event times and at the horizon only. Between two
    events it is not checked, so a transient excursion above tol inside an
    interval goes unnoticed.
    """
    if tol <= 0:
        raise AnalysisError(f"tolerance must be positive, got {tol}")
    spreads = np.ptp(result.states, axis=1)
    if spread(result.state_at(result.scenario.horizon)) >= tol or spreads[-1] >= tol:
        return None
    above = np.nonzero(spreads >= tol)[0]
    first = int(above[-1]) + 1 if above.size else 0
    return float(result.events.times[first])


def _reception_graph(tp: ITopologyProcess, active: Sequence[Sequence[int]]) -> DirectedWeightedGraph:
    """G0 carrying every reception of the listed update indices per agent."""
    g = tp.base_graph
    w = np.zeros((g.n, g.n))
    for i, ks in enumerate(active):
        for k in ks:
            for j in tp.received(i, k):
                w[i, j] = g.weights[i, j]
    return DirectedWeightedGraph(w, g.weight_bounds)


def g0_at(tp: ITopologyProcess, schedules: Sequence[UpdateSchedule], t: Seconds) -> DirectedWeightedGraph:
    """Successful-reception graph in force at time t."""
    return _reception_graph(tp, [[s.interval_index(t)] for s in schedules])


def union_at_times(tp: ITopologyProcess, schedules: Sequence[UpdateSchedule],
                   times: Sequence[Seconds]) -> DirectedWeightedGraph:
    """Union of G0(t) over a finite set of instants."""
    if len(times) == 0:
        return DirectedWeightedGraph.empty(tp.base_graph.n)
    return union([g0_at(tp, schedules, t) for t in times])


def check_union_condition(tp: ITopologyProcess, schedules: Sequence[UpdateSchedule], T: Seconds,
                          horizon: Seconds) -> UnionConditionResult:
    """Whether the union of G0 over every window [t0, t0 + T] has a spanning tree.

    Window starts range over update times in [0, horizon - T]; G0 only
    changes there, so the grid is exhaustive.
    """
    if T <= 0:
        raise AnalysisError(f"window length must be positive, got {T}")
    starts = sorted({t for s in schedules for t in s.times if t <= horizon - T + SIMULTANEITY_TOLERANCE})
    for checked, t0 in enumerate(starts, start=1):
        active = [range(s.interval_index(t0), s.interval_index(t0 + T) + 1) for s in schedules]
        if has_spanning_tree(_reception_graph(tp, active)) is None:
            logger.info(f"union condition fails on [{t0!r}, {t0 + T!r}]")
            return UnionConditionResult(False, checked, (t0, t0 + T))
    return UnionConditionResult(True, len(starts))


def _active_indices(events: GlobalEventSequence, n: int) -> List[Tuple[int, ...]]:
    """Per event, the update index each agent is following."""
    current = [0] * n
    active = []
    for event in events:
        for agent, k in event.updates:
            current[agent] = k
        active.append(tuple(current))
    return active


def check_equivalent_condition(events: GlobalEventSequence, tp: ITopologyProcess, epsilon: int,
                               tau_v: Seconds) -> bool:
    """Block-wise union test over events with a long enough following gap.

    Blocks are U_k = {t_{k eps + 1}, ..., t_{(k+1) eps}}. Only events whose
    next gap is at least tau_v may join V_k; since unions only grow, taking
    all of them is an exact search.
    """
    if epsilon < 1 or tau_v <= 0:
        raise AnalysisError(f"need epsilon >= 1 and tau_v > 0, got {epsilon}, {tau_v}")
    n = tp.base_graph.n
    times = events.times
    active = _active_indices(events, n)
    k = 0
    while (k + 1) * epsilon <= len(events) - 2:
        admissible = [
            s for s in range(k * epsilon + 1, (k + 1) * epsilon + 1)
            if times[s + 1] - times[s] >= tau_v
        ]
        if not admissible:
            logger.info(f"block {k} has no event with gap >= {tau_v}")
            return False
        graph = _reception_graph(tp, [sorted({active[s][i] for s in admissible}) for i in range(n)])
        if has_spanning_tree(graph) is None:
            logger.info(f"block {k} union has no spanning tree")
            return False
        k += 1
    return True


def equivalent_condition_parameters(n: int, tau_u_min: Seconds, tau_u_max: Seconds, K: int,
                                    T: Seconds) -> Tuple[int, int, Seconds]:
    """(p, epsilon, tau_v) of the constructive equivalence argument."""
    delayed_interval_events = window_constants(n, tau_u_min, tau_u_max, K).delayed_interval_events
    p = delayed_interval_events * (int(math.floor(T / tau_u_min)) + 2)
    return p, p + 2 * delayed_interval_events, tau_u_min / delayed_interval_events


def group_decision_vector(g: DirectedWeightedGraph, certify_raw: bool = False) -> np.ndarray:
    """Stationary left vector f of the synchronous step matrix (or of the raw normalized matrix)."""
    a = normalized_matrix(g)
    matrix = a if certify_raw else step_matrix(a, math.log(2.0))
    return stationary_vector(matrix)


def predicted_group_value(g: DirectedWeightedGraph, x0: Sequence[float], certify_raw: bool = False) -> float:
    """f^T x0, the synchronous fixed-topology consensus value.

    Raises:
        CertificationError: If the matrix is not certified SIA
    """
    f = group_decision_vector(g, certify_raw)
    return float(f @ np.asarray(x0, dtype=float))


def consensus_function_drift(result: RunResult, f: np.ndarray) -> float:
    """max_k |f^T x(t_k) - f^T x(0)|."""
    values = result.states @ np.asarray(f, dtype=float)
    initial = float(np.asarray(f) @ np.asarray(result.scenario.initial_state, dtype=float))
    return float(np.max(np.abs(values - initial)))


def window_extrema(states: np.ndarray, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Max and min over the stacked window of the last m event states, per event."""
    if m < 1:
        raise AnalysisError(f"window depth must be positive, got {m}")
    highs = np.empty(len(states))
    lows = np.empty(len(states))
    for k in range(len(states)):
        window = stack_window(states, k, m)
        highs[k] = window.max()
        lows[k] = window.min()
    return highs, lows


def containment_violations(result: RunResult, times: Sequence[Seconds], tol: float = 1e-12) -> int:
    """Sampled states leaving [min x(0), max x(0)]."""
    lo = min(result.scenario.initial_state) - tol
    hi = max(result.scenario.initial_state) + tol
    count = 0
    for t in times:
        x = result.state_at(t)
        count += int(np.sum((x < lo) | (x > hi)))
    return count


def spread_at(result: RunResult, t: Seconds) -> float:
    return spread(result.state_at(t))


def summarize(result: RunResult) -> RunSummary:
    """Key figures of a run for the text report."""
    scenario = result.scenario
    final = result.state_at(scenario.horizon)
    predicted = None
    if (scenario.schedule is ScheduleKind.SYNCHRONOUS and scenario.topology is TopologyKind.FIXED
            and scenario.delay_policy is DelayPolicy.NONE):
        try:
            predicted = predicted_group_value(result.graph, scenario.initial_state)
        except CertificationError as e:
            logger.warning(f"no predicted group value: {e}")
    union_result = None
    if scenario.union_window is not None:
        union_result = check_union_condition(result.topology, result.schedules,
                                             scenario.union_window, scenario.horizon)
    certificate = None
    if scenario.certificate_window is not None:
        try:
            certificate = consensus_certificate(decompose_run(result),
                                                windows_by_duration(result.events, scenario.certificate_window))
        except AugmentationError as e:
            logger.warning(f"no consensus certificate: {e}")
    audit = result.log.interval_audit
    return RunSummary(
        seed=scenario.seed,
        horizon=scenario.horizon,
        events=len(result.events),
        final_spread=spread(final),
        final_value=float(np.mean(final)),
        consensus_time=detect_consensus(result, scenario.consensus_tol),
        predicted_value=predicted,
        union_condition=union_result,
        interval_bound=None if audit is None else audit.bound,
        max_interval_events=None if audit is None else audit.max_observed,
        interval_violations=0 if audit is None else len(audit.violations),
        certificate_bound=None if certificate is None else certificate.bound,
        certified=None if certificate is None else certificate.certified,
    )
