"""Core data models and type definitions for Async Consensus Sim."""

import bisect
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np


# Type aliases for better readability
AgentIndex = int
Seconds = float
Reception = Tuple[AgentIndex, int, AgentIndex]  # (agent i, update index k, neighbor j)

# Instants closer than this are the same event.
SIMULTANEITY_TOLERANCE = 1e-12


class ScheduleKind(Enum):
    """How per-agent update times are produced."""
    ASYNCHRONOUS = "asynchronous"
    SYNCHRONOUS = "synchronous"
    EXPLICIT = "explicit"


class TopologyKind(Enum):
    """Representations of the successful-reception topology."""
    FIXED = "fixed"
    PERIODIC = "periodic"
    RANDOM = "random"


class DelayPolicy(Enum):
    """Communication delay policies."""
    NONE = "none"
    UNIFORM = "uniform"
    EXPLICIT = "explicit"
    ALWAYS_MAX = "always-max"


class Strategy(Enum):
    """Control strategies for delayed readings."""
    PLAIN = "plain"
    MOST_RECENT_DATA = "most-recent-data"


class WindowMode(Enum):
    """How the augmented window depth is chosen."""
    OBSERVED = "observed"
    BOUND = "bound"


class StreamPurpose(IntEnum):
    """Sub-stream identifiers for the seeded generator."""
    SCHEDULE = 0
    DELAY = 1
    TOPOLOGY = 2
    SYNCHRONOUS = 3


@dataclass(frozen=True)
class UpdateSchedule:
    """Update times t_0^i < t_1^i < ... of one agent."""
    agent: AgentIndex
    times: Tuple[Seconds, ...]

    def interval_index(self, t: Seconds) -> int:
        """Index k of the update interval [t_k, t_{k+1}) containing t."""
        return bisect.bisect_right(self.times, t + SIMULTANEITY_TOLERANCE) - 1

    def gaps(self) -> np.ndarray:
        """Consecutive update gaps t_{k+1} - t_k."""
        return np.diff(np.asarray(self.times, dtype=float))


@dataclass(frozen=True)
class DelayAssignment:
    """Delays tau_ij^k for every reception (i, k, j) of a run."""
    delays: Dict[Reception, Seconds]
    tau_d: Seconds

    def get(self, i: AgentIndex, k: int, j: AgentIndex) -> Seconds:
        return self.delays.get((i, k, j), 0.0)

    def receptions(self) -> List[Reception]:
        return sorted(self.delays)

    def violations(self) -> List[Reception]:
        """Receptions whose delay falls outside [0, tau_d]."""
        return [
            key for key, tau in sorted(self.delays.items())
            if tau < 0.0 or tau > self.tau_d + SIMULTANEITY_TOLERANCE
        ]


@dataclass(frozen=True)
class ReadAnnotation:
    """A delayed read resolving to a global event."""
    agent: AgentIndex
    update_index: int
    neighbor: AgentIndex
    read_time: Seconds


@dataclass(frozen=True)
class GlobalEvent:
    """One instant t_k of the merged event sequence.

    ``updates`` holds (agent, update index) pairs in ascending agent order.
    """
    time: Seconds
    updates: Tuple[Tuple[AgentIndex, int], ...] = ()
    reads: Tuple[ReadAnnotation, ...] = ()

    @property
    def updating_agents(self) -> Tuple[AgentIndex, ...]:
        return tuple(agent for agent, _ in self.updates)


@dataclass
class GlobalEventSequence:
    """Strictly increasing event times t_0 = 0 < t_1 < ... with annotations."""
    events: List[GlobalEvent]

    def __post_init__(self) -> None:
        self._times = np.array([event.time for event in self.events], dtype=float)

    def __len__(self) -> int:
        return len(self.events)

    def __getitem__(self, index: int) -> GlobalEvent:
        return self.events[index]

    def __iter__(self):
        return iter(self.events)

    @property
    def times(self) -> np.ndarray:
        return self._times

    def index_of(self, t: Seconds, tolerance: float = SIMULTANEITY_TOLERANCE) -> int:
        """Index of the event at time t.

        Raises:
            KeyError: If no event lies within tolerance of t
        """
        idx = int(np.searchsorted(self._times, t - tolerance, side="left"))
        if idx < len(self._times) and abs(self._times[idx] - t) <= tolerance:
            return idx
        raise KeyError(f"no event at t={t!r}")

    def count_in(self, start: Seconds, end: Seconds) -> int:
        """Number of events in the half-open interval [start, end)."""
        lo = np.searchsorted(self._times, start - SIMULTANEITY_TOLERANCE, side="left")
        hi = np.searchsorted(self._times, end - SIMULTANEITY_TOLERANCE, side="left")
        return int(hi - lo)


@dataclass(frozen=True)
class Segment:
    """Closed-form piece x(t) = u + (x_start - u) e^{-(t - t_start)}."""
    t_start: Seconds
    t_end: Seconds
    x_start: float
    target: float

    def value_at(self, t: Seconds) -> float:
        if self.target == self.x_start:
            return self.x_start
        decay = float(np.exp(-(t - self.t_start)))
        return self.x_start * decay + self.target * (1.0 - decay)


@dataclass(frozen=True)
class ReadRecord:
    """A neighbor reading taken at one update.

    ``effective_time`` is the instant whose state ``value`` carries; reads
    from the pre-history collapse to 0.
    """
    neighbor: AgentIndex
    read_time: Seconds
    value: float
    effective_time: Seconds
    update_index: int


@dataclass
class UpdateRecord:
    """Everything agent i decided at its k-th update."""
    agent: AgentIndex
    index: int
    time: Seconds
    received: FrozenSet[AgentIndex]
    reads: Tuple[ReadRecord, ...]
    row: np.ndarray
    x_start: float
    target: float


@dataclass(frozen=True)
class WindowConstants:
    """Bounds on events per update interval and required window depth."""
    interval_events: int
    delayed_interval_events: int
    delayed_depth: int


@dataclass
class IntervalAudit:
    """Runtime check of the per-interval event-count bound."""
    bound: int
    max_observed: int
    violations: List[Tuple[AgentIndex, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class RunLog:
    """Messages and audits collected while a scenario runs."""
    messages: List[str] = field(default_factory=list)
    interval_audit: Optional[IntervalAudit] = None

    def note(self, message: str) -> None:
        self.messages.append(message)


@dataclass(frozen=True)
class UnionConditionResult:
    """Outcome of the union-of-graphs spanning-tree check."""
    holds: bool
    windows_checked: int
    failing_window: Optional[Tuple[Seconds, Seconds]] = None


@dataclass(frozen=True)
class ConsensusCertificate:
    """Product bound on delta of a window-grouped matrix product."""
    bound: float
    certified: bool
    window_lambdas: Tuple[float, ...]


@dataclass
class RunSummary:
    """Key figures of one run, written to summary.txt."""
    seed: int
    horizon: Seconds
    events: int
    final_spread: float
    final_value: float
    consensus_time: Optional[Seconds]
    predicted_value: Optional[float] = None
    union_condition: Optional[UnionConditionResult] = None
    interval_bound: Optional[int] = None
    max_interval_events: Optional[int] = None
    interval_violations: int = 0
    certificate_bound: Optional[float] = None
    certified: Optional[bool] = None

    def as_items(self) -> List[Tuple[str, str]]:
        """Ordered key/value pairs for the text report."""
        items = [
            ("seed", str(self.seed)),
            ("horizon", repr(float(self.horizon))),
            ("events", str(self.events)),
            ("final_spread", repr(float(self.final_spread))),
            ("final_value", repr(float(self.final_value))),
            ("consensus_time", "none" if self.consensus_time is None else repr(float(self.consensus_time))),
            ("predicted_value", "none" if self.predicted_value is None else repr(float(self.predicted_value))),
        ]
        if self.union_condition is not None:
            items.append(("union_condition", "holds" if self.union_condition.holds else "fails"))
            items.append(("union_windows_checked", str(self.union_condition.windows_checked)))
        items.append(("interval_bound", "none" if self.interval_bound is None else str(self.interval_bound)))
        items.append(("max_interval_events",
                      "none" if self.max_interval_events is None else str(self.max_interval_events)))
        items.append(("interval_violations", str(self.interval_violations)))
        if self.certificate_bound is not None:
            items.append(("certificate_bound", repr(float(self.certificate_bound))))
            items.append(("certified", "true" if self.certified else "false"))
        return items
