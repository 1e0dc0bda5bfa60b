"""Successful-reception topologies G0(t) over an available-channel graph."""

import logging
from collections import defaultdict
from typing import Dict, FrozenSet, List, Sequence

import numpy as np

from ..core.config import ScenarioConfig
from ..core.graph import DirectedWeightedGraph, neighbors
from ..core.interfaces import ITopologyProcess
from ..core.models import AgentIndex, StreamPurpose, TopologyKind
from .errors import ReceptionError
from .scheduler import stream


logger = logging.getLogger(__name__)


class TopologyProcess(ITopologyProcess):
    """Base class checking every reception against the base graph."""

    def __init__(self, graph: DirectedWeightedGraph):
        self._graph = graph
        self._neighbors = [neighbors(graph, i) for i in range(graph.n)]

    @property
    def base_graph(self) -> DirectedWeightedGraph:
        return self._graph

    def received(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        """Received set of agent i at update k.

        Raises:
            ReceptionError: If the set is not contained in i's neighbor set
        """
        result = frozenset(self._reception(i, k))
        extra = result - self._neighbors[i]
        if extra:
            raise ReceptionError(
                f"agent {i + 1} receives from {sorted(j + 1 for j in extra)} at update {k} without an edge"
            )
        return result

    def _reception(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        raise NotImplementedError


class FixedTopology(TopologyProcess):
    """Every agent receives all of its neighbors at every update."""

    def _reception(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        return self._neighbors[i]

    def describe(self) -> str:
        return "fixed"


class PeriodicTopology(TopologyProcess):
    """Per-agent reception cycles: agent i receives phases[i][k mod len(phases[i])]."""

    def __init__(self, graph: DirectedWeightedGraph, phases: Sequence[Sequence[FrozenSet[AgentIndex]]]):
        super().__init__(graph)
        if len(phases) != graph.n or any(len(cycle) == 0 for cycle in phases):
            raise ReceptionError(f"periodic topology needs a nonempty cycle for each of {graph.n} agents")
        self.phases = [tuple(frozenset(p) for p in cycle) for cycle in phases]

    def _reception(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        cycle = self.phases[i]
        return cycle[k % len(cycle)]

    @property
    def period(self) -> int:
        """Least common multiple of the per-agent cycle lengths."""
        return int(np.lcm.reduce([len(cycle) for cycle in self.phases]))

    def describe(self) -> str:
        return f"periodic (period {self.period})"


class RandomAvailabilityTopology(TopologyProcess):
    """Each channel (j, i) succeeds independently with a fixed probability per update."""

    def __init__(self, graph: DirectedWeightedGraph, availability: float, seed: int):
        super().__init__(graph)
        if not 0 < availability <= 1:
            raise ReceptionError(f"availability must be in (0, 1], got {availability}")
        self.availability = float(availability)
        self._streams = [stream(seed, StreamPurpose.TOPOLOGY, i) for i in range(graph.n)]
        self._draws: Dict[AgentIndex, List[FrozenSet[AgentIndex]]] = defaultdict(list)

    def _reception(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        draws = self._draws[i]
        while len(draws) <= k:
            u = self._streams[i].random(self._graph.n)
            draws.append(frozenset(j for j in self._neighbors[i] if u[j] < self.availability))
        return draws[k]

    def describe(self) -> str:
        return f"random (availability {self.availability})"


def build_topology(scenario: ScenarioConfig) -> TopologyProcess:
    graph = scenario.graph()
    if scenario.topology is TopologyKind.PERIODIC:
        return PeriodicTopology(graph, scenario.phases or ())
    if scenario.topology is TopologyKind.RANDOM:
        return RandomAvailabilityTopology(graph, scenario.availability, scenario.seed)
    return FixedTopology(graph)
