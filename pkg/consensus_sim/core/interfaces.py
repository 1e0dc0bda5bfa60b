"""Core interfaces and abstract base classes for Async Consensus Sim."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, FrozenSet, List, Optional

from .graph import DirectedWeightedGraph
from .models import AgentIndex, Seconds

if TYPE_CHECKING:
    from .config import ScenarioConfig


class ITopologyProcess(ABC):
    """Interface for successful-reception topologies G0(t).

    A topology process decides, for agent i at its k-th update, which
    neighbors' states actually reach it. The result holds on the whole
    interval [t_k^i, t_{k+1}^i).
    """

    @property
    @abstractmethod
    def base_graph(self) -> DirectedWeightedGraph:
        """Available-channel graph G(A) whose weights normalize receptions."""
        pass

    @abstractmethod
    def received(self, i: AgentIndex, k: int) -> FrozenSet[AgentIndex]:
        """Neighbors whose state agent i receives at update k."""
        pass

    def describe(self) -> str:
        """Short human-readable description."""
        return type(self).__name__


class IDelaySampler(ABC):
    """Interface for communication delay policies."""

    @abstractmethod
    def delay(self, i: AgentIndex, k: int, j: AgentIndex, t: Seconds) -> Seconds:
        """Delay tau_ij^k of the reading agent i takes from j at its update k (time t)."""
        pass


class IConfigManager(ABC):
    """Interface for scenario documents: load, check and resolve into runs."""

    @abstractmethod
    def load_config(self, config_path: Optional[Path] = None) -> Dict[str, Any]:
        """Scenario document from YAML, merged over the defaults."""
        pass

    @abstractmethod
    def save_config(self, config: Dict[str, Any], config_path: Optional[Path] = None) -> bool:
        """Write a resolved scenario document next to run outputs."""
        pass

    @abstractmethod
    def get_default_config(self) -> Dict[str, Any]:
        """The fixed-topology example as a complete document."""
        pass

    @abstractmethod
    def validate_config(self, config: Dict[str, Any]) -> List[str]:
        """Every violation in a document, as dotted-key messages."""
        pass

    @abstractmethod
    def build_scenario(self, config: Dict[str, Any]) -> "ScenarioConfig":
        """Validated, 0-based run description of a document."""
        pass
