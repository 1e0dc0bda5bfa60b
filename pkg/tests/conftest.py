"""Test configuration and fixtures."""

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
import yaml

from consensus_sim.core.config import ConfigManager, EXAMPLE_WEIGHTS, SEED_ENV_VAR, ScenarioConfig
from consensus_sim.core.graph import DirectedWeightedGraph
from consensus_sim.simulation.scenarios import counterexample, example_fixed, example_switching


@pytest.fixture(autouse=True)
def clear_seed_override(monkeypatch):
    """Keep a seed exported in the shell from leaking into tests."""
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.fixture
def config_manager(tmp_path):
    """ConfigManager writing into a temporary directory."""
    return ConfigManager(tmp_path)


@pytest.fixture
def example_graph():
    """The four-agent available-channel graph with a spanning tree rooted at agent 1."""
    return DirectedWeightedGraph(np.array(EXAMPLE_WEIGHTS, dtype=float))


@pytest.fixture
def example_scenario():
    """Asynchronous fixed-topology example, seed 0."""
    return ConfigManager().build_scenario(example_fixed(0))


@pytest.fixture
def counterexample_scenario():
    return ConfigManager().build_scenario(counterexample(0))


@pytest.fixture
def switching_scenario():
    return ConfigManager().build_scenario(example_switching(0))


@pytest.fixture
def make_scenario(example_scenario):
    """Factory for variants of the example scenario."""
    def factory(**overrides) -> ScenarioConfig:
        return replace(example_scenario, **overrides)
    return factory


@pytest.fixture
def write_config(tmp_path):
    """Write a config document as YAML and return its path."""
    def writer(document, name: str = "scenario.yml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
        return path
    return writer


def random_stochastic(rng: np.random.Generator, n: int, sparsity: float = 0.0) -> np.ndarray:
    """Random row-stochastic matrix; entries are zeroed with probability `sparsity`."""
    a = rng.random((n, n))
    a[rng.random((n, n)) < sparsity] = 0.0
    for i in range(n):
        if a[i].sum() == 0.0:
            a[i, rng.integers(n)] = 1.0
    return a / a.sum(axis=1, keepdims=True)
