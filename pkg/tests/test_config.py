"""Tests for configuration management."""

import pytest
import yaml

from consensus_sim.core.config import ConfigError, ConfigManager, SEED_ENV_VAR, ScenarioConfig
from consensus_sim.core.models import DelayPolicy, ScheduleKind, Strategy, TopologyKind, WindowMode
from consensus_sim.simulation.scenarios import counterexample, example_switching


class TestConfigManager:
    """Test cases for ConfigManager."""

    def test_default_config_creation(self, config_manager):
        """Defaults describe the four-agent fixed example."""
        default_config = config_manager.get_default_config()

        for section in ('agents', 'timing', 'topology', 'delays', 'run', 'analysis', 'output'):
            assert section in default_config

        assert default_config['agents']['n'] == 4
        assert default_config['agents']['initial_state'] == [5.0, 6.0, 7.0, 8.0]
        assert default_config['timing']['tau_u_min'] == 0.2
        assert default_config['timing']['tau_u_max'] == 0.9
        assert default_config['topology']['kind'] == 'fixed'
        assert default_config['delays']['policy'] == 'none'
        assert default_config['output']['dump_pi'] is False

    def test_config_validation(self, config_manager):
        """Valid defaults pass; every broken field is reported."""
        valid_config = config_manager.get_default_config()
        assert config_manager.validate_config(valid_config) == []

        invalid_config = config_manager._merge_configs(valid_config, {
            'timing': {'tau_u_min': 0},
            'topology': {'kind': 'mesh', 'availability': 2.0},
            'delays': {'K': -1},
            'run': {'seed': -3, 'sample_dt': 0},
        })
        errors = config_manager.validate_config(invalid_config)
        assert "timing.tau_u_min must be greater than 0" in errors
        assert any('topology.kind must be one of' in error for error in errors)
        assert "topology.availability must be in (0, 1]" in errors
        assert "delays.K must be a nonnegative integer" in errors
        assert "run.seed must be a nonnegative integer" in errors
        assert "run.sample_dt must be greater than 0" in errors

    def test_bad_agent_count_short_circuits(self, config_manager):
        errors = config_manager.validate_config({'agents': {'n': 0}})
        assert errors == ["agents.n must be a positive integer"]

    def test_weight_checks(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'topology': {'weights': [[1, 1, 1, 0], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, -1, 0]]},
        })
        errors = config_manager.validate_config(config)
        assert "topology.weights must be nonnegative" in errors
        assert "topology.weights must have a zero diagonal" in errors

    def test_weight_shape(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(),
                                               {'topology': {'weights': [[0, 1], [1, 0]]}})
        assert "topology.weights must be a 4x4 matrix of numbers" in config_manager.validate_config(config)

    def test_weight_bounds(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(),
                                               {'topology': {'weight_bounds': [2.0, 3.0]}})
        assert "topology.weights must lie within topology.weight_bounds" in config_manager.validate_config(config)

    def test_explicit_schedule_checks(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'agents': {'n': 2, 'initial_state': [0.0, 1.0]},
            'timing': {'schedule': 'explicit', 'update_times': [[0.0, 0.5, 0.4], [0.1, 0.5]]},
            'topology': {'weights': [[0, 1], [1, 0]]},
        })
        errors = config_manager.validate_config(config)
        assert "timing.update_times[1] must be strictly increasing" in errors
        assert "timing.update_times[2] must start at 0" in errors

    def test_explicit_gap_bounds(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'agents': {'n': 2, 'initial_state': [0.0, 1.0]},
            'timing': {'schedule': 'explicit', 'update_times': [[0.0, 0.1], [0.0, 0.5]]},
            'topology': {'weights': [[0, 1], [1, 0]]},
        })
        assert "timing.update_times[1] gaps must lie in [tau_u_min, tau_u_max]" in \
            config_manager.validate_config(config)

    def test_phase_checks(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'topology': {'kind': 'periodic', 'phases': [[[4]], [[1]], [[2]], [[3]]]},
        })
        assert "topology.phases[1] receives over a missing edge" in config_manager.validate_config(config)

    def test_explicit_delay_checks(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'delays': {'K': 1, 'policy': 'explicit', 'explicit': [[1, 0, 2, 0.5], [5, 0, 1, 0.1], [1, 0]]},
        })
        errors = config_manager.validate_config(config)
        assert any("must have 0 <= tau <= K * tau_u_min" in e for e in errors)
        assert any("has an invalid index" in e for e in errors)
        assert any("must be [i, k, j, tau]" in e for e in errors)

    def test_config_file_operations(self, config_manager, tmp_path):
        """Saved documents load back unchanged."""
        config = config_manager.get_default_config()
        config['run']['seed'] = 17
        assert config_manager.save_config(config) is True
        assert config_manager.config_path.exists()

        loaded = config_manager.load_config()
        assert loaded['run']['seed'] == 17
        assert loaded == config

    def test_partial_file_merges_over_defaults(self, config_manager, tmp_path):
        path = tmp_path / "partial.yml"
        path.write_text("run:\n  horizon: 5.0\n", encoding="utf-8")
        loaded = config_manager.load_config(path)
        assert loaded['run']['horizon'] == 5.0
        assert loaded['run']['sample_dt'] == 0.1
        assert loaded['agents']['n'] == 4

    def test_missing_file_uses_defaults(self, config_manager, tmp_path):
        assert config_manager.load_config(tmp_path / "absent.yml") == config_manager.get_default_config()

    def test_unparsable_file(self, config_manager, tmp_path):
        path = tmp_path / "broken.yml"
        path.write_text("run: [unclosed\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="failed to load config"):
            config_manager.load_config(path)

    def test_non_mapping_root(self, config_manager, tmp_path):
        path = tmp_path / "list.yml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="must be a mapping"):
            config_manager.load_config(path)

    def test_seed_environment_override(self, config_manager, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "42")
        assert config_manager.load_config()['run']['seed'] == 42

    def test_bad_seed_environment_fails_validation(self, config_manager, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "abc")
        config = config_manager.load_config()
        assert "run.seed must be a nonnegative integer" in config_manager.validate_config(config)


class TestScenarioConfig:
    """Conversion between documents and scenarios."""

    def test_build_default(self, config_manager):
        scenario = config_manager.build_scenario(config_manager.get_default_config())
        assert isinstance(scenario, ScenarioConfig)
        assert scenario.n == 4
        assert scenario.schedule is ScheduleKind.ASYNCHRONOUS
        assert scenario.topology is TopologyKind.FIXED
        assert scenario.delay_policy is DelayPolicy.NONE
        assert scenario.strategy is Strategy.PLAIN
        assert scenario.window_mode is WindowMode.OBSERVED
        assert scenario.tau_d == 0.0

    def test_build_raises_with_all_errors(self, config_manager):
        config = config_manager._merge_configs(config_manager.get_default_config(),
                                               {'run': {'horizon': -1, 'consensus_tol': 0}})
        with pytest.raises(ConfigError) as excinfo:
            config_manager.build_scenario(config)
        assert "run.horizon must be nonnegative" in excinfo.value.errors
        assert "run.consensus_tol must be greater than 0" in excinfo.value.errors

    def test_indices_become_zero_based(self, config_manager):
        scenario = config_manager.build_scenario(example_switching(0))
        assert scenario.phases[0][0] == frozenset({1})
        assert scenario.phases[0][2] == frozenset({2})
        assert scenario.phases[1][1] == frozenset({0})

        config = config_manager._merge_configs(config_manager.get_default_config(), {
            'delays': {'K': 5, 'policy': 'explicit', 'explicit': [[1, 3, 2, 0.5]]},
        })
        assert config_manager.build_scenario(config).explicit_delays == ((0, 3, 1, 0.5),)

    def test_tau_d(self, config_manager):
        scenario = config_manager.build_scenario(example_switching(0))
        assert scenario.tau_d == pytest.approx(2.0)

    def test_to_dict_round_trips(self, config_manager):
        for document in (example_switching(3), counterexample(0)):
            scenario = config_manager.build_scenario(document)
            again = config_manager.build_scenario(yaml.safe_load(yaml.safe_dump(scenario.to_dict())))
            assert again == scenario

    def test_with_seed(self, example_scenario):
        assert example_scenario.with_seed(9).seed == 9
        assert example_scenario.seed == 0

    def test_graph(self, example_scenario, example_graph):
        assert example_scenario.graph().edges() == example_graph.edges()
