"""Tests for layered run configuration."""

import pytest

from phase4_gail.errors import ConfigError
from phase6_cli.settings import (
    RESOLVED_CONFIG,
    SEED_FILE,
    RunConfig,
    build_config,
    environment_values,
    load_resolved,
    resolve_config,
    route_keys,
    write_run_files,
)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# training\nseed = 3\nclip_eps = 0.1\niterations = 7\nout = from-file\n")
    return path


class TestRouting:
    def test_plain_key_reaches_every_section(self):
        routed = route_keys({"width": "640"})
        assert routed["foveation"]["width"] == "640"
        assert routed["metrics"]["width"] == "640"
        assert routed["scene"]["width"] == "640"
        assert routed["ppo"] == {}

    def test_dotted_key_targets_one_section(self):
        routed = route_keys({"metrics.sigma_deg": "2"})
        assert routed["metrics"] == {"sigma_deg": "2"}

    @pytest.mark.parametrize("key", ["no_such_key", "ppo.width", "nowhere.seed", "env.foveation"])
    def test_unknown_key(self, key):
        with pytest.raises(ConfigError, match="unknown config key"):
            route_keys({key: "1"})

    def test_build_config_nested_foveation(self):
        config = build_config({"e2_deg": "3.0", "feature_channels": "8"})
        assert config.foveation.e2_deg == 3.0
        assert config.env.feature_channels == 8
        assert config.trainer.env.foveation.e2_deg == 3.0

    def test_invalid_value(self):
        with pytest.raises(ConfigError, match="PPOConfig"):
            build_config({"clip_eps": "1.5"})


class TestResolve:
    def test_defaults(self):
        config = resolve_config(environ={})
        assert config.run.seed == 0
        assert config.ppo.clip_eps == 0.2
        assert config.foveation.width == 512

    def test_precedence(self, config_file):
        environ = {"SEARCH_IRL_SEED": "5", "SEARCH_IRL_OUT": "from-env"}
        config = resolve_config(config_file, {"out": "from-flag", "jobs": None}, environ=environ)
        assert config.run.seed == 5
        assert config.run.out == "from-flag"
        assert config.ppo.clip_eps == 0.1
        assert config.ppo.iterations == 7

    def test_file_beats_defaults_only(self, config_file):
        config = resolve_config(config_file, environ={})
        assert config.run.seed == 3
        assert config.run.out == "from-file"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            resolve_config(tmp_path / "absent.cfg", environ={})

    def test_environment_values_ignore_empty(self):
        assert environment_values({"SEARCH_IRL_JOBS": "", "SEARCH_IRL_SEED": "9", "OTHER": "x"}) == {"seed": "9"}


class TestRunFiles:
    def test_resolved_reload(self, tmp_path):
        config = build_config({"seed": "11", "clip_eps": "0.15", "metrics.sigma_deg": "2.0", "blend_levels": "true"})
        config_path, seed_path = write_run_files(tmp_path, config)
        assert config_path.name == RESOLVED_CONFIG
        assert seed_path.read_text() == "11\n"
        assert (tmp_path / SEED_FILE).exists()
        assert load_resolved(config_path) == config

    def test_resolved_is_dotted(self, tmp_path):
        text = RunConfig().to_kv()
        assert "# metrics" in text
        assert "foveation.width = 512" in text
        assert "metrics.width = 512" in text
        assert "env.foveation" not in text
