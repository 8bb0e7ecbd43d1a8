"""Tests for the flat key-value config format and seed substreams."""

import numpy as np
import pytest

from phase4_gail.config import (
    PPOConfig,
    build_model,
    format_kv,
    load_ppo_config,
    named_rng,
    parse_kv_text,
)
from phase4_gail.errors import ConfigError


class TestParseKvText:
    def test_comments_and_blanks(self):
        text = "# header\n\nclip_eps = 0.1  # tighter\nepochs=2\n"
        assert parse_kv_text(text) == {"clip_eps": "0.1", "epochs": "2"}

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match=":1:"):
            parse_kv_text("clip_eps 0.1")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_kv_text("epochs = 1\nepochs = 2")


class TestBuildModel:
    def test_values_are_coerced(self):
        cfg = build_model(PPOConfig, {"epochs": "3", "normalize_advantages": "false", "reward_variant": "neg_log_one_minus_d"})
        assert cfg.epochs == 3
        assert cfg.normalize_advantages is False
        assert cfg.reward_variant == "neg_log_one_minus_d"

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="clip_epsilon"):
            build_model(PPOConfig, {"clip_epsilon": "0.2"})

    @pytest.mark.parametrize("key,value", [("clip_eps", "1.5"), ("gamma", "-0.1"), ("gae_lambda", "2"), ("reward_variant", "x")])
    def test_out_of_range(self, key, value):
        with pytest.raises(ConfigError):
            build_model(PPOConfig, {key: value})

    def test_layered_over_base(self):
        base = PPOConfig(epochs=7)
        cfg = build_model(PPOConfig, {"clip_eps": "0.3"}, base=base)
        assert cfg.epochs == 7 and cfg.clip_eps == 0.3


def test_load_ppo_config_round_trips_format(tmp_path):
    cfg = PPOConfig(epochs=2, lr_policy=1e-4, max_grad_norm=0.0)
    path = tmp_path / "ppo.txt"
    path.write_text(format_kv(cfg), encoding="utf-8")
    assert load_ppo_config(path) == cfg
    assert cfg.grad_clip is None


def test_load_ppo_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_ppo_config(tmp_path / "absent.txt")


def test_named_rng_streams():
    a = named_rng(5, "rollout").random(4)
    b = named_rng(5, "rollout").random(4)
    c = named_rng(5, "eval").random(4)
    d = named_rng(6, "rollout").random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
