"""
Trainer settings and the flat key-value config format.

Config files are `key = value` lines; `#` starts a comment. Keys are model
field names; an unknown key is an error.
"""

from __future__ import annotations

import logging
import zlib
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from phase3_search_env.config import EnvConfig

from .errors import ConfigError

logger = logging.getLogger(__name__)

RewardVariant = Literal["log_d", "neg_log_one_minus_d"]


class PPOConfig(BaseModel):
    clip_eps: float = Field(default=0.2, gt=0, lt=1)
    epochs: int = Field(default=4, ge=1)
    minibatch_size: int = Field(default=64, ge=1)
    lr_policy: float = Field(default=3e-4, ge=0)
    lr_value: float = Field(default=1e-3, ge=0)
    lr_discriminator: float = Field(default=3e-4, ge=0)
    gamma: float = Field(default=1.0, ge=0, le=1)
    gae_lambda: float = Field(default=0.95, ge=0, le=1)
    entropy_coef: float = Field(default=0.01, ge=0)
    value_coef: float = Field(default=0.5, ge=0)
    episodes_per_iteration: int = Field(default=32, ge=1)
    iterations: int = Field(default=100, ge=0)
    max_grad_norm: float = Field(default=0.5, ge=0, description="0 disables clipping")
    normalize_advantages: bool = True
    disc_steps: int = Field(default=1, ge=0)
    disc_batch_size: int = Field(default=128, ge=1)
    reward_variant: RewardVariant = "log_d"
    checkpoint_every: int = Field(default=0, ge=0, description="0 writes only the final checkpoint")
    eval_every: int = Field(default=0, ge=0)

    @property
    def grad_clip(self) -> Optional[float]:
        return self.max_grad_norm or None


class NetworkConfig(BaseModel):
    trunk_channels: int = Field(default=32, ge=1)
    disc_channels: int = Field(default=32, ge=1)


class TrainerConfig(BaseModel):
    env: EnvConfig = Field(default_factory=EnvConfig)
    ppo: PPOConfig = Field(default_factory=PPOConfig)
    network: NetworkConfig = Field(default_factory=NetworkConfig)


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    """
    `key = value` lines to a dict. Blank lines and `#` comments are skipped.

    Raises:
        ConfigError: a line without `=`, an empty key, or a repeated key.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_kv_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return parse_kv_text(text, source=str(path))


def build_model(model_cls: type[BaseModel], values: Mapping[str, Any], base: BaseModel | None = None) -> BaseModel:
    """
    Validate `values` as fields of `model_cls`, layered over `base`.

    Raises:
        ConfigError: unknown key or invalid value.
    """
    unknown = sorted(set(values) - set(model_cls.model_fields))
    if unknown:
        raise ConfigError(f"unknown {model_cls.__name__} key(s): {', '.join(unknown)}")
    merged = base.model_dump() if base is not None else {}
    merged.update(values)
    try:
        return model_cls.model_validate(merged)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"invalid {model_cls.__name__}: {problems}") from e


def load_ppo_config(path: str | Path) -> PPOConfig:
    """PPOConfig from a flat key-value file whose keys are PPOConfig fields."""
    return build_model(PPOConfig, read_kv_file(path))


def format_kv(model: BaseModel) -> str:
    lines = []
    for key, value in model.model_dump().items():
        if isinstance(value, dict):
            continue
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def named_rng(root_seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named substream of one root seed."""
    return np.random.default_rng(np.random.SeedSequence([int(root_seed), zlib.crc32(name.encode("utf-8"))]))
