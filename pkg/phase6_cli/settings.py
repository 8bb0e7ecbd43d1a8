"""
Run configuration: one flat key-value file over every settings model, layered
as defaults < config file < environment (.env) < command-line flags.

A plain key (`clip_eps = 0.2`) sets that field in every section that declares
it, so `width` moves the retina, metric and scene rasters together. A dotted
key (`metrics.width = 512`) targets one section. Unknown keys are errors.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, Field

from phase1_data_pipeline.synth import OracleConfig, SceneConfig
from phase3_search_env.config import EnvConfig, FoveationConfig
from phase4_gail.config import (
    NetworkConfig,
    PPOConfig,
    TrainerConfig,
    build_model,
    format_kv,
    parse_kv_text,
    read_kv_file,
)
from phase4_gail.errors import ConfigError
from phase5_metrics.config import MetricConfig

logger = logging.getLogger(__name__)

ENV_SEED = "SEARCH_IRL_SEED"
ENV_JOBS = "SEARCH_IRL_JOBS"
ENV_OUT = "SEARCH_IRL_OUT"
ENV_KEYS = {ENV_SEED: "seed", ENV_JOBS: "jobs", ENV_OUT: "out"}

RESOLVED_CONFIG = "config.resolved.txt"
SEED_FILE = "seed.txt"


class RunSettings(BaseModel):
    """Run-level settings: seed, parallelism, output and synthetic dataset size."""

    seed: int = Field(default=0, ge=0)
    jobs: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    out: str = Field(default="runs", min_length=1)
    n_train: int = Field(default=400, ge=1, description="Synthetic training scenes")
    n_test: int = Field(default=100, ge=0, description="Synthetic held-out scenes")
    ta_fraction: float = Field(default=0.0, ge=0, le=1)
    shared_test: bool = False
    test_subjects: int = Field(default=1, ge=1)
    greedy: bool = Field(default=False, description="Argmax saccades during eval")
    map_images: int = Field(default=0, ge=0, description="Test images to export saccade maps for")


SECTIONS: dict[str, type[BaseModel]] = {
    "run": RunSettings,
    "ppo": PPOConfig,
    "network": NetworkConfig,
    "env": EnvConfig,
    "foveation": FoveationConfig,
    "metrics": MetricConfig,
    "oracle": OracleConfig,
    "scene": SceneConfig,
}

# Fields that hold a nested section rather than a value.
NESTED = {("env", "foveation")}


def _fields(section: str) -> set[str]:
    return {f for f in SECTIONS[section].model_fields if (section, f) not in NESTED}


@dataclass(frozen=True)
class RunConfig:
    run: RunSettings = field(default_factory=RunSettings)
    ppo: PPOConfig = field(default_factory=PPOConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)

    @property
    def foveation(self) -> FoveationConfig:
        return self.env.foveation

    @property
    def trainer(self) -> TrainerConfig:
        return TrainerConfig(env=self.env, ppo=self.ppo, network=self.network)

    def to_kv(self) -> str:
        """Every field as a dotted `section.key = value` line; reloading it gives the same config."""
        lines = []
        for section in SECTIONS:
            model = self.foveation if section == "foveation" else getattr(self, section)
            lines.append(f"# {section}")
            lines.extend(f"{section}.{line}" for line in format_kv(model).splitlines())
        return "\n".join(lines) + "\n"


def route_keys(values: Mapping[str, Any]) -> dict[str, dict[str, Any]]:
    """
    Split flat keys into per-section dicts.

    Raises:
        ConfigError: a key no section declares, or a dotted key naming an unknown section or field.
    """
    routed: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}
    for key, value in values.items():
        if "." in key:
            section, name = key.split(".", 1)
            if section not in SECTIONS or name not in _fields(section):
                raise ConfigError(f"unknown config key {key!r}")
            routed[section][name] = value
            continue
        targets = [s for s in SECTIONS if key in _fields(s)]
        if not targets:
            raise ConfigError(f"unknown config key {key!r}")
        for section in targets:
            routed[section][key] = value
    return routed


def build_config(values: Mapping[str, Any]) -> RunConfig:
    routed = route_keys(values)
    foveation = build_model(FoveationConfig, routed["foveation"])
    env = build_model(EnvConfig, {**routed["env"], "foveation": foveation.model_dump()})
    return RunConfig(
        run=build_model(RunSettings, routed["run"]),
        ppo=build_model(PPOConfig, routed["ppo"]),
        network=build_model(NetworkConfig, routed["network"]),
        env=env,
        metrics=build_model(MetricConfig, routed["metrics"]),
        oracle=build_model(OracleConfig, routed["oracle"]),
        scene=build_model(SceneConfig, routed["scene"]),
    )


def environment_values(environ: Optional[Mapping[str, str]] = None, dotenv: bool = True) -> dict[str, str]:
    """SEARCH_IRL_* variables as config keys. `.env` (searched from the working directory) is loaded first."""
    if environ is None:
        if dotenv:
            load_dotenv(find_dotenv(usecwd=True))
        environ = os.environ
    return {key: environ[var] for var, key in ENV_KEYS.items() if environ.get(var)}


def resolve_config(
    config_path: str | Path | None = None,
    overrides: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    dotenv: bool = True,
) -> RunConfig:
    """
    Defaults, then the config file, then the environment, then `overrides`
    (command-line flags; None values are ignored).

    Raises:
        ConfigError: unreadable file, bad syntax, unknown key or invalid value.
    """
    values: dict[str, Any] = {}
    if config_path is not None:
        values.update(read_kv_file(config_path))
    values.update(environment_values(environ, dotenv))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    config = build_config(values)
    logger.debug("resolve_config: %d keys set", len(values))
    return config


def load_resolved(path: str | Path) -> RunConfig:
    """Reload a config.resolved.txt written by write_run_files."""
    return build_config(parse_kv_text(Path(path).read_text(encoding="utf-8"), source=str(path)))


def write_run_files(out_dir: str | Path, config: RunConfig) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_path = out / RESOLVED_CONFIG
    seed_path = out / SEED_FILE
    config_path.write_text(config.to_kv(), encoding="utf-8")
    seed_path.write_text(f"{config.run.seed}\n", encoding="utf-8")
    return config_path, seed_path
