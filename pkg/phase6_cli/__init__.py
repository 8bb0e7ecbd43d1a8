"""
Phase 6: Command-line surface.

Subcommands foveate, synth, train, eval, report and validate over one layered
run configuration (defaults < config file < environment < flags).
"""

from .settings import RunConfig, RunSettings, build_config, load_resolved, resolve_config, route_keys, write_run_files

__all__ = [
    "RunConfig",
    "RunSettings",
    "build_config",
    "load_resolved",
    "resolve_config",
    "route_keys",
    "write_run_files",
]
