"""
Command-line entry point: `python -m phase6_cli <subcommand> [flags]`.

Exit codes: 0 success, 1 usage or configuration error, 2 invalid or missing
data, 3 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable

from phase1_data_pipeline.errors import ManifestError, SceneGenerationError
from phase2_numerics.errors import CheckpointError, NonFiniteError
from phase3_search_env.errors import EpisodeError, FoveationError
from phase4_gail.errors import ConfigError, DivergenceError
from phase5_metrics.errors import MetricError

from . import commands
from .settings import RunConfig, resolve_config

logger = logging.getLogger("phase6_cli")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGENCE = 3

Command = Callable[[argparse.Namespace, RunConfig], int]


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors exiting 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _point(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y in canvas pixels, got {text!r}") from None
    return (x, y)


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", default=None, help="Flat key = value config file")
    common.add_argument("--seed", type=int, default=None, help="Root seed (env SEARCH_IRL_SEED)")
    common.add_argument("--out", default=None, help="Artifact directory (env SEARCH_IRL_OUT)")
    common.add_argument(
        "--jobs", type=int, default=None, help="Parallel episodes (env SEARCH_IRL_JOBS; default: all cores)"
    )
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="search-irl", description="Visual search scanpaths learned by adversarial imitation.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = [_common()]

    p = sub.add_parser("foveate", parents=common, help="Cumulative retina-transformed images for a fixation list")
    p.add_argument("image", help="Image path or synthetic scene ref")
    p.add_argument("fixations", nargs="+", type=_point, help="Fixations as x,y in canvas pixels")
    p.add_argument("--format", default="png", choices=["png", "ppm"], help="Raster format (default: png)")
    p.set_defaults(func=commands.cmd_foveate)

    p = sub.add_parser("synth", parents=common, help="Synthetic train/test scenes with oracle scanpaths")
    p.add_argument("--n-train", type=int, default=None, help="Training scenes (default: 400)")
    p.add_argument("--n-test", type=int, default=None, help="Held-out scenes (default: 100)")
    p.add_argument("--shared", action="store_true", default=None, help="Both categories in every test scene")
    p.add_argument("--category", type=int, action="append", help="Category id to generate (repeatable)")
    p.set_defaults(func=commands.cmd_synth)

    p = sub.add_parser("train", parents=common, help="Train the search policy with GAIL")
    p.add_argument("--manifest", required=True, help="Training manifest JSON")
    p.add_argument("--eval-manifest", default=None, help="Held-out manifest for periodic evaluation")
    p.add_argument("--iterations", type=int, default=None, help="GAIL iterations")
    p.add_argument("--episodes", type=int, default=None, help="Episodes per iteration")
    p.add_argument("--category", type=int, action="append", help="Restrict to category id (repeatable)")
    p.set_defaults(func=commands.cmd_train)

    p = sub.add_parser("eval", parents=common, help="Evaluate a trained policy on test trials")
    p.add_argument("--manifest", required=True, help="Test manifest JSON")
    p.add_argument("--checkpoint", required=True, help="Training output directory or policy.girl file")
    p.add_argument("--category", type=int, action="append", help="Restrict to category id (repeatable)")
    p.add_argument("--maps", type=int, default=None, help="Export saccade maps and FDMs for the first N images")
    p.set_defaults(func=commands.cmd_eval)

    p = sub.add_parser("report", parents=common, help="Error and fixation summary per category x condition")
    p.add_argument("--manifest", required=True, action="append", help="Manifest JSON (repeatable, one per split)")
    p.add_argument("--category", type=int, action="append", help="Restrict to category id (repeatable)")
    p.set_defaults(func=commands.cmd_report)

    p = sub.add_parser("validate", parents=common, help="Validate a manifest")
    p.add_argument("--manifest", required=True, help="Manifest JSON")
    p.set_defaults(func=commands.cmd_validate)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, object]:
    flags = {
        "seed": "seed",
        "jobs": "jobs",
        "out": "out",
        "iterations": "iterations",
        "episodes": "episodes_per_iteration",
        "n_train": "n_train",
        "n_test": "n_test",
        "shared": "shared_test",
        "maps": "map_images",
    }
    return {key: getattr(args, flag) for flag, key in flags.items() if getattr(args, flag, None) is not None}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    func: Command = args.func
    try:
        config = resolve_config(args.config, _overrides(args))
        logger.info("%s: seed=%d jobs=%d out=%s", args.command, config.run.seed, config.run.jobs, config.run.out)
        return func(args, config)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergenceError, NonFiniteError) as e:
        print(f"diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (
        ManifestError,
        FoveationError,
        MetricError,
        CheckpointError,
        EpisodeError,
        SceneGenerationError,
        OSError,
        ValueError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
