"""
Subcommand bodies. Each takes the parsed flags and the resolved RunConfig,
writes its artifacts plus the resolved config and seed into `run.out`, and
returns a process exit code.
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Any, Sequence

from phase1_data_pipeline.errors import ManifestError
from phase1_data_pipeline.loader import load_manifest
from phase1_data_pipeline.normalizer import filter_training, validate_manifest
from phase1_data_pipeline.pipeline import ImageResolver, export_expert_pairs
from phase1_data_pipeline.rasters import save_gray, save_rgb
from phase1_data_pipeline.schema import DatasetManifest
from phase1_data_pipeline.synth import gen_dataset, write_dataset
from phase3_search_env.retina import blur_level_raster, build_pyramid, cumulative_foveate
from phase4_gail.config import named_rng
from phase4_gail.trainer import build_tasks, load_networks, rollout_evaluator, train
from phase5_metrics.evaluation import evaluate_policy
from phase5_metrics.report import format_table_one, table_one, write_report

from .settings import RunConfig, write_run_files

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA = 2


def _restrict(manifest: DatasetManifest, categories: Sequence[int] | None) -> DatasetManifest:
    if not categories:
        return manifest
    wanted = set(categories)
    return manifest.with_trials([t for t in manifest.trials if t.category_id in wanted])


def _print_json(data: dict[str, Any]) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, default=str))


def cmd_foveate(args: argparse.Namespace, config: RunConfig) -> int:
    """One cumulative ReT-image (and its blur-level raster) per fixation prefix."""
    out = Path(config.run.out)
    fov = config.foveation
    image = ImageResolver(base_dir=Path.cwd(), scene_config=config.scene)(args.image)
    pyramid = build_pyramid(image, fov)
    write_run_files(out, config)
    written = []
    for k in range(1, len(args.fixations) + 1):
        ret = cumulative_foveate(pyramid, args.fixations[:k], fov)
        written.append(save_rgb(out / f"ret_{k:02d}.{args.format}", ret.pixels))
        written.append(save_gray(out / f"ret_{k:02d}_levels.{args.format}", blur_level_raster(ret, fov)))
    logger.info("foveate: %d fixations -> %d rasters in %s", len(args.fixations), len(written), out)
    _print_json({"out": str(out), "rasters": [p.name for p in written]})
    return EXIT_OK


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    """Synthetic train/test manifests with rendered scene images."""
    run = config.run
    out = Path(run.out)
    synth_seed = int(named_rng(run.seed, "synth").integers(0, 2**31 - 1))
    train_manifest, test_manifest = gen_dataset(
        run.n_train,
        run.n_test,
        categories=args.category or None,
        seed=synth_seed,
        scene_config=config.scene,
        oracle_config=config.oracle,
        shared_test=run.shared_test,
        ta_fraction=run.ta_fraction,
        test_subjects=run.test_subjects,
    )
    write_run_files(out, config)
    paths = write_dataset([train_manifest, test_manifest], out, config.scene)
    _print_json(
        {
            "train_trials": len(train_manifest.trials),
            "test_trials": len(test_manifest.trials),
            "manifests": {split: str(p) for split, p in paths.items()},
        }
    )
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    """GAIL training on the correct, target-fixated trials of a manifest."""
    run = config.run
    out = Path(run.out)
    fov = config.foveation
    manifest = _restrict(load_manifest(args.manifest), args.category)
    filtered = filter_training(manifest, config.metrics.target_inflation_deg)
    pairs = export_expert_pairs(filtered)
    images = ImageResolver.for_manifest(args.manifest, scene_config=config.scene)
    tasks = build_tasks(filtered, images, fov.width, fov.height)

    evaluator = None
    if args.eval_manifest:
        eval_manifest = _restrict(load_manifest(args.eval_manifest), args.category)
        eval_images = ImageResolver.for_manifest(args.eval_manifest, scene_config=config.scene)
        eval_tasks = build_tasks(eval_manifest, eval_images, fov.width, fov.height)
        evaluator = rollout_evaluator(eval_tasks, run.seed, run.jobs)

    write_run_files(out, config)
    logger.info("train: root seed %d, substreams policy-init, disc-init, rollout, ppo, disc, eval", run.seed)
    result = train(pairs, tasks, images, config.trainer, seed=run.seed, out_dir=out, jobs=run.jobs, evaluator=evaluator)
    _print_json({"out": str(out), **result.report.summary()})
    return EXIT_OK


def _map_refs(manifest: DatasetManifest, n: int) -> list[str]:
    refs: list[str] = []
    for trial in manifest.trials:
        if len(refs) >= n:
            break
        if trial.image.ref not in refs:
            refs.append(trial.image.ref)
    return refs


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    """Metrics of a trained policy on held-out trials."""
    run = config.run
    out = Path(run.out)
    manifest = _restrict(load_manifest(args.manifest), args.category)
    nets = load_networks(config.trainer, args.checkpoint, run.seed)
    images = ImageResolver.for_manifest(args.manifest, scene_config=config.scene)
    write_run_files(out, config)
    result = evaluate_policy(
        nets.env,
        nets.policy,
        manifest,
        images,
        config.metrics,
        seed=run.seed,
        out_dir=out,
        jobs=run.jobs,
        map_images=_map_refs(manifest, run.map_images),
        greedy=run.greedy,
    )
    _print_json({"out": str(out), **{k: v for k, v in result.summary.items() if k != "categories"}})
    return EXIT_OK


def cmd_report(args: argparse.Namespace, config: RunConfig) -> int:
    """Error rate and fixation counts per category x condition x split."""
    out = Path(config.run.out)
    manifests = [_restrict(load_manifest(p), args.category) for p in args.manifest]
    table = table_one(manifests, config.metrics.target_inflation_deg)
    write_run_files(out, config)
    write_report(table, out)
    print(format_table_one(table))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:
    """Schema and invariant check; violations are printed and exit with 2."""
    try:
        manifest = load_manifest(args.manifest)
    except ManifestError as e:
        print(f"INVALID {args.manifest}")
        for tid, message in e.violations or [("<manifest>", str(e))]:
            print(f"  error   {tid}: {message}")
        return EXIT_DATA
    report = validate_manifest(manifest)
    for tid, message in report.warnings:
        print(f"  warning {tid}: {message}")
    print(f"OK {args.manifest}: {len(manifest.trials)} trials, {len(report.warnings)} warnings")
    return EXIT_OK
