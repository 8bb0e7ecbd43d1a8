"""
Policy evaluation against human test trials.

One model scanpath is sampled per human trial slot (same image and category,
center start). Per image x category the model FDM is scored against the human
fixations; per category the guidance curves, baselines and fixated-in-6 are
computed for humans and model alike.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd

from phase1_data_pipeline.rasters import save_gray
from phase1_data_pipeline.schema import DatasetManifest, SearchTrial
from phase3_search_env.env import SearchEnv
from phase4_gail.agent import ActorCritic, saccade_map, save_saccade_heatmap, save_saccade_map_csv
from phase4_gail.config import named_rng
from phase4_gail.rollout import Trajectory, collect_rollouts
from phase4_gail.trainer import ImageSource, build_tasks

from .config import MetricConfig
from .density import auc, fdm, nss, subject_model_auc
from .errors import MetricError
from .guidance import (
    GuidanceCurve,
    guidance_curve,
    object_baseline_curve,
    search_stats,
    shuffled_guidance_curve,
)
from .scanpath import mean_multimatch

logger = logging.getLogger(__name__)

MODEL_SUBJECT = "model"
METRIC_COLUMNS = ["image", "category_id", "category", "metric", "value", "n_human", "sigma_deg", "auc_variant"]
CURVE_COLUMNS = ["category_id", "category", "source", "saccade", "value", "n_trials"]


@dataclass
class Evaluation:
    metrics: pd.DataFrame
    curves: pd.DataFrame
    summary: dict[str, Any]
    model_trials: list[SearchTrial] = field(default_factory=list)

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"metrics": out / "metrics.csv", "curves": out / "curves.csv", "summary": out / "summary.json"}
        self.metrics.to_csv(paths["metrics"], index=False, float_format="%.8g")
        self.curves.to_csv(paths["curves"], index=False, float_format="%.8g")
        paths["summary"].write_text(json.dumps(_json_safe(self.summary), indent=2, sort_keys=True), encoding="utf-8")
        return paths


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(float(value)) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def _to_canvas(
    trial: SearchTrial, points: Sequence[tuple[float, float]], config: MetricConfig
) -> list[tuple[float, float]]:
    sx = config.width / trial.image.width
    sy = config.height / trial.image.height
    return [(x * sx, y * sy) for x, y in points]


def model_trial(trial: SearchTrial, traj: Trajectory, config: MetricConfig) -> SearchTrial:
    """The human trial's slot filled with a model scanpath (canvas fixations mapped back to native pixels)."""
    sx = trial.image.width / config.width
    sy = trial.image.height / config.height
    fixations = [(x * sx, y * sy, 0.0) for x, y in traj.fixations]
    return trial.model_copy(
        update={
            "trial_id": f"{trial.trial_id}:{MODEL_SUBJECT}",
            "subject_id": MODEL_SUBJECT,
            "correct": True,
            "fixations": fixations,
        }
    )


def sample_model_trials(
    env: SearchEnv,
    policy: ActorCritic,
    trials: Sequence[SearchTrial],
    images: ImageSource,
    config: MetricConfig,
    seed: int = 0,
    jobs: int = 1,
    greedy: bool = False,
) -> list[SearchTrial]:
    """One policy episode per trial, seeded from the `eval` substream."""
    if not trials:
        return []
    tasks = build_tasks(DatasetManifest(categories=[], trials=list(trials)), images, config.width, config.height)
    index = {(t.key, t.category): i for i, t in enumerate(tasks)}
    task_indices = [index[(t.image.ref, t.category_id)] for t in trials]
    trajs = collect_rollouts(
        env, policy, tasks, len(trials), named_rng(seed, "eval"), jobs, greedy=greedy, task_indices=task_indices
    )
    return [model_trial(t, traj, config) for t, traj in zip(trials, trajs)]


def _group_metrics(
    ref: str,
    category_id: int,
    category: str,
    human: Sequence[SearchTrial],
    model: Sequence[SearchTrial],
    config: MetricConfig,
) -> list[dict[str, Any]]:
    human_paths = [_to_canvas(t, t.points, config) for t in human]
    model_paths = [_to_canvas(t, t.points, config) for t in model]
    human_points = [p for path in human_paths for p in path[1:]]
    model_points = [p for path in model_paths for p in path[1:]]
    per_subject: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for t, path in zip(human, human_paths):
        per_subject[t.subject_id].extend(path[1:])
    per_subject = {s: pts for s, pts in per_subject.items() if pts}

    values: dict[str, float] = {}
    if human_points and model_points:
        model_map = fdm(model_points, config.sigma_px, config.shape)
        rng = np.random.default_rng(config.auc_seed)
        values["model_auc"] = auc(model_map, human_points, rng, config.auc_variant, config.auc_negatives)
        values["model_nss"] = nss(model_map, human_points)
    if len(per_subject) >= 2:
        values["subject_auc"] = subject_model_auc(
            per_subject, config.sigma_px, config.shape, config.auc_variant, config.auc_negatives, config.auc_seed
        )
    human_mm = [p for p in human_paths if len(p) >= 2]
    model_mm = [p for p in model_paths if len(p) >= 2]
    if human_mm and model_mm:
        values["mm_model_human"] = mean_multimatch(model_mm, human_mm, config.width, config.height)
    if len(human_mm) >= 2:
        values["mm_human_human"] = mean_multimatch(human_mm, human_mm, config.width, config.height)

    return [
        {
            "image": ref,
            "category_id": category_id,
            "category": category,
            "metric": metric,
            "value": value,
            "n_human": len(human),
            "sigma_deg": config.sigma_deg,
            "auc_variant": config.auc_variant,
        }
        for metric, value in values.items()
    ]


def _curve_rows(category_id: int, category: str, source: str, curve: GuidanceCurve) -> list[dict[str, Any]]:
    return [
        {
            "category_id": category_id,
            "category": category,
            "source": source,
            "saccade": k,
            "value": float(v),
            "n_trials": curve.n_trials,
        }
        for k, v in enumerate(curve.values, start=1)
    ]


def _category_curves(trials: Sequence[SearchTrial], config: MetricConfig) -> dict[str, GuidanceCurve]:
    curves: dict[str, GuidanceCurve] = {}
    n, inflation = config.n_saccades, config.target_inflation_deg
    try:
        curves["target"] = guidance_curve(trials, n, inflation)
    except MetricError as e:
        logger.debug("no target curve: %s", e)
    try:
        curves["baseline"] = object_baseline_curve(trials, n_saccades=n, inflation_deg=inflation)
    except MetricError as e:
        logger.debug("no object baseline: %s", e)
    if "target" in curves:
        curves["shuffled"] = shuffled_guidance_curve(
            trials, n, config.shuffle_permutations, config.shuffle_seed, inflation
        )
    return curves


def _stats_summary(
    trials: Sequence[SearchTrial], curves: dict[str, GuidanceCurve], config: MetricConfig
) -> dict[str, Any]:
    out: dict[str, Any] = {"n_trials": len(trials)}
    if "target" in curves:
        stats = search_stats(
            trials, config.n_saccades, config.shuffle_permutations, config.shuffle_seed, config.target_inflation_deg
        )
        out.update(
            fixated_in_6=stats.fixated_in_6,
            avg_saccades_to_target=stats.avg_saccades_to_target,
            shuffled_chance=stats.shuffled_chance,
            target_slope=curves["target"].slope,
        )
    for name in ("baseline", "shuffled"):
        if name in curves:
            out[f"{name}_slope"] = curves[name].slope
    return out


def export_maps(
    env: SearchEnv,
    policy: ActorCritic,
    refs: Sequence[str],
    trials: Sequence[SearchTrial],
    model_trials: Sequence[SearchTrial],
    images: ImageSource,
    config: MetricConfig,
    out_dir: str | Path,
) -> list[Path]:
    """
    For each requested image and each category it was searched for: the
    initial saccade map (CSV + PNG) and the human and model FDMs (PNG,
    scaled to a maximum of 1).
    """
    out = Path(out_dir)
    written: list[Path] = []
    for ref in refs:
        name = re.sub(r"[^A-Za-z0-9_.-]+", "_", ref).strip("_")
        categories = sorted({t.category_id for t in trials if t.image.ref == ref})
        if not categories:
            logger.warning("export_maps: no trials on image %s", ref)
            continue
        for cat in categories:
            _, state = env.reset(images(ref), cat, key=ref)
            smap = saccade_map(policy(state))
            written.append(save_saccade_map_csv(smap, out / "saccade_maps" / f"{name}_c{cat}.csv"))
            written.append(save_saccade_heatmap(smap, out / "saccade_maps" / f"{name}_c{cat}.png"))
            for source, group in (("human", trials), ("model", model_trials)):
                points = [
                    p
                    for t in group
                    if t.image.ref == ref and t.category_id == cat
                    for p in _to_canvas(t, t.points, config)[1:]
                ]
                if not points:
                    continue
                density = fdm(points, config.sigma_px, config.shape)
                path = out / "fdms" / f"{name}_c{cat}_{source}.png"
                path.parent.mkdir(parents=True, exist_ok=True)
                written.append(save_gray(path, density / density.max()))
    logger.info("export_maps: [audit] %d files for %d images", len(written), len(refs))
    return written


def evaluate_policy(
    env: SearchEnv,
    policy: ActorCritic,
    manifest: DatasetManifest,
    images: ImageSource,
    config: Optional[MetricConfig] = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    categories: Optional[Sequence[int]] = None,
    map_images: Sequence[str] = (),
    greedy: bool = False,
) -> Evaluation:
    """
    Sample model scanpaths for every test trial and compute the full metric set.

    Args:
        env: Environment built with the policy's extractor.
        policy: Trained (or untrained) actor-critic.
        manifest: Human test trials.
        images: Resolves image refs to canvas images.
        config: Raster, smoothing, AUC and shuffle settings.
        seed: Root seed; model episodes use its `eval` substream.
        out_dir: If set, receives metrics.csv, curves.csv, summary.json and maps.
        jobs: Parallel episodes.
        categories: Restrict to these category ids.
        map_images: Image refs to export saccade maps and FDMs for.
        greedy: Argmax saccades instead of sampling.

    Returns:
        Evaluation with per image x category metrics, guidance curves and a summary.
    """
    config = config or MetricConfig()
    names = manifest.category_names
    trials = [t for t in manifest.trials if categories is None or t.category_id in categories]
    summary: dict[str, Any] = {
        "n_trials": len(trials),
        "seed": seed,
        "sigma_deg": config.sigma_deg,
        "sigma_px": config.sigma_px,
        "auc_variant": config.auc_variant,
        "auc_negatives": config.auc_negatives,
        "auc_seed": config.auc_seed,
        "shuffle_permutations": config.shuffle_permutations,
        "categories": {},
    }
    if not trials:
        logger.warning("evaluate_policy: 0 test trials; writing empty tables")
        result = Evaluation(pd.DataFrame(columns=METRIC_COLUMNS), pd.DataFrame(columns=CURVE_COLUMNS), summary)
        if out_dir is not None:
            result.write(out_dir)
        return result

    model = sample_model_trials(env, policy, trials, images, config, seed, jobs, greedy)
    logger.info("evaluate_policy: [audit] %d test trials -> %d model scanpaths", len(trials), len(model))

    groups: dict[tuple[str, int], tuple[list[SearchTrial], list[SearchTrial]]] = defaultdict(lambda: ([], []))
    for human_trial, generated in zip(trials, model):
        human_group, model_group = groups[(human_trial.image.ref, human_trial.category_id)]
        human_group.append(human_trial)
        model_group.append(generated)
    metric_rows: list[dict[str, Any]] = []
    for (ref, cat), (human_group, model_group) in groups.items():
        metric_rows.extend(_group_metrics(ref, cat, names.get(cat, str(cat)), human_group, model_group, config))

    curve_rows: list[dict[str, Any]] = []
    for cat in sorted({t.category_id for t in trials}):
        name = names.get(cat, str(cat))
        per_source = {
            "human": [t for t in trials if t.category_id == cat],
            "model": [t for t in model if t.category_id == cat],
        }
        cat_summary: dict[str, Any] = {}
        for source, group in per_source.items():
            curves = _category_curves(group, config)
            for kind, curve in curves.items():
                label = source if kind == "target" else f"{source}_{kind}"
                curve_rows.extend(_curve_rows(cat, name, label, curve))
            cat_summary[source] = _stats_summary(group, curves, config)
        summary["categories"][name] = cat_summary

    metrics = pd.DataFrame(metric_rows, columns=METRIC_COLUMNS)
    for metric in ("model_auc", "subject_auc", "mm_model_human", "mm_human_human"):
        values = metrics.loc[metrics["metric"] == metric, "value"]
        summary[f"mean_{metric}"] = float(values.mean()) if len(values) else None
    result = Evaluation(metrics, pd.DataFrame(curve_rows, columns=CURVE_COLUMNS), summary, model)
    if out_dir is not None:
        paths = result.write(out_dir)
        if map_images:
            export_maps(env, policy, map_images, trials, model, images, config, out_dir)
        logger.info("evaluate_policy: wrote %s", ", ".join(str(p) for p in paths.values()))
    return result
