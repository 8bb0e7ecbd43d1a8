"""
Pipeline: orchestrate load -> filter -> expert pairs, plus image resolution and
per-trial summaries.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .cache import ImageCache
from .loader import load_manifest
from .normalizer import discretize_fixation, filter_training, target_fixated
from .rasters import load_image
from .schema import DatasetManifest, ExpertPair
from .synth import SYNTHETIC_PREFIX, SceneConfig, gen_scene, parse_synthetic_ref

logger = logging.getLogger(__name__)

MAX_PAIRS_PER_TRIAL = 6


def export_expert_pairs(manifest: DatasetManifest) -> list[ExpertPair]:
    """
    For each trial, pairs (first k+1 fixations -> grid index of fixation k+1)
    for k = 0..min(5, n-2). Trials with fewer than two fixations contribute
    nothing and are logged.
    """
    pairs: list[ExpertPair] = []
    skipped = 0
    for trial in manifest.trials:
        points = trial.points
        if len(points) < 2:
            skipped += 1
            logger.warning("export_expert_pairs: trial %s has %d fixation(s); no pairs", trial.trial_id, len(points))
            continue
        w, h = trial.image.width, trial.image.height
        for k in range(min(MAX_PAIRS_PER_TRIAL, len(points) - 1)):
            x, y = points[k + 1]
            pairs.append(
                ExpertPair(
                    trial_id=trial.trial_id,
                    step=k,
                    image=trial.image,
                    category_id=trial.category_id,
                    prefix=points[: k + 1],
                    action=discretize_fixation(x, y, w, h),
                )
            )
    logger.info(
        "export_expert_pairs: [audit] %d trials -> %d pairs (%d skipped)",
        len(manifest.trials),
        len(pairs),
        skipped,
    )
    return pairs


class ImageResolver:
    """
    Turns an image ref into a (320, 512, 3) float32 canvas image.

    Paths are resolved relative to `base_dir` (the manifest's directory);
    synthetic refs are regenerated from their seed with `scene_config`.
    """

    def __init__(
        self,
        base_dir: str | Path | None = None,
        scene_config: SceneConfig | None = None,
        cache_size: int = 256,
    ):
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.scene_config = scene_config or SceneConfig()
        self.cache = ImageCache(max_size=cache_size)

    @classmethod
    def for_manifest(cls, manifest_path: str | Path, **kwargs: Any) -> "ImageResolver":
        return cls(base_dir=Path(manifest_path).resolve().parent, **kwargs)

    def __call__(self, ref: str) -> np.ndarray:
        cached = self.cache.get(ref)
        if cached is not None:
            return cached
        if ref.startswith(SYNTHETIC_PREFIX):
            seed, cat, tp, shared = parse_synthetic_ref(ref)
            image = gen_scene(seed, cat, tp, self.scene_config, shared).image
        else:
            path = Path(ref)
            image = load_image(path if path.is_absolute() else self.base_dir / path)
        self.cache.set(ref, image)
        return image


def manifest_summary(manifest: DatasetManifest, inflation_deg: float = 0.0) -> pd.DataFrame:
    """One row per trial: ids, category, condition, correctness and fixation count (start included)."""
    names = manifest.category_names
    rows = [
        {
            "trial_id": t.trial_id,
            "subject_id": t.subject_id,
            "image": t.image.ref,
            "category_id": t.category_id,
            "category": names.get(t.category_id, str(t.category_id)),
            "condition": t.condition,
            "correct": t.correct,
            "n_fixations": len(t.fixations),
            "target_fixated": target_fixated(t, inflation_deg) if t.condition == "tp" else False,
            "split": manifest.split,
        }
        for t in manifest.trials
    ]
    columns = [
        "trial_id",
        "subject_id",
        "image",
        "category_id",
        "category",
        "condition",
        "correct",
        "n_fixations",
        "target_fixated",
        "split",
    ]
    return pd.DataFrame(rows, columns=columns)


def run_pipeline(
    manifest_path: str | Path,
    out_dir: str | Path | None = None,
    inflation_deg: float = 0.0,
) -> dict[str, Any]:
    """
    Load a manifest, filter it for training and export expert pairs.

    Args:
        manifest_path: Manifest JSON file.
        out_dir: If set, write expert_pairs.json there.
        inflation_deg: Target-box inflation for the target-fixated test.

    Returns:
        Summary dict with keys: loaded_trials, retained_trials, search_fixations,
        expert_pairs, pairs_path.
    """
    logger.info("Starting pipeline: manifest=%s", manifest_path)
    manifest = load_manifest(manifest_path)
    filtered = filter_training(manifest, inflation_deg=inflation_deg)
    pairs = export_expert_pairs(filtered)

    pairs_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        pairs_path = out / "expert_pairs.json"
        pairs_path.write_text(json.dumps([p.model_dump(mode="json") for p in pairs], indent=1), encoding="utf-8")

    result = {
        "loaded_trials": len(manifest.trials),
        "retained_trials": len(filtered.trials),
        "search_fixations": sum(len(t.fixations) - 1 for t in filtered.trials),
        "expert_pairs": len(pairs),
        "pairs_path": str(pairs_path) if pairs_path else None,
    }
    logger.info("Pipeline complete: %s", result)
    return result
