"""
Synthetic search scenes and an oracle searcher.

Scenes are 512x320: a smoothed gray noise background, textured distractor
patches, and (target-present) one patch carrying the target category's
pattern and tint. Everything is a function of the scene seed, so a scene is
stored in a manifest as a `synthetic:` ref and regenerated on demand.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import ndimage

from .errors import SceneGenerationError
from .loader import save_manifest
from .normalizer import (
    CANVAS_H,
    CANVAS_W,
    GRID_COLS,
    MAX_TARGET_AREA_FRACTION,
    boxes_overlap,
    cell_center,
    center_cell_box,
    validate_manifest,
)
from .rasters import save_rgb
from .schema import Box, Category, DatasetManifest, ImageRef, SearchTrial

logger = logging.getLogger(__name__)

SYNTHETIC_PREFIX = "synthetic:"
TEST_SEED_OFFSET = 1_000_000

CATEGORY_NAMES = {0: "checker", 1: "rings"}

# Base tints, roughly matched in luminance (~0.47-0.50).
CATEGORY_TINTS = {0: (0.62, 0.42, 0.40), 1: (0.40, 0.46, 0.66)}
DISTRACTOR_TINTS = {
    "green": (0.42, 0.55, 0.42),
    "yellow": (0.56, 0.52, 0.36),
    "violet": (0.52, 0.42, 0.58),
    "teal": (0.38, 0.54, 0.56),
}
DISTRACTOR_PATTERNS = ("hstripes", "vstripes", "diagonal", "dots")

START_CELL = 5 * GRID_COLS + 8


class SceneConfig(BaseModel):
    width: int = Field(default=CANVAS_W, gt=0)
    height: int = Field(default=CANVAS_H, gt=0)
    min_patch: int = Field(default=40, ge=8)
    max_patch: int = Field(default=64, ge=8)
    min_distractors: int = Field(default=4, ge=0)
    max_distractors: int = Field(default=7, ge=0)
    background_noise: float = Field(default=0.08, ge=0)
    pattern_contrast: float = Field(default=0.30, ge=0, le=1)
    pattern_period: int = Field(default=8, ge=2)
    gap: int = Field(default=4, ge=0)
    max_retries: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def check_ranges(self) -> "SceneConfig":
        if self.min_patch > self.max_patch:
            raise ValueError("min_patch must not exceed max_patch")
        if self.min_distractors > self.max_distractors:
            raise ValueError("min_distractors must not exceed max_distractors")
        if self.max_patch * self.max_patch >= MAX_TARGET_AREA_FRACTION * self.width * self.height:
            raise ValueError("max_patch too large: target area must stay below 10% of the image")
        return self


class OracleConfig(BaseModel):
    noise_sigma_px: float = Field(default=6.0, ge=0)
    distractor_prob: float = Field(default=0.3, ge=0, le=1)
    hover_sigma_px: float = Field(default=10.0, ge=0)
    max_saccades: int = Field(default=6, ge=1, le=6)


@dataclass(frozen=True)
class SceneLayout:
    """Object placement of a scene; everything except the pixels."""

    seed: int
    category_id: int
    tp: bool
    shared: bool
    target_box: Optional[Box]
    distractor_boxes: tuple[Box, ...]
    distractor_styles: tuple[tuple[str, str], ...]
    other_boxes: Dict[int, Box]

    @property
    def ref(self) -> str:
        return synthetic_ref(self.seed, self.category_id, self.tp, self.shared)


@dataclass(frozen=True)
class SyntheticScene(SceneLayout):
    image: np.ndarray = field(repr=False, compare=False)


def synthetic_ref(seed: int, category_id: int, tp: bool, shared: bool = False) -> str:
    ref = f"{SYNTHETIC_PREFIX}{seed}:{category_id}:{'tp' if tp else 'ta'}"
    return ref + ":shared" if shared else ref


def parse_synthetic_ref(ref: str) -> tuple[int, int, bool, bool]:
    """(seed, category_id, tp, shared) from a synthetic ref."""
    if not ref.startswith(SYNTHETIC_PREFIX):
        raise ValueError(f"not a synthetic ref: {ref!r}")
    parts = ref[len(SYNTHETIC_PREFIX):].split(":")
    if len(parts) not in (3, 4) or parts[2] not in ("tp", "ta") or (len(parts) == 4 and parts[3] != "shared"):
        raise ValueError(f"malformed synthetic ref: {ref!r}")
    return int(parts[0]), int(parts[1]), parts[2] == "tp", len(parts) == 4


def _check_category(category_id: int) -> None:
    if category_id not in CATEGORY_NAMES:
        raise ValueError(f"unknown synthetic category {category_id} (known: {sorted(CATEGORY_NAMES)})")


def _place(rng: np.random.Generator, taken: list[Box], config: SceneConfig) -> Box:
    keep_out = [
        center_cell_box(config.width, config.height),
        _start_cell_box(config),
    ]
    for _ in range(config.max_retries):
        w = int(rng.integers(config.min_patch, config.max_patch + 1))
        h = int(rng.integers(config.min_patch, config.max_patch + 1))
        x = int(rng.integers(0, config.width - w + 1))
        y = int(rng.integers(0, config.height - h + 1))
        box = (float(x), float(y), float(w), float(h))
        padded = (x - config.gap, y - config.gap, w + 2 * config.gap, h + 2 * config.gap)
        if any(boxes_overlap(box, k) for k in keep_out):
            continue
        if any(boxes_overlap(padded, t) for t in taken):
            continue
        return box
    raise SceneGenerationError(f"could not place object {len(taken) + 1} after {config.max_retries} tries")


def _start_cell_box(config: SceneConfig) -> Box:
    cx, cy = cell_center(START_CELL)
    sx, sy = config.width / CANVAS_W, config.height / CANVAS_H
    return ((cx - 16) * sx, (cy - 16) * sy, 32 * sx, 32 * sy)


def layout_scene(
    seed: int,
    category_id: int,
    tp: bool,
    config: SceneConfig | None = None,
    shared: bool = False,
) -> SceneLayout:
    """
    Place the target (if present), the other category's object (shared scenes)
    and the distractors, without rendering.

    Raises:
        ValueError: unknown category.
        SceneGenerationError: placement failed within the retry budget.
    """
    _check_category(category_id)
    config = config or SceneConfig()
    rng = np.random.default_rng((seed, 0))
    taken: list[Box] = []
    target_box = None
    other_boxes: dict[int, Box] = {}
    if tp:
        target_box = _place(rng, taken, config)
        taken.append(target_box)
    if shared:
        for other in sorted(CATEGORY_NAMES):
            if other != category_id:
                other_boxes[other] = _place(rng, taken, config)
                taken.append(other_boxes[other])
    n_distractors = int(rng.integers(config.min_distractors, config.max_distractors + 1))
    boxes, styles = [], []
    tint_names = sorted(DISTRACTOR_TINTS)
    for _ in range(n_distractors):
        box = _place(rng, taken, config)
        taken.append(box)
        boxes.append(box)
        styles.append(
            (
                DISTRACTOR_PATTERNS[int(rng.integers(len(DISTRACTOR_PATTERNS)))],
                tint_names[int(rng.integers(len(tint_names)))],
            )
        )
    return SceneLayout(
        seed=seed,
        category_id=category_id,
        tp=tp,
        shared=shared,
        target_box=target_box,
        distractor_boxes=tuple(boxes),
        distractor_styles=tuple(styles),
        other_boxes=other_boxes,
    )


def pattern(name: str, h: int, w: int, period: int) -> np.ndarray:
    """Zero-mean texture in [-1, 1]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    half = period / 2
    if name == "checker":
        return np.where(((xx // half + yy // half) % 2) == 0, 1.0, -1.0)
    if name == "rings":
        r = np.hypot(xx - (w - 1) / 2, yy - (h - 1) / 2)
        return np.cos(2 * np.pi * r / period)
    if name == "hstripes":
        return np.sign(np.cos(2 * np.pi * (yy + 0.5) / period))
    if name == "vstripes":
        return np.sign(np.cos(2 * np.pi * (xx + 0.5) / period))
    if name == "diagonal":
        return np.cos(2 * np.pi * (xx + yy) / (period * np.sqrt(2)))
    if name == "dots":
        return np.cos(2 * np.pi * xx / period) * np.cos(2 * np.pi * yy / period)
    raise ValueError(f"unknown pattern {name!r}")


def _paint(image: np.ndarray, box: Box, texture: str, tint: tuple[float, float, float], config: SceneConfig) -> None:
    x, y, w, h = (int(v) for v in box)
    tex = pattern(texture, h, w, config.pattern_period)
    patch = np.asarray(tint)[None, None, :] + 0.5 * config.pattern_contrast * tex[:, :, None]
    image[y : y + h, x : x + w, :] = np.clip(patch, 0.0, 1.0)


def render_scene(layout: SceneLayout, config: SceneConfig | None = None) -> np.ndarray:
    """(H, W, 3) float32 pixels of a layout."""
    config = config or SceneConfig()
    rng = np.random.default_rng((layout.seed, 1))
    noise = ndimage.gaussian_filter(rng.standard_normal((config.height, config.width)), sigma=6.0)
    noise /= noise.std() + 1e-12
    gray = 0.5 + config.background_noise * noise
    image = np.repeat(gray[:, :, None], 3, axis=2)
    if layout.target_box is not None:
        _paint(image, layout.target_box, CATEGORY_NAMES[layout.category_id], CATEGORY_TINTS[layout.category_id], config)
    for cid, box in layout.other_boxes.items():
        _paint(image, box, CATEGORY_NAMES[cid], CATEGORY_TINTS[cid], config)
    for box, (texture, tint) in zip(layout.distractor_boxes, layout.distractor_styles):
        _paint(image, box, texture, DISTRACTOR_TINTS[tint], config)
    return np.clip(image, 0.0, 1.0).astype(np.float32)


def gen_scene(
    seed: int,
    category_id: int,
    tp: bool,
    config: SceneConfig | None = None,
    shared: bool = False,
) -> SyntheticScene:
    """Deterministic scene for a seed; see layout_scene for errors."""
    layout = layout_scene(seed, category_id, tp, config, shared)
    return SyntheticScene(**vars(layout), image=render_scene(layout, config))


def _box_center(box: Box) -> tuple[float, float]:
    x, y, w, h = box
    return (x + w / 2, y + h / 2)


def oracle_scanpath(
    scene: SceneLayout,
    config: OracleConfig | None = None,
    rng: np.random.Generator | None = None,
    trial_id: str | None = None,
    subject_id: str = "oracle",
    scene_config: SceneConfig | None = None,
) -> SearchTrial:
    """
    Expert scanpath: start at the center; with probability distractor_prob look
    at a random distractor first; then the target center plus Gaussian noise;
    remaining saccades hover near the target. Target-absent scenes get a tour
    of distractors.
    """
    config = config or OracleConfig()
    scene_config = scene_config or SceneConfig()
    rng = rng if rng is not None else np.random.default_rng(scene.seed)
    w, h = scene_config.width, scene_config.height

    def noisy(point: tuple[float, float], sigma: float) -> tuple[float, float]:
        x = point[0] + (rng.normal(0.0, sigma) if sigma > 0 else 0.0)
        y = point[1] + (rng.normal(0.0, sigma) if sigma > 0 else 0.0)
        return (round(float(np.clip(x, 0, w - 1)), 1), round(float(np.clip(y, 0, h - 1)), 1))

    points: list[tuple[float, float]] = []
    distractors = [_box_center(b) for b in scene.distractor_boxes]
    if scene.target_box is not None:
        if distractors and rng.random() < config.distractor_prob:
            points.append(noisy(distractors[int(rng.integers(len(distractors)))], config.noise_sigma_px))
        target = _box_center(scene.target_box)
        points.append(noisy(target, config.noise_sigma_px))
        while len(points) < config.max_saccades:
            points.append(noisy(target, config.hover_sigma_px))
    else:
        order = rng.permutation(len(distractors)) if distractors else []
        for i in order[: config.max_saccades]:
            points.append(noisy(distractors[int(i)], config.noise_sigma_px))
        while len(points) < config.max_saccades:
            points.append(noisy((rng.uniform(0, w), rng.uniform(0, h)), 0.0))

    start = (w / 2, h / 2)
    fixations = [(start[0], start[1], 0.0)] + [
        (x, y, round(float(rng.uniform(200.0, 300.0)), 1)) for x, y in points[: config.max_saccades]
    ]
    return SearchTrial(
        trial_id=trial_id or f"synthetic-{scene.seed}",
        subject_id=subject_id,
        image=ImageRef(ref=scene.ref, width=w, height=h),
        category_id=scene.category_id,
        condition="tp" if scene.tp else "ta",
        correct=True,
        target_box=scene.target_box,
        fixations=fixations,
        other_boxes=dict(scene.other_boxes),
    )


def synthetic_categories() -> list[Category]:
    return [Category(id=cid, name=name) for cid, name in sorted(CATEGORY_NAMES.items())]


def _gen_split(
    split: str,
    n: int,
    seed_base: int,
    categories: Sequence[int],
    scene_config: SceneConfig,
    oracle_config: OracleConfig,
    shared: bool,
    ta_fraction: float,
    subjects: int,
) -> DatasetManifest:
    trials: list[SearchTrial] = []
    for i in range(n):
        scene_seed = seed_base + i
        cat = categories[i % len(categories)]
        tp = np.random.default_rng((scene_seed, 2)).random() >= ta_fraction
        layout = layout_scene(scene_seed, cat, tp, scene_config, shared=shared and tp)
        for s in range(subjects):
            trials.append(
                oracle_scanpath(
                    layout,
                    oracle_config,
                    rng=np.random.default_rng((scene_seed, 3, s)),
                    trial_id=f"{split}-{i:05d}" + (f"-s{s}" if subjects > 1 else ""),
                    subject_id=f"oracle-{s}",
                    scene_config=scene_config,
                )
            )
    manifest = DatasetManifest(categories=synthetic_categories(), split=split, trials=trials)
    report = validate_manifest(manifest)
    if not report.ok:
        raise SceneGenerationError(f"generated {split} manifest failed validation: {report.errors[:3]}")
    return manifest


def gen_dataset(
    n_train: int,
    n_test: int,
    categories: Sequence[int] | None = None,
    seed: int = 0,
    scene_config: SceneConfig | None = None,
    oracle_config: OracleConfig | None = None,
    shared_test: bool = False,
    ta_fraction: float = 0.0,
    test_subjects: int = 1,
) -> tuple[DatasetManifest, DatasetManifest]:
    """
    Train and test manifests of oracle trials on synthetic scenes.

    Train scene seeds are seed + i; test scene seeds are seed + 1_000_000 + i,
    so the splits never share a scene. Categories alternate by trial index.
    """
    if n_train < 1:
        raise ValueError("n_train must be >= 1")
    if n_test < 0:
        raise ValueError("n_test must be >= 0")
    if max(n_train, n_test) >= TEST_SEED_OFFSET:
        raise ValueError(f"at most {TEST_SEED_OFFSET - 1} scenes per split")
    if not 0.0 <= ta_fraction <= 1.0:
        raise ValueError("ta_fraction must be in [0, 1]")
    categories = list(categories) if categories is not None else sorted(CATEGORY_NAMES)
    for c in categories:
        _check_category(c)
    scene_config = scene_config or SceneConfig()
    oracle_config = oracle_config or OracleConfig()

    train = _gen_split("train", n_train, seed, categories, scene_config, oracle_config, False, ta_fraction, 1)
    test = _gen_split(
        "test",
        n_test,
        seed + TEST_SEED_OFFSET,
        categories,
        scene_config,
        oracle_config,
        shared_test,
        ta_fraction,
        max(1, test_subjects),
    )
    logger.info("gen_dataset: %d train trials, %d test trials (seed=%d)", len(train.trials), len(test.trials), seed)
    return train, test


def write_dataset(
    manifests: Sequence[DatasetManifest],
    out_dir: str | Path,
    scene_config: SceneConfig | None = None,
) -> dict[str, Path]:
    """
    Render every synthetic scene to images/*.ppm, rewrite refs to those files,
    and save one manifest per split as <split>.json.
    """
    out_dir = Path(out_dir)
    written: dict[str, str] = {}
    paths: dict[str, Path] = {}
    for manifest in manifests:
        trials = []
        for trial in manifest.trials:
            ref = trial.image.ref
            if ref.startswith(SYNTHETIC_PREFIX):
                if ref not in written:
                    seed, cat, tp, shared = parse_synthetic_ref(ref)
                    name = ref[len(SYNTHETIC_PREFIX):].replace(":", "_")
                    rel = f"images/scene_{name}.ppm"
                    save_rgb(out_dir / rel, gen_scene(seed, cat, tp, scene_config, shared).image)
                    written[ref] = rel
                trial = trial.model_copy(update={"image": trial.image.model_copy(update={"ref": written[ref]})})
            trials.append(trial)
        paths[manifest.split] = save_manifest(manifest.with_trials(trials), out_dir / f"{manifest.split}.json")
    logger.info("write_dataset: %d scene images written to %s", len(written), out_dir / "images")
    return paths
