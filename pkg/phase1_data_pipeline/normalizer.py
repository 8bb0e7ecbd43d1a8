"""
Normalizer: grid discretization, manifest validation rules, and the training filter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .schema import Box, DatasetManifest, SearchTrial

logger = logging.getLogger(__name__)

# Canonical analysis raster and action grid
CANVAS_W = 512
CANVAS_H = 320
CELL = 32
GRID_ROWS = CANVAS_H // CELL  # 10
GRID_COLS = CANVAS_W // CELL  # 16
N_ACTIONS = GRID_ROWS * GRID_COLS  # 160

# Test-display width: 54 degrees over 512 canvas pixels
DEFAULT_DEG_PER_PX = 54.0 / CANVAS_W

MAX_TARGET_AREA_FRACTION = 0.10


def discretize_fixation(x: float, y: float, native_w: int, native_h: int) -> int:
    """
    Grid index (row * 16 + col) of a native-pixel fixation after resizing the
    image to 512x320.

    Raises:
        ValueError: point outside [0, native_w) x [0, native_h).
    """
    if not (0 <= x < native_w and 0 <= y < native_h):
        raise ValueError(f"fixation ({x}, {y}) outside image {native_w}x{native_h}")
    col = int(math.floor(x * CANVAS_W / native_w / CELL))
    row = int(math.floor(y * CANVAS_H / native_h / CELL))
    col = min(max(col, 0), GRID_COLS - 1)
    row = min(max(row, 0), GRID_ROWS - 1)
    return row * GRID_COLS + col


def cell_center(index: int) -> tuple[int, int]:
    """Center (x, y) of a grid cell in 512x320 canvas pixels."""
    if not 0 <= index < N_ACTIONS:
        raise ValueError(f"grid index {index} outside [0, {N_ACTIONS})")
    row, col = divmod(index, GRID_COLS)
    return (col * CELL + CELL // 2, row * CELL + CELL // 2)


def deg_per_native_px(trial: SearchTrial) -> float:
    if trial.degrees_per_pixel is not None:
        return trial.degrees_per_pixel
    return DEFAULT_DEG_PER_PX * CANVAS_W / trial.image.width


def point_in_box(x: float, y: float, box: Box, margin: float = 0.0) -> bool:
    """Closed-box containment, optionally inflated by `margin` on every side."""
    bx, by, bw, bh = box
    return (bx - margin) <= x <= (bx + bw + margin) and (by - margin) <= y <= (by + bh + margin)


def target_fixated(trial: SearchTrial, inflation_deg: float = 0.0) -> bool:
    """True if any fixation (the start included) lies inside the target box."""
    if trial.target_box is None:
        return False
    margin = inflation_deg / deg_per_native_px(trial) if inflation_deg else 0.0
    return any(point_in_box(x, y, trial.target_box, margin) for x, y in trial.points)


def center_cell_box(width: float, height: float) -> Box:
    """Center cell of a 5x5 grid over the image."""
    return (2 * width / 5, 2 * height / 5, width / 5, height / 5)


def boxes_overlap(a: Box, b: Box) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def check_trial(trial: SearchTrial, category_ids: set[int]) -> ValidationReport:
    """Hard rules (errors) and dataset-selection criteria (warnings) for one trial."""
    report = ValidationReport()
    tid = trial.trial_id
    w, h = trial.image.width, trial.image.height
    if trial.category_id not in category_ids:
        report.errors.append((tid, f"unknown category_id {trial.category_id}"))
    for i, (x, y, _) in enumerate(trial.fixations):
        if not (0 <= x < w and 0 <= y < h):
            report.errors.append((tid, f"fixation {i} at ({x}, {y}) outside image {w}x{h}"))
    for cid in trial.other_boxes:
        if cid not in category_ids:
            report.errors.append((tid, f"other_boxes references unknown category {cid}"))

    if trial.condition == "tp" and trial.target_box is not None:
        _, _, bw, bh = trial.target_box
        if bw * bh >= MAX_TARGET_AREA_FRACTION * w * h:
            report.warnings.append((tid, "target area is not below 10% of the image area"))
        if boxes_overlap(trial.target_box, center_cell_box(w, h)):
            report.warnings.append((tid, "target overlaps the center cell of a 5x5 grid"))
    if trial.condition == "ta" and trial.sibling_count is not None and trial.sibling_count < 2:
        report.warnings.append((tid, f"target-absent scene has {trial.sibling_count} sibling instances (< 2)"))
    return report


def validate_manifest(manifest: DatasetManifest) -> ValidationReport:
    """Cross-trial and per-trial validation. Errors are collected, not raised."""
    report = ValidationReport()
    category_ids = {c.id for c in manifest.categories}
    if len(category_ids) != len(manifest.categories):
        report.errors.append(("<categories>", "duplicate category ids"))
    seen: set[str] = set()
    for trial in manifest.trials:
        if trial.trial_id in seen:
            report.errors.append((trial.trial_id, "duplicate trial_id"))
        seen.add(trial.trial_id)
        sub = check_trial(trial, category_ids)
        report.errors.extend(sub.errors)
        report.warnings.extend(sub.warnings)
    for tid, msg in report.warnings:
        logger.warning("validation warning: %s: %s", tid, msg)
    logger.info(
        "validate_manifest: %d trials, %d errors, %d warnings",
        len(manifest.trials),
        len(report.errors),
        len(report.warnings),
    )
    return report


def filter_training(manifest: DatasetManifest, inflation_deg: float = 0.0) -> DatasetManifest:
    """
    Keep correct trials; among target-present ones keep only those where the
    target was fixated. Idempotent.
    """
    total = len(manifest.trials)
    correct = [t for t in manifest.trials if t.correct]
    logger.info("filter_training: [audit] %d trials, %d correct", total, len(correct))
    kept = [t for t in correct if t.condition == "ta" or target_fixated(t, inflation_deg)]
    logger.info(
        "filter_training: [audit] %d retained (%d target-present never fixated dropped)",
        len(kept),
        len(correct) - len(kept),
    )
    return manifest.with_trials(kept)
