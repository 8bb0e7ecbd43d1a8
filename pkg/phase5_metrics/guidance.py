"""
Target guidance: cumulative target-fixation curves, object baselines, slopes,
fixated-in-6 and the within-subject shuffled chance.

Trials are SearchTrial records in native image pixels. Fixation 0 is the
start; saccade k lands on fixation k. Trials with fewer than k saccades count
as misses at k.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from phase1_data_pipeline.normalizer import deg_per_native_px, point_in_box
from phase1_data_pipeline.schema import Box, SearchTrial

from .errors import MetricError

logger = logging.getLogger(__name__)


@dataclass
class GuidanceCurve:
    values: np.ndarray
    n_trials: int

    @property
    def slope(self) -> float:
        return fit_slope(self.values)


@dataclass
class SearchStats:
    fixated_in_6: float
    avg_saccades_to_target: float
    shuffled_chance: float
    n_trials: int


def _margin(trial: SearchTrial, inflation_deg: float) -> float:
    return inflation_deg / deg_per_native_px(trial) if inflation_deg else 0.0


def first_hit(
    points: Sequence[tuple[float, float]], box: Box, n_saccades: int = 6, margin: float = 0.0
) -> Optional[int]:
    """1-based saccade index of the first landing inside `box`, start excluded."""
    for k, (x, y) in enumerate(points[1 : n_saccades + 1], start=1):
        if point_in_box(x, y, box, margin):
            return k
    return None


def curve_from_hits(hits: Sequence[Optional[int]], n_saccades: int = 6) -> np.ndarray:
    first = np.array([h if h is not None else n_saccades + 1 for h in hits])
    return np.array([float(np.mean(first <= k)) for k in range(1, n_saccades + 1)])


def _target_present(trials: Sequence[SearchTrial]) -> list[SearchTrial]:
    tp = [t for t in trials if t.condition == "tp" and t.target_box is not None]
    if not tp:
        raise MetricError("no target-present trials")
    return tp


def guidance_curve(trials: Sequence[SearchTrial], n_saccades: int = 6, inflation_deg: float = 0.0) -> GuidanceCurve:
    """
    curve[k-1] = fraction of TP trials whose target box was fixated by saccade k.

    Raises:
        MetricError: no TP trials.
    """
    tp = _target_present(trials)
    hits = [first_hit(t.points, t.target_box, n_saccades, _margin(t, inflation_deg)) for t in tp]
    return GuidanceCurve(curve_from_hits(hits, n_saccades), len(tp))


def _baseline_box(trial: SearchTrial, other_category: Optional[int], boxes: Optional[Mapping[str, Box]]) -> Box:
    if boxes is not None:
        box = boxes.get(trial.trial_id)
    elif other_category is not None:
        box = trial.other_boxes.get(other_category)
    else:
        others = [b for c, b in trial.other_boxes.items() if c != trial.category_id]
        box = others[0] if len(others) == 1 else None
    if box is None:
        raise MetricError(f"trial {trial.trial_id} has no box for the baseline object")
    return box


def object_baseline_curve(
    trials: Sequence[SearchTrial],
    other_category: Optional[int] = None,
    boxes: Optional[Mapping[str, Box]] = None,
    n_saccades: int = 6,
    inflation_deg: float = 0.0,
) -> GuidanceCurve:
    """
    The guidance curve computed against a non-target object's box: `boxes`
    by trial id if given, else the trial's `other_boxes[other_category]`,
    else its single non-target entry.

    Raises:
        MetricError: no trials, or a trial without the baseline box.
    """
    if not trials:
        raise MetricError("no trials for the object baseline")
    hits = [
        first_hit(t.points, _baseline_box(t, other_category, boxes), n_saccades, _margin(t, inflation_deg))
        for t in trials
    ]
    return GuidanceCurve(curve_from_hits(hits, n_saccades), len(trials))


def fit_slope(curve: Sequence[float] | np.ndarray) -> float:
    """Least-squares slope of the curve against saccade index 1..n."""
    values = np.asarray(curve, dtype=np.float64)
    if values.ndim != 1 or values.size < 2:
        raise MetricError(f"slope needs a curve of at least 2 points, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise MetricError("slope of a curve with non-finite values")
    return float(stats.linregress(np.arange(1, values.size + 1), values).slope)


def _rescaled(points: Sequence[tuple[float, float]], src: SearchTrial, dst: SearchTrial) -> list[tuple[float, float]]:
    sx = dst.image.width / src.image.width
    sy = dst.image.height / src.image.height
    return [(x * sx, y * sy) for x, y in points]


def shuffled_guidance_curve(
    trials: Sequence[SearchTrial],
    n_saccades: int = 6,
    n_permutations: int = 100,
    seed: int = 0,
    inflation_deg: float = 0.0,
) -> GuidanceCurve:
    """
    Chance guidance: within each subject, scanpaths are permuted across that
    subject's TP images and scored against the receiving image's target.
    Mean over `n_permutations` permutations.
    """
    tp = _target_present(trials)
    by_subject: dict[str, list[int]] = defaultdict(list)
    for i, t in enumerate(tp):
        by_subject[t.subject_id].append(i)
    rng = np.random.default_rng(seed)
    curves = []
    for _ in range(n_permutations):
        hits: list[Optional[int]] = [None] * len(tp)
        for idxs in by_subject.values():
            for src, dst in zip(idxs, rng.permutation(idxs)):
                s, d = tp[src], tp[int(dst)]
                hits[src] = first_hit(_rescaled(s.points, s, d), d.target_box, n_saccades, _margin(d, inflation_deg))
        curves.append(curve_from_hits(hits, n_saccades))
    return GuidanceCurve(np.mean(curves, axis=0), len(tp))


def search_stats(
    trials: Sequence[SearchTrial],
    n_saccades: int = 6,
    n_permutations: int = 100,
    seed: int = 0,
    inflation_deg: float = 0.0,
) -> SearchStats:
    """
    Fixated-in-6, mean saccades to the target over the trials that reached
    it (NaN if none did), and the shuffled-chance fixated-in-6.

    Raises:
        MetricError: no TP trials.
    """
    tp = _target_present(trials)
    hits = [first_hit(t.points, t.target_box, n_saccades, _margin(t, inflation_deg)) for t in tp]
    reached = [h for h in hits if h is not None]
    chance = shuffled_guidance_curve(tp, n_saccades, n_permutations, seed, inflation_deg)
    result = SearchStats(
        fixated_in_6=len(reached) / len(tp),
        avg_saccades_to_target=float(np.mean(reached)) if reached else math.nan,
        shuffled_chance=float(chance.values[-1]),
        n_trials=len(tp),
    )
    logger.debug("search_stats: %s", result)
    return result
