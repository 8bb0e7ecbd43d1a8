"""
Fixation-density maps and the map-vs-fixation scores (AUC, NSS, leave-one-out Subject model).

Points are (x, y) in analysis-raster pixels; maps are (H, W) arrays.
"""

from __future__ import annotations

import logging
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, ndimage, stats

from .config import AucVariant
from .errors import MetricError

logger = logging.getLogger(__name__)

Point = tuple[float, float]

DEFAULT_SHAPE = (320, 512)


def _pixels(points: Sequence[Point], shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    h, w = shape
    if pts.size and (np.any(pts[:, 0] < 0) or np.any(pts[:, 0] > w) or np.any(pts[:, 1] < 0) or np.any(pts[:, 1] > h)):
        raise MetricError(f"fixation outside the {w}x{h} raster")
    cols = np.clip(np.rint(pts[:, 0]).astype(np.int64), 0, w - 1)
    rows = np.clip(np.rint(pts[:, 1]).astype(np.int64), 0, h - 1)
    return rows, cols


def fdm(fixations: Sequence[Point], sigma: float, shape: tuple[int, int] = DEFAULT_SHAPE) -> np.ndarray:
    """
    Fixation-density map: a Gaussian bump of width `sigma` px at every
    fixation, normalized to sum 1.

    Raises:
        MetricError: no fixations, sigma <= 0, or a fixation off the raster.
    """
    if sigma <= 0:
        raise MetricError(f"FDM sigma must be positive, got {sigma}")
    rows, cols = _pixels(fixations, shape)
    if rows.size == 0:
        raise MetricError("FDM needs at least one fixation")
    counts = np.zeros(shape, dtype=np.float64)
    np.add.at(counts, (rows, cols), 1.0)
    density = ndimage.gaussian_filter(counts, sigma, mode="constant")
    return density / density.sum()


def _rank_auc(positives: np.ndarray, negatives: np.ndarray) -> float:
    """P(pos > neg) + 0.5 P(pos == neg) via the rank-sum statistic."""
    n_p, n_n = positives.size, negatives.size
    ranks = stats.rankdata(np.concatenate([positives, negatives]))
    u = ranks[:n_p].sum() - n_p * (n_p + 1) / 2.0
    return float(u / (n_p * n_n))


def _threshold_auc(prediction: np.ndarray, positives: np.ndarray, background: np.ndarray) -> float:
    thresholds = np.unique(positives)[::-1]
    tp = np.array([np.mean(positives >= t) for t in thresholds])
    fp = np.array([np.mean(background >= t) for t in thresholds])
    tp = np.concatenate([[0.0], tp, [1.0]])
    fp = np.concatenate([[0.0], fp, [1.0]])
    return float(integrate.trapezoid(tp, fp))


def auc(
    prediction: np.ndarray,
    positives: Sequence[Point],
    rng: Optional[np.random.Generator] = None,
    variant: AucVariant = "uniform",
    n_negatives: int = 10_000,
) -> float:
    """
    ROC area of `prediction` separating fixated pixels from the rest.

    `uniform` draws `n_negatives` non-fixated pixels uniformly (with
    replacement); `thresholds` sweeps a threshold at every positive value
    and counts every non-fixated pixel above it. 0.5 is chance.

    Raises:
        MetricError: no positives, or no non-fixated pixel left.
    """
    pred = np.asarray(prediction, dtype=np.float64)
    rows, cols = _pixels(positives, pred.shape)
    if rows.size == 0:
        raise MetricError("AUC needs at least one positive fixation")
    pos = pred[rows, cols]
    fixated = np.zeros(pred.shape, dtype=bool)
    fixated[rows, cols] = True
    if fixated.all():
        raise MetricError("every pixel is fixated; no negatives to sample")
    if variant == "uniform":
        rng = rng if rng is not None else np.random.default_rng(0)
        candidates = np.flatnonzero(~fixated)
        neg = pred.ravel()[rng.choice(candidates, size=n_negatives, replace=True)]
        return _rank_auc(pos, neg)
    if variant == "thresholds":
        return _threshold_auc(pred, pos, pred[~fixated])
    raise MetricError(f"unknown AUC variant {variant!r}")


def nss(prediction: np.ndarray, positives: Sequence[Point]) -> float:
    """Mean of the z-scored map at the fixated pixels; 0 for a constant map."""
    pred = np.asarray(prediction, dtype=np.float64)
    rows, cols = _pixels(positives, pred.shape)
    if rows.size == 0:
        raise MetricError("NSS needs at least one positive fixation")
    std = pred.std()
    if std == 0:
        return 0.0
    return float(((pred - pred.mean()) / std)[rows, cols].mean())


def subject_model_auc(
    per_subject: Mapping[str, Sequence[Point]],
    sigma: float,
    shape: tuple[int, int] = DEFAULT_SHAPE,
    variant: AucVariant = "uniform",
    n_negatives: int = 10_000,
    seed: int = 0,
) -> float:
    """
    Leave-one-out noise ceiling: each subject's fixations scored against the
    FDM of every other subject, averaged over subjects. Each subject's AUC
    uses a fresh generator seeded with `seed`.

    Raises:
        MetricError: fewer than two subjects, or a subject with no fixations.
    """
    if len(per_subject) < 2:
        raise MetricError(f"Subject model needs at least 2 subjects, got {len(per_subject)}")
    subjects = list(per_subject)
    scores = []
    for s in subjects:
        own = list(per_subject[s])
        if not own:
            raise MetricError(f"subject {s!r} has no fixations")
        others = [p for o in subjects if o != s for p in per_subject[o]]
        density = fdm(others, sigma, shape)
        scores.append(auc(density, own, np.random.default_rng(seed), variant, n_negatives))
    logger.debug("subject_model_auc: %d subjects, per-subject %s", len(subjects), np.round(scores, 4).tolist())
    return float(np.mean(scores))
