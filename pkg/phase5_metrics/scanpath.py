"""
MultiMatch scanpath similarity over the four spatial components.

Saccades of the two scanpaths are aligned by dynamic programming over the
saccade-vector difference, then each component is one minus the median
aligned difference over its normalizer. Fixation duration is not compared.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import MetricError

Point = tuple[float, float]


@dataclass(frozen=True)
class MultiMatchScore:
    shape: float
    direction: float
    length: float
    position: float

    @property
    def mean(self) -> float:
        return (self.shape + self.direction + self.length + self.position) / 4.0

    def as_dict(self) -> dict[str, float]:
        return {**asdict(self), "mean": self.mean}


def saccades(scanpath: Sequence[Point]) -> tuple[np.ndarray, np.ndarray]:
    """Start points and displacement vectors of consecutive fixations."""
    pts = np.asarray(scanpath, dtype=np.float64).reshape(-1, 2)
    return pts[:-1], np.diff(pts, axis=0)


def align_saccades(a: np.ndarray, b: np.ndarray) -> list[tuple[int, int]]:
    """
    Monotone alignment of two saccade-vector sequences minimizing the summed
    vector difference. Every saccade of either path is matched at least once;
    ties prefer the diagonal step.
    """
    cost = cdist(a, b)
    n, m = cost.shape
    acc = np.full((n, m), np.inf)
    acc[0, 0] = cost[0, 0]
    for i in range(n):
        for j in range(m):
            if i == 0 and j == 0:
                continue
            best = min(
                acc[i - 1, j - 1] if i and j else np.inf,
                acc[i - 1, j] if i else np.inf,
                acc[i, j - 1] if j else np.inf,
            )
            acc[i, j] = cost[i, j] + best

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while i or j:
        steps = []
        if i and j:
            steps.append((acc[i - 1, j - 1], 0, (i - 1, j - 1)))
        if i:
            steps.append((acc[i - 1, j], 1, (i - 1, j)))
        if j:
            steps.append((acc[i, j - 1], 1, (i, j - 1)))
        i, j = min(steps, key=lambda s: (s[0], s[1]))[2]
        path.append((i, j))
    return path[::-1]


def multimatch(a: Sequence[Point], b: Sequence[Point], width: int = 512, height: int = 320) -> MultiMatchScore:
    """
    Shape (vector), direction, length and position similarity in [0, 1].

    Vector differences are normalized by twice the raster diagonal, length
    and position differences by the diagonal, and angular differences by pi.

    Raises:
        MetricError: either scanpath has fewer than 2 fixations.
    """
    if len(a) < 2 or len(b) < 2:
        raise MetricError(f"MultiMatch needs at least 2 fixations per scanpath, got {len(a)} and {len(b)}")
    start_a, vec_a = saccades(a)
    start_b, vec_b = saccades(b)
    pairs = align_saccades(vec_a, vec_b)
    ia = np.array([p[0] for p in pairs])
    ib = np.array([p[1] for p in pairs])
    va, vb = vec_a[ia], vec_b[ib]
    diag = math.hypot(width, height)

    vector_diff = np.linalg.norm(va - vb, axis=1)
    angle = np.abs(np.arctan2(va[:, 1], va[:, 0]) - np.arctan2(vb[:, 1], vb[:, 0]))
    angle = np.minimum(angle, 2 * np.pi - angle)
    length_diff = np.abs(np.linalg.norm(va, axis=1) - np.linalg.norm(vb, axis=1))
    position_diff = np.linalg.norm(start_a[ia] - start_b[ib], axis=1)

    return MultiMatchScore(
        shape=float(1.0 - np.median(vector_diff) / (2 * diag)),
        direction=float(1.0 - np.median(angle) / np.pi),
        length=float(1.0 - np.median(length_diff) / diag),
        position=float(1.0 - np.median(position_diff) / diag),
    )


def mean_multimatch(
    group_a: Sequence[Sequence[Point]],
    group_b: Sequence[Sequence[Point]],
    width: int = 512,
    height: int = 320,
) -> float:
    """Mean MultiMatch `mean` over cross pairs; each unordered pair once when both groups are the same object."""
    same = group_a is group_b
    scores = [
        multimatch(pa, pb, width, height).mean
        for i, pa in enumerate(group_a)
        for j, pb in enumerate(group_b)
        if not (same and j <= i)
    ]
    if not scores:
        raise MetricError("no scanpath pairs to compare")
    return float(np.mean(scores))
