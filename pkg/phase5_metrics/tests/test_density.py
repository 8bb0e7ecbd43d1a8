"""Tests for fixation-density maps, AUC, NSS and the Subject model."""

import numpy as np
import pytest

from phase5_metrics.config import MetricConfig
from phase5_metrics.density import auc, fdm, nss, subject_model_auc
from phase5_metrics.errors import MetricError

SIGMA = MetricConfig().sigma_px


def _random_points(rng, n, w=512, h=320):
    return list(zip(rng.uniform(0, w - 1, n), rng.uniform(0, h - 1, n)))


class TestFdm:
    def test_single_fixation_peak(self):
        density = fdm([(256.0, 160.0)], SIGMA)
        assert np.unravel_index(np.argmax(density), density.shape) == (160, 256)

    @pytest.mark.parametrize("shape", [(320, 512), (100, 100), (480, 640)])
    def test_sums_to_one(self, shape):
        rng = np.random.default_rng(0)
        for _ in range(5):
            density = fdm(_random_points(rng, 20, shape[1], shape[0]), SIGMA, shape)
            assert density.shape == shape
            assert abs(density.sum() - 1.0) < 1e-6
            assert density.min() >= 0.0

    def test_two_equal_maxima(self):
        density = fdm([(100.0, 160.0), (400.0, 160.0)], SIGMA)
        left, right = density[160, 100], density[160, 400]
        assert abs(left - right) < 1e-4 * max(left, right)
        for r, c in ((160, 100), (160, 400)):
            patch = density[r - 3 : r + 4, c - 3 : c + 4]
            assert density[r, c] == patch.max()

    def test_errors(self):
        with pytest.raises(MetricError):
            fdm([], SIGMA)
        with pytest.raises(MetricError):
            fdm([(10.0, 10.0)], 0.0)
        with pytest.raises(MetricError):
            fdm([(600.0, 10.0)], SIGMA)


class TestAuc:
    def test_self_prediction(self):
        points = _random_points(np.random.default_rng(1), 30)
        assert auc(fdm(points, SIGMA), points, np.random.default_rng(0)) > 0.9

    def test_uniform_map_is_chance(self):
        points = _random_points(np.random.default_rng(2), 50)
        flat = np.full((320, 512), 1.0 / (320 * 512))
        assert abs(auc(flat, points, np.random.default_rng(0), n_negatives=10_000) - 0.5) <= 0.02
        assert auc(flat, points, variant="thresholds") == pytest.approx(0.5)

    def test_all_mass_on_positive(self):
        peak = np.zeros((320, 512))
        peak[160, 256] = 1.0
        assert auc(peak, [(256.0, 160.0)], np.random.default_rng(0)) == 1.0
        assert auc(peak, [(256.0, 160.0)], variant="thresholds") == pytest.approx(1.0)

    def test_concentration_increases_auc(self):
        scores = []
        for sigma in (60.0, 20.0, 5.0):
            density = fdm([(256.0, 160.0)], sigma)
            rng = np.random.default_rng(3)
            flat = rng.choice(density.size, size=200, p=density.ravel())
            rows, cols = np.unravel_index(flat, density.shape)
            scores.append(auc(density, list(zip(cols.astype(float), rows.astype(float))), np.random.default_rng(0)))
        assert scores[0] < scores[1] < scores[2]

    def test_seeded(self):
        points = _random_points(np.random.default_rng(4), 10)
        density = fdm(_random_points(np.random.default_rng(5), 10), SIGMA)
        assert auc(density, points, np.random.default_rng(9)) == auc(density, points, np.random.default_rng(9))

    def test_errors(self):
        density = fdm([(10.0, 10.0)], SIGMA)
        with pytest.raises(MetricError):
            auc(density, [])
        with pytest.raises(MetricError):
            auc(density, [(10.0, 10.0)], variant="shuffled")


class TestNss:
    def test_peak_scores_high(self):
        density = fdm([(256.0, 160.0)], SIGMA)
        assert nss(density, [(256.0, 160.0)]) > 5.0
        assert nss(density, [(10.0, 10.0)]) < 0.0

    def test_constant_map(self):
        assert nss(np.ones((320, 512)), [(5.0, 5.0)]) == 0.0


class TestSubjectModel:
    def test_needs_two_subjects(self):
        with pytest.raises(MetricError):
            subject_model_auc({"a": [(10.0, 10.0)]}, SIGMA)

    def test_identical_subjects_match_self_prediction(self):
        points = _random_points(np.random.default_rng(6), 12)
        per_subject = {f"s{i}": points for i in range(5)}
        expected = auc(fdm(points, SIGMA), points, np.random.default_rng(0))
        assert subject_model_auc(per_subject, SIGMA, seed=0) == pytest.approx(expected, abs=1e-12)

    def test_two_subjects_mean(self):
        a = _random_points(np.random.default_rng(7), 8)
        b = _random_points(np.random.default_rng(8), 8)
        expected = (
            auc(fdm(b, SIGMA), a, np.random.default_rng(0)) + auc(fdm(a, SIGMA), b, np.random.default_rng(0))
        ) / 2
        assert subject_model_auc({"a": a, "b": b}, SIGMA) == pytest.approx(expected, abs=1e-12)

    def test_leave_one_out_loop(self):
        rng = np.random.default_rng(9)
        per_subject = {f"s{i}": _random_points(rng, 6) for i in range(5)}
        scores = []
        for held_out, own in per_subject.items():
            rest = [p for s, pts in per_subject.items() if s != held_out for p in pts]
            scores.append(auc(fdm(rest, SIGMA), own, np.random.default_rng(11)))
        assert abs(subject_model_auc(per_subject, SIGMA, seed=11) - np.mean(scores)) < 1e-6
