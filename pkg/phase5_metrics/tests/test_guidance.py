"""Tests for guidance curves, object baselines, slopes and search statistics."""

import math

import numpy as np
import pytest

from phase1_data_pipeline.synth import gen_dataset
from phase5_metrics.errors import MetricError
from phase5_metrics.guidance import (
    fit_slope,
    guidance_curve,
    object_baseline_curve,
    search_stats,
    shuffled_guidance_curve,
)

START = (256.0, 160.0)
FAR = (500.0, 300.0)
BOXES = [(20.0, 20.0, 40.0, 40.0), (420.0, 20.0, 40.0, 40.0), (20.0, 240.0, 40.0, 40.0), (420.0, 240.0, 40.0, 40.0)]


def _center(box):
    return (box[0] + box[2] / 2, box[1] + box[3] / 2)


class TestGuidanceCurve:
    def test_first_saccade_on_target(self, make_trial):
        trials = [
            make_trial([START, _center(b)] + [FAR] * 5, target_box=b, trial_id=f"t{i}") for i, b in enumerate(BOXES)
        ]
        np.testing.assert_array_equal(guidance_curve(trials).values, np.ones(6))

    def test_never_fixated(self, make_trial):
        trials = [make_trial([START] + [FAR] * 6, target_box=b, trial_id=f"t{i}") for i, b in enumerate(BOXES)]
        np.testing.assert_array_equal(guidance_curve(trials).values, np.zeros(6))

    def test_start_fixation_excluded(self, make_trial):
        box = (236.0, 140.0, 40.0, 40.0)
        curve = guidance_curve([make_trial([START] + [FAR] * 6, target_box=box)])
        assert curve.values.sum() == 0.0

    def test_short_trials_count_as_misses(self, make_trial):
        box = BOXES[0]
        trials = [
            make_trial([START, FAR], target_box=box, trial_id="short"),
            make_trial([START, FAR, FAR, _center(box)], target_box=box, trial_id="late"),
        ]
        np.testing.assert_allclose(guidance_curve(trials).values, [0, 0, 0.5, 0.5, 0.5, 0.5])

    def test_monotone_on_random_sets(self, make_trial):
        rng = np.random.default_rng(0)
        for s in range(1000):
            trials = []
            for i in range(int(rng.integers(1, 6))):
                n = int(rng.integers(1, 7))
                points = [START] + list(zip(rng.uniform(0, 511, n), rng.uniform(0, 319, n)))
                x, y = rng.uniform(0, 400), rng.uniform(0, 250)
                trials.append(make_trial(points, target_box=(x, y, 100.0, 60.0), trial_id=f"{s}-{i}"))
            values = guidance_curve(trials).values
            assert np.all(np.diff(values) >= 0)
            assert values.min() >= 0.0 and values.max() <= 1.0

    def test_target_absent_only(self, make_trial):
        with pytest.raises(MetricError):
            guidance_curve([make_trial([START, FAR], target_box=None)])

    def test_inflation(self, make_trial):
        box = BOXES[0]
        near = (box[0] + box[2] + 5.0, box[1] + 5.0)
        trial = make_trial([START, near], target_box=box)
        assert guidance_curve([trial]).values[0] == 0.0
        assert guidance_curve([trial], inflation_deg=1.0).values[0] == 1.0


class TestObjectBaseline:
    def test_against_target_box_equals_guidance(self, make_trial):
        rng = np.random.default_rng(1)
        paths = [[START] + list(zip(rng.uniform(0, 511, 6), rng.uniform(0, 319, 6))) for _ in BOXES]
        trials = [make_trial(p, target_box=b, trial_id=f"t{i}") for i, (p, b) in enumerate(zip(paths, BOXES))]
        baseline = object_baseline_curve(trials, boxes={t.trial_id: t.target_box for t in trials})
        np.testing.assert_array_equal(baseline.values, guidance_curve(trials).values)

    def test_distractor_never_fixated(self, make_trial):
        trials = [
            make_trial([START, _center(BOXES[0])] + [FAR] * 5, target_box=BOXES[0], other_boxes={1: BOXES[3]}),
        ]
        np.testing.assert_array_equal(object_baseline_curve(trials).values, np.zeros(6))
        np.testing.assert_array_equal(object_baseline_curve(trials, other_category=1).values, np.zeros(6))

    def test_other_object_fixated(self, make_trial):
        trial = make_trial([START, FAR, _center(BOXES[2])], target_box=BOXES[0], other_boxes={1: BOXES[2]})
        np.testing.assert_array_equal(object_baseline_curve([trial]).values, [0, 1, 1, 1, 1, 1])

    def test_missing_box(self, make_trial):
        trial = make_trial([START, FAR], target_box=BOXES[0])
        with pytest.raises(MetricError):
            object_baseline_curve([trial])
        with pytest.raises(MetricError):
            object_baseline_curve([trial], other_category=1)


class TestFitSlope:
    def test_linear(self):
        assert fit_slope([0.1 * k for k in range(1, 7)]) == pytest.approx(0.1)

    def test_constant(self):
        assert fit_slope([0.4] * 6) == pytest.approx(0.0, abs=1e-12)

    def test_shift_invariant(self):
        curve = np.array([0.2, 0.35, 0.5, 0.55, 0.6, 0.62])
        assert fit_slope(curve + 0.3) == pytest.approx(fit_slope(curve))

    def test_degenerate(self):
        with pytest.raises(MetricError):
            fit_slope([0.5])
        with pytest.raises(MetricError):
            fit_slope([0.1, math.nan, 0.3])


class TestSearchStats:
    def test_all_first_saccade_hits(self, make_trial):
        trials = [
            make_trial([START, _center(b)] + [FAR] * 5, target_box=b, trial_id=f"t{i}", ref=f"img{i}.png")
            for i, b in enumerate(BOXES)
        ]
        stats = search_stats(trials)
        assert stats.fixated_in_6 == 1.0
        assert stats.avg_saccades_to_target == 1.0
        assert stats.shuffled_chance < 1.0
        assert stats.n_trials == 4

    def test_identical_images_chance_equals_accuracy(self, make_trial):
        box = BOXES[1]
        paths = [[START, _center(box)], [START, FAR, FAR], [START, FAR, _center(box)], [START, FAR]]
        trials = [make_trial(p, target_box=box, trial_id=f"t{i}") for i, p in enumerate(paths)]
        stats = search_stats(trials, n_permutations=20)
        assert stats.fixated_in_6 == 0.5
        assert stats.shuffled_chance == pytest.approx(stats.fixated_in_6)
        assert stats.avg_saccades_to_target == 1.5

    def test_no_hits(self, make_trial):
        stats = search_stats([make_trial([START, FAR], target_box=BOXES[0])])
        assert stats.fixated_in_6 == 0.0
        assert math.isnan(stats.avg_saccades_to_target)

    def test_shuffle_stays_within_subject(self, make_trial):
        trials = [
            make_trial([START, _center(b)], target_box=b, trial_id=f"t{i}", subject_id=f"s{i}")
            for i, b in enumerate(BOXES)
        ]
        np.testing.assert_array_equal(shuffled_guidance_curve(trials, n_permutations=5).values, np.ones(6))

    def test_shuffle_rescales_between_image_sizes(self, make_trial):
        small = make_trial([(128.0, 80.0), (20.0, 20.0)], target_box=(10.0, 10.0, 20.0, 20.0), width=256, height=160)
        large = make_trial([START, (40.0, 40.0)], target_box=(20.0, 20.0, 40.0, 40.0), trial_id="t2", ref="big.png")
        np.testing.assert_array_equal(shuffled_guidance_curve([small, large], n_permutations=8).values, np.ones(6))


class TestOracleGuidance:
    @pytest.mark.slow
    def test_oracle_slope_far_above_shuffled_chance(self):
        train, _ = gen_dataset(500, 0, seed=11)
        target = guidance_curve(train.trials)
        chance = shuffled_guidance_curve(train.trials, n_permutations=20, seed=11)
        assert target.n_trials == 500
        assert fit_slope(target.values) > 0
        assert fit_slope(target.values) >= 5 * fit_slope(chance.values)
