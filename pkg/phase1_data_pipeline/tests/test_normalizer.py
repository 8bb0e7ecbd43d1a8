"""Tests for discretization, validation warnings and the training filter."""

import copy
import logging

import numpy as np
import pytest

from phase1_data_pipeline.loader import load_manifest, parse_manifest
from phase1_data_pipeline.normalizer import (
    N_ACTIONS,
    cell_center,
    discretize_fixation,
    filter_training,
    target_fixated,
    validate_manifest,
)


class TestDiscretizeFixation:
    def test_corners(self):
        assert discretize_fixation(0, 0, 512, 320) == 0
        assert discretize_fixation(511, 319, 512, 320) == 159

    def test_center_is_88(self):
        assert discretize_fixation(256, 160, 512, 320) == 88
        assert discretize_fixation(512, 320, 1024, 640) == 88

    @pytest.mark.parametrize("x,y", [(-1, 0), (0, -0.5), (512, 0), (0, 320)])
    def test_out_of_bounds(self, x, y):
        with pytest.raises(ValueError):
            discretize_fixation(x, y, 512, 320)

    def test_random_matches_cell_membership_oracle(self):
        rng = np.random.default_rng(7)
        xs = rng.uniform(0, 1024, 1000)
        ys = rng.uniform(0, 640, 1000)
        for x, y in zip(xs, ys):
            # Each cell covers 64x64 native pixels at 1024x640.
            expected = [
                i
                for i in range(N_ACTIONS)
                if (i % 16) * 64 <= x < (i % 16 + 1) * 64 and (i // 16) * 64 <= y < (i // 16 + 1) * 64
            ]
            assert discretize_fixation(x, y, 1024, 640) == expected[0]

    def test_cell_center_round_trip(self):
        for i in range(N_ACTIONS):
            x, y = cell_center(i)
            assert discretize_fixation(x, y, 512, 320) == i

    def test_cell_center_values(self):
        assert cell_center(0) == (16, 16)
        assert cell_center(159) == (496, 304)
        with pytest.raises(ValueError):
            cell_center(160)


class TestFilterTraining:
    def test_fixture_keeps_nine(self, fixture_path):
        filtered = filter_training(load_manifest(fixture_path))
        ids = [t.trial_id for t in filtered.trials]
        assert len(ids) == 9
        assert not {"t05", "t06", "t07"} & set(ids)

    def test_idempotent(self, fixture_path):
        once = filter_training(load_manifest(fixture_path))
        assert filter_training(once) == once

    def test_identity_when_all_correct_and_fixated(self, fixture_path):
        manifest = filter_training(load_manifest(fixture_path))
        assert filter_training(manifest).trials == manifest.trials

    def test_inflation_margin_rescues_near_miss(self, make_raw_manifest, raw_trial):
        t = copy.deepcopy(raw_trial)
        # Box spans x 40..80; fixation 3 px to its right.
        t["fixations"] = [[256, 160, 0], [83, 60, 200]]
        manifest = parse_manifest(make_raw_manifest(trials=[t]))
        assert filter_training(manifest).trials == []
        # 1 degree at 54/512 deg/px is ~9.5 px.
        assert len(filter_training(manifest, inflation_deg=1.0).trials) == 1

    def test_start_fixation_counts_as_fixated(self, make_raw_manifest, raw_trial):
        t = copy.deepcopy(raw_trial)
        t["target_box"] = [240, 150, 40, 40]
        t["fixations"] = [[256, 160, 0], [10, 10, 200]]
        trial = parse_manifest(make_raw_manifest(trials=[t])).trials[0]
        assert target_fixated(trial)

    def test_audit_logging(self, fixture_path, caplog):
        manifest = load_manifest(fixture_path)
        with caplog.at_level(logging.INFO, logger="phase1_data_pipeline.normalizer"):
            filter_training(manifest)
        assert "[audit] 12 trials, 10 correct" in caplog.text
        assert "[audit] 9 retained" in caplog.text


class TestValidationWarnings:
    def test_fixture_warns_on_low_sibling_count(self, fixture_path):
        report = validate_manifest(load_manifest(fixture_path))
        assert report.ok
        assert any(tid == "t11" and "sibling" in msg for tid, msg in report.warnings)

    def test_large_target_warns(self, make_raw_manifest, raw_trial):
        t = copy.deepcopy(raw_trial)
        t["target_box"] = [0, 0, 200, 100]
        t["fixations"] = [[256, 160, 0], [50, 50, 200]]
        report = validate_manifest(parse_manifest(make_raw_manifest(trials=[t])))
        assert any("10%" in msg for _, msg in report.warnings)

    def test_center_target_warns(self, make_raw_manifest, raw_trial):
        t = copy.deepcopy(raw_trial)
        t["target_box"] = [240, 150, 30, 30]
        report = validate_manifest(parse_manifest(make_raw_manifest(trials=[t])))
        assert any("center cell" in msg for _, msg in report.warnings)
