"""Tests for manifest loading, validation and saving."""

import copy
import json

import pytest

from phase1_data_pipeline.errors import ManifestError
from phase1_data_pipeline.loader import load_manifest, parse_manifest, save_manifest


class TestLoadManifest:
    def test_fixture_counts(self, fixture_path):
        manifest = load_manifest(fixture_path)
        assert len(manifest.trials) == 12
        assert len(manifest.categories) == 2
        assert manifest.category_names == {0: "microwave", 1: "clock"}
        assert manifest.split == "train"

    def test_empty_trial_list_is_valid(self, make_raw_manifest):
        manifest = parse_manifest(make_raw_manifest(trials=[]))
        assert manifest.trials == []

    def test_fixation_out_of_bounds_names_trial(self, make_raw_manifest, raw_trial):
        bad = copy.deepcopy(raw_trial)
        bad["trial_id"] = "bad-x"
        bad["fixations"][1] = [-3, 60, 200]
        with pytest.raises(ManifestError) as exc:
            parse_manifest(make_raw_manifest(trials=[bad]))
        assert exc.value.violations
        assert exc.value.violations[0][0] == "bad-x"
        assert "bad-x" in str(exc.value)

    def test_version_mismatch(self, make_raw_manifest):
        with pytest.raises(ManifestError, match="version"):
            parse_manifest(make_raw_manifest(version=2))

    def test_not_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ManifestError, match="not valid JSON"):
            load_manifest(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="cannot read"):
            load_manifest(tmp_path / "missing.json")

    def test_unknown_category_and_duplicate_ids_collected(self, make_raw_manifest, raw_trial):
        a = copy.deepcopy(raw_trial)
        b = copy.deepcopy(raw_trial)
        b["category_id"] = 7
        with pytest.raises(ManifestError) as exc:
            parse_manifest(make_raw_manifest(trials=[a, b]))
        messages = [m for _, m in exc.value.violations]
        assert any("duplicate trial_id" in m for m in messages)
        assert any("unknown category_id 7" in m for m in messages)

    def test_tp_without_box_rejected(self, make_raw_manifest, raw_trial):
        bad = copy.deepcopy(raw_trial)
        del bad["target_box"]
        with pytest.raises(ManifestError) as exc:
            parse_manifest(make_raw_manifest(trials=[bad]))
        assert "target_box" in str(exc.value)

    def test_ta_with_box_rejected(self, make_raw_manifest, raw_trial):
        bad = copy.deepcopy(raw_trial)
        bad["condition"] = "ta"
        with pytest.raises(ManifestError):
            parse_manifest(make_raw_manifest(trials=[bad]))

    def test_two_value_fixations_get_zero_duration(self, make_raw_manifest, raw_trial):
        t = copy.deepcopy(raw_trial)
        t["fixations"] = [[256, 160], [60, 60]]
        manifest = parse_manifest(make_raw_manifest(trials=[t]))
        assert manifest.trials[0].fixations[1] == (60.0, 60.0, 0.0)

    def test_all_violations_reported_not_just_first(self, make_raw_manifest, raw_trial):
        trials = []
        for i in range(3):
            t = copy.deepcopy(raw_trial)
            t["trial_id"] = f"b{i}"
            t["fixations"][0] = [9999, 0, 0]
            trials.append(t)
        with pytest.raises(ManifestError) as exc:
            parse_manifest(make_raw_manifest(trials=trials))
        assert {tid for tid, _ in exc.value.violations} == {"b0", "b1", "b2"}


class TestSaveManifest:
    def test_save_then_load_is_equal(self, fixture_path, tmp_path):
        manifest = load_manifest(fixture_path)
        path = save_manifest(manifest, tmp_path / "out" / "copy.json")
        assert load_manifest(path) == manifest

    def test_optional_fields_omitted(self, fixture_path, tmp_path):
        manifest = load_manifest(fixture_path)
        path = save_manifest(manifest, tmp_path / "copy.json")
        raw = json.loads(path.read_text(encoding="utf-8"))
        t06 = next(t for t in raw["trials"] if t["trial_id"] == "t06")
        assert "target_box" not in t06
        assert "other_boxes" not in t06
        t01 = next(t for t in raw["trials"] if t["trial_id"] == "t01")
        assert t01["other_boxes"] == {"1": [100.0, 400.0, 60.0, 60.0]}
