"""Pytest fixtures for Phase 1 tests."""

import copy
import json
from pathlib import Path

import pytest

FIXTURE_PATH = Path(__file__).resolve().parent / "data" / "mcs_fixture.json"


@pytest.fixture
def fixture_path():
    """Bundled 12-trial manifest: 2 categories, 2 incorrect, 1 target-present trial never fixated."""
    return FIXTURE_PATH


@pytest.fixture
def fixture_raw():
    return json.loads(FIXTURE_PATH.read_text(encoding="utf-8"))


@pytest.fixture
def raw_trial():
    """A minimal valid target-present trial in a 512x320 image."""
    return {
        "trial_id": "x1",
        "subject_id": "s1",
        "image": {"ref": "img.png", "width": 512, "height": 320},
        "category_id": 0,
        "condition": "tp",
        "correct": True,
        "target_box": [40, 40, 40, 40],
        "fixations": [[256, 160, 0], [60, 60, 200]],
    }


@pytest.fixture
def make_raw_manifest(raw_trial):
    def _make(trials=None, **top):
        raw = {
            "version": 1,
            "categories": [{"id": 0, "name": "microwave"}, {"id": 1, "name": "clock"}],
            "split": "train",
            "trials": [copy.deepcopy(raw_trial)] if trials is None else trials,
        }
        raw.update(top)
        return raw

    return _make
