"""Tests for policy evaluation on synthetic test trials."""

import json
import logging

import numpy as np
import pandas as pd

from phase5_metrics.evaluation import CURVE_COLUMNS, METRIC_COLUMNS, evaluate_policy
from phase5_metrics.guidance import guidance_curve


class TestEvaluatePolicy:
    def test_tables_and_files(self, nets, eval_manifest, images, metric_config, tmp_path):
        result = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config, out_dir=tmp_path)
        for name in ("metrics.csv", "curves.csv", "summary.json"):
            assert (tmp_path / name).exists()

        metrics = result.metrics
        assert {"model_auc", "model_nss", "subject_auc", "mm_model_human", "mm_human_human"} <= set(metrics["metric"])
        assert metrics.groupby(["image", "category_id"]).ngroups == 5
        aucs = metrics.loc[metrics["metric"].isin(["model_auc", "subject_auc"]), "value"]
        assert aucs.between(0.0, 1.0).all()
        assert (metrics["sigma_deg"] == 1.0).all()

        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["n_trials"] == 15
        assert summary["auc_variant"] == "uniform"
        assert set(summary["categories"]) == {"checker", "rings"}
        assert 0.0 <= summary["categories"]["rings"]["model"]["fixated_in_6"] <= 1.0

    def test_curves(self, nets, eval_manifest, images, metric_config):
        curves = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config).curves
        assert {"human", "model", "human_shuffled", "model_shuffled"} <= set(curves["source"])
        for _, group in curves.groupby(["category_id", "source"]):
            assert group["saccade"].tolist() == [1, 2, 3, 4, 5, 6]
            assert np.all(np.diff(group["value"].to_numpy()) >= 0)
        human = curves[(curves["source"] == "human") & (curves["category_id"] == 0)]["value"].to_numpy()
        expected = guidance_curve([t for t in eval_manifest.trials if t.category_id == 0]).values
        np.testing.assert_allclose(human, expected)

    def test_one_model_scanpath_per_trial(self, nets, eval_manifest, images, metric_config):
        result = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config)
        assert len(result.model_trials) == len(eval_manifest.trials)
        for human, model in zip(eval_manifest.trials, result.model_trials):
            assert model.subject_id == "model"
            assert model.image == human.image and model.category_id == human.category_id
            assert len(model.fixations) == 7
            assert model.start == (256.0, 160.0)

    def test_deterministic(self, nets, eval_manifest, images, metric_config):
        a = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config, seed=4)
        b = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config, seed=4, jobs=2)
        pd.testing.assert_frame_equal(a.metrics, b.metrics)
        pd.testing.assert_frame_equal(a.curves, b.curves)

    def test_zero_trials(self, nets, eval_manifest, images, metric_config, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            result = evaluate_policy(
                nets.env, nets.policy, eval_manifest, images, metric_config, out_dir=tmp_path, categories=[7]
            )
        assert "0 test trials" in caplog.text
        assert result.metrics.empty and list(result.metrics.columns) == METRIC_COLUMNS
        assert result.curves.empty and list(result.curves.columns) == CURVE_COLUMNS
        assert (tmp_path / "metrics.csv").exists()

    def test_category_filter(self, nets, eval_manifest, images, metric_config):
        result = evaluate_policy(nets.env, nets.policy, eval_manifest, images, metric_config, categories=[1])
        assert set(result.metrics["category_id"]) == {1}
        assert result.summary["n_trials"] == 6

    def test_map_export(self, nets, eval_manifest, images, metric_config, tmp_path):
        ref = eval_manifest.trials[0].image.ref
        evaluate_policy(
            nets.env, nets.policy, eval_manifest, images, metric_config, out_dir=tmp_path, map_images=[ref, "unknown"]
        )
        csvs = list((tmp_path / "saccade_maps").glob("*.csv"))
        assert len(csvs) == 1
        smap = np.loadtxt(csvs[0], delimiter=",")
        assert smap.shape == (10, 16)
        assert abs(smap.sum() - 1.0) < 1e-4
        assert len(list((tmp_path / "saccade_maps").glob("*.png"))) == 1
        assert len(list((tmp_path / "fdms").glob("*.png"))) == 2
