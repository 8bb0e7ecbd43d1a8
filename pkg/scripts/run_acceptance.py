#!/usr/bin/env python3
"""
Closed-loop acceptance run on synthetic scenes: synth -> train -> eval, then
check that the trained policy searches far better than an untrained one.
Run from project root: python scripts/run_acceptance.py --out runs/acceptance
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable

import pandas as pd

# Project root
ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from phase1_data_pipeline.loader import load_manifest  # noqa: E402
from phase5_metrics.guidance import search_stats  # noqa: E402
from phase6_cli.__main__ import main as cli  # noqa: E402

Check = Callable[[], tuple[bool, str]]


def _run(*argv: str) -> None:
    code = cli(list(argv))
    if code != 0:
        raise RuntimeError(f"search-irl {argv[0]} exited with {code}")


def _summary(path: Path) -> dict[str, Any]:
    return json.loads((path / "summary.json").read_text(encoding="utf-8"))


def _model_stats(summary: dict[str, Any]) -> list[dict[str, Any]]:
    return [cat["model"] for cat in summary["categories"].values() if "fixated_in_6" in cat.get("model", {})]


def _curve_end(curves: pd.DataFrame, source: str, category: str) -> float:
    rows = curves[(curves["source"] == source) & (curves["category"] == category)]
    return float(rows.sort_values("saccade")["value"].iloc[-1]) if len(rows) else float("nan")


def run(out: Path, seed: int, jobs: int, iterations: int | None, episodes: int | None) -> dict[str, Check]:
    common = ["--seed", str(seed), "--jobs", str(jobs)]
    data, untrained, trained = out / "data", out / "untrained", out / "train"
    _run("synth", "--n-train", "400", "--n-test", "100", "--shared", "--out", str(data), *common)
    train_json, test_json = str(data / "train.json"), str(data / "test.json")

    budget = []
    if iterations is not None:
        budget += ["--iterations", str(iterations)]
    if episodes is not None:
        budget += ["--episodes", str(episodes)]
    _run("train", "--manifest", train_json, "--iterations", "0", "--out", str(untrained), *common)
    _run("train", "--manifest", train_json, "--out", str(trained), *budget, *common)
    _run("eval", "--manifest", test_json, "--checkpoint", str(untrained), "--out", str(out / "eval_untrained"), *common)
    _run("eval", "--manifest", test_json, "--checkpoint", str(trained), "--out", str(out / "eval"), *common)
    for name in ("report_a", "report_b"):
        _run("report", "--manifest", train_json, "--manifest", test_json, "--out", str(out / name), *common)

    trained_stats = _model_stats(_summary(out / "eval"))
    untrained_stats = _model_stats(_summary(out / "eval_untrained"))
    train_summary = json.loads((trained / "train_summary.json").read_text(encoding="utf-8"))
    curves = pd.read_csv(out / "eval" / "curves.csv")

    def oracle() -> tuple[bool, str]:
        value = search_stats(load_manifest(train_json).trials).fixated_in_6
        return value >= 0.95, f"oracle fixated-in-6 {value:.3f} (>= 0.95)"

    def fixated() -> tuple[bool, str]:
        values = [s["fixated_in_6"] for s in trained_stats]
        return bool(values) and min(values) >= 0.60, f"trained fixated-in-6 {values} (>= 0.60)"

    def slope() -> tuple[bool, str]:
        pairs = [(s["target_slope"], s.get("shuffled_slope", float("nan"))) for s in trained_stats]
        ok = bool(pairs) and all(t >= 3 * c for t, c in pairs)
        return ok, "target vs shuffled slope " + ", ".join(f"{t:.3f}/{c:.3f}" for t, c in pairs) + " (>= 3x)"

    def chance() -> tuple[bool, str]:
        values = [s["fixated_in_6"] for s in untrained_stats]
        return bool(values) and max(values) <= 0.15, f"untrained fixated-in-6 {values} (<= 0.15)"

    def discriminator() -> tuple[bool, str]:
        acc = train_summary.get("disc_accuracy")
        return acc is not None and abs(acc - 0.5) <= 0.15, f"final discriminator accuracy {acc} (0.5 +- 0.15)"

    def specificity() -> tuple[bool, str]:
        ratios = {}
        for category in sorted(curves["category"].unique()):
            target = _curve_end(curves, "model", category)
            other = _curve_end(curves, "model_baseline", category)
            ratios[category] = target / other if other > 0 else float("inf")
        ok = bool(ratios) and all(r >= 2.0 for r in ratios.values())
        return ok, "target/other-object fixation ratio " + ", ".join(f"{k}={v:.2f}" for k, v in ratios.items())

    def determinism() -> tuple[bool, str]:
        same = (out / "report_a" / "report.csv").read_bytes() == (out / "report_b" / "report.csv").read_bytes()
        return same, "repeated report byte-identical"

    return {
        "Oracle expert": oracle,
        "Trained fixated-in-6": fixated,
        "Guidance above chance": slope,
        "Untrained near chance": chance,
        "Discriminator balance": discriminator,
        "Category specificity": specificity,
        "Determinism": determinism,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description="Synthetic acceptance run: synth -> train -> eval and checks.")
    parser.add_argument("--out", default="runs/acceptance", help="Run directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--iterations", type=int, default=None, help="GAIL iterations (default: config default)")
    parser.add_argument("--episodes", type=int, default=None, help="Episodes per iteration")
    args = parser.parse_args()

    print("Running synthetic acceptance...")
    checks = run(Path(args.out), args.seed, args.jobs, args.iterations, args.episodes)
    failed = []
    for name, fn in checks.items():
        ok, detail = fn()
        print(f"  {name}: {'OK' if ok else 'FAILED'}  {detail}")
        if not ok:
            failed.append(name)
    if failed:
        print("\nFailed:", ", ".join(failed))
        return 1
    print("\nAll acceptance checks passed.")
    return 0


if __name__ == "__main__":
    sys.exit(main())
