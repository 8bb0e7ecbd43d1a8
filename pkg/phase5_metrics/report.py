"""
Behavioral summary laid out like the dataset's descriptive table: error rate
and mean (SD) number of fixations per category x condition, one column group
per split.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from phase1_data_pipeline.pipeline import manifest_summary
from phase1_data_pipeline.schema import DatasetManifest

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ["split", "category", "condition", "n_trials", "error_pct", "mean_fixations", "sd_fixations"]


def table_one(manifests: Sequence[DatasetManifest], inflation_deg: float = 0.0) -> pd.DataFrame:
    """
    One row per split x category x condition. Errors are the percentage of
    incorrect trials; fixation counts include the start fixation and are
    taken over correct trials only (SD with ddof=1, NaN below 2 trials).
    """
    frames = [manifest_summary(m, inflation_deg) for m in manifests]
    trials = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    if trials.empty:
        logger.warning("table_one: no trials")
        return pd.DataFrame(columns=TABLE_COLUMNS)

    rows = []
    for (split, category, condition), group in trials.groupby(["split", "category", "condition"], sort=True):
        correct = group.loc[group["correct"], "n_fixations"]
        rows.append(
            {
                "split": split,
                "category": category,
                "condition": condition,
                "n_trials": len(group),
                "error_pct": 100.0 * (1.0 - group["correct"].mean()),
                "mean_fixations": float(correct.mean()) if len(correct) else np.nan,
                "sd_fixations": float(correct.std(ddof=1)) if len(correct) > 1 else np.nan,
            }
        )
    logger.info("table_one: [audit] %d trials -> %d cells", len(trials), len(rows))
    return pd.DataFrame(rows, columns=TABLE_COLUMNS)


def _cell(row: pd.Series) -> str:
    mean = "-" if pd.isna(row["mean_fixations"]) else f"{row['mean_fixations']:.2f}"
    sd = "-" if pd.isna(row["sd_fixations"]) else f"{row['sd_fixations']:.2f}"
    return f"{row['error_pct']:.0f}% | {mean} ({sd})"


def format_table_one(table: pd.DataFrame) -> str:
    """Text table: rows category x condition, a column per split with `errors% | mean (SD)`."""
    if table.empty:
        return "(no trials)"
    cells = table.assign(cell=table.apply(_cell, axis=1), condition=table["condition"].str.upper())
    wide = cells.pivot(index=["category", "condition"], columns="split", values="cell").fillna("")
    wide.columns.name = None
    header = "errors % | fixations mean (SD), correct trials, start fixation included"
    return header + "\n" + wide.to_string()


def write_report(table: pd.DataFrame, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    txt_path = out / "report.txt"
    table.to_csv(csv_path, index=False, float_format="%.4f")
    txt_path.write_text(format_table_one(table) + "\n", encoding="utf-8")
    return csv_path, txt_path
