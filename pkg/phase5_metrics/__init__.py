"""
Phase 5: Evaluation metrics.

Fixation-density maps, AUC/NSS, MultiMatch, target-guidance curves, policy
evaluation and the behavioral summary table.
"""

from .config import MetricConfig
from .density import auc, fdm, nss, subject_model_auc
from .errors import MetricError
from .evaluation import Evaluation, evaluate_policy, sample_model_trials
from .guidance import (
    GuidanceCurve,
    SearchStats,
    fit_slope,
    guidance_curve,
    object_baseline_curve,
    search_stats,
    shuffled_guidance_curve,
)
from .report import format_table_one, table_one, write_report
from .scanpath import MultiMatchScore, mean_multimatch, multimatch

__all__ = [
    "Evaluation",
    "GuidanceCurve",
    "MetricConfig",
    "MetricError",
    "MultiMatchScore",
    "SearchStats",
    "auc",
    "evaluate_policy",
    "fdm",
    "fit_slope",
    "format_table_one",
    "guidance_curve",
    "mean_multimatch",
    "multimatch",
    "nss",
    "object_baseline_curve",
    "sample_model_trials",
    "search_stats",
    "shuffled_guidance_curve",
    "subject_model_auc",
    "table_one",
    "write_report",
]
