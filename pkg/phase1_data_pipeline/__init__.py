"""
Phase 1: Data Pipeline.

Search-trial manifests (schema, loading, validation, training filter), grid
discretization, expert state-action pairs, raster I/O, and the synthetic
scene + oracle generator.
"""

from .errors import ManifestError, SceneGenerationError
from .loader import load_manifest, parse_manifest, save_manifest
from .normalizer import (
    CANVAS_H,
    CANVAS_W,
    CELL,
    GRID_COLS,
    GRID_ROWS,
    N_ACTIONS,
    cell_center,
    discretize_fixation,
    filter_training,
    target_fixated,
    validate_manifest,
)
from .pipeline import ImageResolver, export_expert_pairs, manifest_summary, run_pipeline
from .schema import Category, DatasetManifest, ExpertPair, ImageRef, SearchTrial

__all__ = [
    "CANVAS_H",
    "CANVAS_W",
    "CELL",
    "Category",
    "DatasetManifest",
    "ExpertPair",
    "GRID_COLS",
    "GRID_ROWS",
    "ImageRef",
    "ImageResolver",
    "ManifestError",
    "N_ACTIONS",
    "SceneGenerationError",
    "SearchTrial",
    "cell_center",
    "discretize_fixation",
    "export_expert_pairs",
    "filter_training",
    "load_manifest",
    "manifest_summary",
    "parse_manifest",
    "run_pipeline",
    "save_manifest",
    "target_fixated",
    "validate_manifest",
]
