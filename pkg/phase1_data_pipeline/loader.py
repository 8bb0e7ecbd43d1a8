"""
Manifest loader: read, validate and write search-trial manifests (JSON, UTF-8).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from .errors import ManifestError
from .normalizer import validate_manifest
from .schema import SCHEMA_VERSION, Category, DatasetManifest, SearchTrial

logger = logging.getLogger(__name__)


def parse_manifest(raw: dict[str, Any]) -> DatasetManifest:
    """
    Build a fully validated manifest from decoded JSON.

    Raises:
        ManifestError: wrong schema version, malformed fields, or invariant
            violations; every violation is listed with its trial id.
    """
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    version = raw.get("version")
    if version != SCHEMA_VERSION:
        raise ManifestError(f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})")

    violations: list[tuple[str, str]] = []
    try:
        categories = [Category.model_validate(c) for c in raw.get("categories") or []]
    except ValidationError as e:
        raise ManifestError("invalid category table", [("<categories>", str(e))]) from e

    trials: list[SearchTrial] = []
    for i, item in enumerate(raw.get("trials") or []):
        tid = str(item.get("trial_id", f"<index {i}>")) if isinstance(item, dict) else f"<index {i}>"
        try:
            trials.append(SearchTrial.model_validate(item))
        except ValidationError as e:
            for err in e.errors():
                loc = ".".join(str(p) for p in err["loc"])
                violations.append((tid, f"{loc}: {err['msg']}" if loc else err["msg"]))

    try:
        manifest = DatasetManifest(
            version=version,
            categories=categories,
            split=raw.get("split", "train"),
            trials=trials,
        )
    except ValidationError as e:
        raise ManifestError("invalid manifest", violations + [("<manifest>", str(e))]) from e

    report = validate_manifest(manifest)
    violations.extend(report.errors)
    if violations:
        raise ManifestError("manifest validation failed", violations)
    return manifest


def load_manifest(path: str | Path) -> DatasetManifest:
    """
    Load and validate a manifest file.

    Raises:
        ManifestError: unreadable file, JSON parse failure, or validation errors.
    """
    path = Path(path)
    logger.info("Loading manifest %s", path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest {path} is not valid JSON: {e}") from e
    manifest = parse_manifest(raw)
    logger.info(
        "Loaded manifest %s: %d trials, %d categories, split=%s",
        path,
        len(manifest.trials),
        len(manifest.categories),
        manifest.split,
    )
    return manifest


def manifest_to_dict(manifest: DatasetManifest) -> dict[str, Any]:
    data = manifest.model_dump(mode="json")
    for trial in data["trials"]:
        # Optional fields are omitted when unset, matching hand-written manifests.
        for key in ("target_box", "degrees_per_pixel", "sibling_count"):
            if trial.get(key) is None:
                trial.pop(key, None)
        if not trial.get("other_boxes"):
            trial.pop("other_boxes", None)
    return data


def save_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest_to_dict(manifest), indent=1), encoding="utf-8")
    logger.info("Wrote manifest %s (%d trials)", path, len(manifest.trials))
    return path
