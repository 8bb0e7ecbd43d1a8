"""
Manifest schema: validated search trials, categories and expert state-action pairs.
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1

Box = Tuple[float, float, float, float]


class ImageRef(BaseModel):
    """Image reference with native pixel size."""

    model_config = ConfigDict(frozen=True)

    ref: str = Field(min_length=1, description="Path (relative to the manifest) or synthetic id")
    width: int = Field(gt=0)
    height: int = Field(gt=0)


class Category(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int = Field(ge=0)
    name: str = Field(min_length=1)


def _check_box(box: Optional[Box]) -> Optional[Box]:
    if box is None:
        return None
    x, y, w, h = box
    if w <= 0 or h <= 0:
        raise ValueError(f"box {list(box)} must have positive width and height")
    return (float(x), float(y), float(w), float(h))


class SearchTrial(BaseModel):
    """One behavioral or generated search trial. Coordinates are native pixels."""

    model_config = ConfigDict(frozen=True)

    trial_id: str
    subject_id: str
    image: ImageRef
    category_id: int = Field(ge=0)
    condition: Literal["tp", "ta"]
    correct: bool
    target_box: Optional[Box] = None
    fixations: List[Tuple[float, float, float]] = Field(min_length=1)
    degrees_per_pixel: Optional[float] = Field(default=None, gt=0)
    other_boxes: Dict[int, Box] = Field(default_factory=dict)
    sibling_count: Optional[int] = Field(default=None, ge=0)

    @field_validator("trial_id", "subject_id", mode="before")
    @classmethod
    def coerce_id(cls, v: Any) -> str:
        if v is None or (isinstance(v, str) and not v.strip()):
            raise ValueError("id must be non-empty")
        return str(v).strip()

    @field_validator("fixations", mode="before")
    @classmethod
    def coerce_fixations(cls, v: Any) -> Any:
        # [x, y] is accepted with an unknown (zero) duration.
        if isinstance(v, list):
            return [list(f) + [0.0] if isinstance(f, (list, tuple)) and len(f) == 2 else f for f in v]
        return v

    @field_validator("target_box")
    @classmethod
    def check_target_box(cls, v: Optional[Box]) -> Optional[Box]:
        return _check_box(v)

    @field_validator("other_boxes")
    @classmethod
    def check_other_boxes(cls, v: Dict[int, Box]) -> Dict[int, Box]:
        return {k: _check_box(b) for k, b in v.items()}

    @model_validator(mode="after")
    def check_condition_box(self) -> "SearchTrial":
        if self.condition == "tp" and self.target_box is None:
            raise ValueError("target-present trial needs a target_box")
        if self.condition == "ta" and self.target_box is not None:
            raise ValueError("target-absent trial must not carry a target_box")
        return self

    @property
    def start(self) -> Tuple[float, float]:
        x, y, _ = self.fixations[0]
        return (x, y)

    @property
    def points(self) -> List[Tuple[float, float]]:
        return [(x, y) for x, y, _ in self.fixations]


class DatasetManifest(BaseModel):
    """A validated list of trials with its category table."""

    model_config = ConfigDict(frozen=True)

    version: int = SCHEMA_VERSION
    categories: List[Category]
    split: Literal["train", "test"] = "train"
    trials: List[SearchTrial] = Field(default_factory=list)

    @property
    def category_names(self) -> dict[int, str]:
        return {c.id: c.name for c in self.categories}

    def with_trials(self, trials: List[SearchTrial]) -> "DatasetManifest":
        return self.model_copy(update={"trials": list(trials)})


class ExpertPair(BaseModel):
    """A fixation prefix (the state) and the grid cell fixated next (the action)."""

    model_config = ConfigDict(frozen=True)

    trial_id: str
    step: int = Field(ge=0, le=5)
    image: ImageRef
    category_id: int
    prefix: List[Tuple[float, float]] = Field(min_length=1)
    action: int = Field(ge=0, le=159)
