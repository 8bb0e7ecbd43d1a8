"""
Evaluation settings: analysis raster, FDM smoothing, AUC variant and shuffle chance.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

AucVariant = Literal["uniform", "thresholds"]


class MetricConfig(BaseModel):
    width: int = Field(default=512, gt=0, description="Analysis raster width px")
    height: int = Field(default=320, gt=0, description="Analysis raster height px")
    deg_per_px: float = Field(default=54.0 / 512, gt=0)
    sigma_deg: float = Field(default=1.0, gt=0, description="FDM Gaussian sigma in degrees")
    auc_variant: AucVariant = "uniform"
    auc_negatives: int = Field(default=10_000, ge=1)
    auc_seed: int = Field(default=0, ge=0)
    n_saccades: int = Field(default=6, ge=1)
    shuffle_permutations: int = Field(default=100, ge=1)
    shuffle_seed: int = Field(default=0, ge=0)
    target_inflation_deg: float = Field(default=0.0, ge=0)

    @property
    def sigma_px(self) -> float:
        return self.sigma_deg / self.deg_per_px

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)
