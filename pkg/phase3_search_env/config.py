"""
Retina and environment settings (pydantic models with validated ranges).
"""

from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

# 54 degrees over the 512 px canvas width.
DEFAULT_DEG_PER_PX = 54.0 / 512


class FoveationConfig(BaseModel):
    """Canvas geometry and the resolution-map constants of the blur pyramid."""

    width: int = Field(default=512, gt=0, description="Canvas width px")
    height: int = Field(default=320, gt=0, description="Canvas height px")
    fovea_radius_px: float = Field(default=16.0, gt=0, description="Half-width of the square foveal window")
    deg_per_px: float = Field(default=DEFAULT_DEG_PER_PX, gt=0)
    levels: int = Field(default=5, ge=2, le=6, description="Pyramid levels L")
    e2_deg: float = Field(default=2.3, gt=0, description="Half-resolution eccentricity")
    blend_levels: bool = Field(default=False, description="Blend the two nearest levels instead of hard quantization")

    @field_validator("width", "height")
    @classmethod
    def multiple_of_32(cls, v: int) -> int:
        if v % 32:
            raise ValueError(f"{v} is not divisible by 32")
        return v


class EnvConfig(BaseModel):
    feature_channels: int = Field(default=32, ge=1, description="Extractor output channels C")
    n_categories: int = Field(default=2, ge=1)
    new_fixations: int = Field(default=6, ge=1, le=6, description="Saccades per episode")
    inhibition_of_return: bool = False
    pool: int = Field(default=4, description="Average-pool factor before the extractor")
    foveation: FoveationConfig = Field(default_factory=FoveationConfig)

    @field_validator("pool")
    @classmethod
    def pool_divides_cell(cls, v: int) -> int:
        if v not in (1, 2, 4, 8):
            raise ValueError("pool must be 1, 2, 4 or 8")
        return v
