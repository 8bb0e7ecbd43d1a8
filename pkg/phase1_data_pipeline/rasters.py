"""
Raster I/O: 8-bit RGB/grayscale images in, float32 arrays in [0, 1] out.

PPM/PGM/PNG are chosen by file suffix (Pillow handles all three).
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
from PIL import Image

from .normalizer import CANVAS_H, CANVAS_W

logger = logging.getLogger(__name__)


def load_image(path: str | Path, width: int = CANVAS_W, height: int = CANVAS_H) -> np.ndarray:
    """
    Read an image, convert to RGB and resize (bilinear) to width x height.

    Returns:
        float32 array (height, width, 3) in [0, 1].

    Raises:
        OSError: missing or unreadable file.
    """
    path = Path(path)
    with Image.open(path) as img:
        img = img.convert("RGB")
        if img.size != (width, height):
            img = img.resize((width, height), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32) / 255.0
    logger.debug("Loaded image %s -> %s", path, arr.shape)
    return arr


def to_uint8(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def save_rgb(path: str | Path, arr: np.ndarray) -> Path:
    """Write an (H, W, 3) float image in [0, 1] as 8-bit RGB."""
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"save_rgb expects (H, W, 3), got {arr.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(arr), mode="RGB").save(path)
    return path


def save_gray(path: str | Path, arr: np.ndarray) -> Path:
    """Write an (H, W) float image in [0, 1] as 8-bit grayscale."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"save_gray expects (H, W), got {arr.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_uint8(arr), mode="L").save(path)
    return path
