"""
Parameter checkpoint files.

Layout (little-endian): b"GIRL", version u32, count u32, then per tensor:
name length u32, UTF-8 name, rank u32, extents u32 * rank, raw float32 data.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import CheckpointError, ShapeError
from .tensor import Parameter, Tensor

logger = logging.getLogger(__name__)

MAGIC = b"GIRL"
VERSION = 1


def save_checkpoint(path: str | Path, tensors: Mapping[str, np.ndarray | Tensor]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack("<4sII", MAGIC, VERSION, len(tensors)))
        for name, value in tensors.items():
            arr = value.data if isinstance(value, Tensor) else np.asarray(value)
            arr = np.ascontiguousarray(arr, dtype="<f4")
            raw_name = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw_name)))
            f.write(raw_name)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(arr.tobytes())
    logger.info("Saved checkpoint %s (%d tensors)", path, len(tensors))
    return path


def _read(f, fmt: str) -> tuple:
    size = struct.calcsize(fmt)
    buf = f.read(size)
    if len(buf) != size:
        raise CheckpointError("truncated checkpoint")
    return struct.unpack(fmt, buf)


def load_checkpoint(path: str | Path) -> dict[str, np.ndarray]:
    """Read a checkpoint into name -> float32 array (insertion order kept)."""
    path = Path(path)
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        magic, version, count = _read(f, "<4sII")
        if magic != MAGIC:
            raise CheckpointError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported version {version}")
        for _ in range(count):
            (name_len,) = _read(f, "<I")
            raw_name = f.read(name_len)
            if len(raw_name) != name_len:
                raise CheckpointError(f"{path}: truncated tensor name")
            try:
                name = raw_name.decode("utf-8")
            except UnicodeDecodeError:
                raise CheckpointError(f"{path}: tensor name is not UTF-8") from None
            (rank,) = _read(f, "<I")
            shape = _read(f, f"<{rank}I") if rank else ()
            n = int(np.prod(shape)) if rank else 1
            buf = f.read(4 * n)
            if len(buf) != 4 * n:
                raise CheckpointError(f"{path}: truncated data for {name}")
            out[name] = np.frombuffer(buf, dtype="<f4").astype(np.float32).reshape(shape)
    logger.info("Loaded checkpoint %s (%d tensors)", path, len(out))
    return out


def load_into(params: Iterable[Parameter], path: str | Path) -> None:
    """Copy checkpoint values into parameters, matched by name and shape."""
    stored = load_checkpoint(path)
    for p in params:
        if p.name not in stored:
            raise CheckpointError(f"{path}: missing tensor {p.name}")
        value = stored[p.name]
        if value.shape != p.shape:
            raise ShapeError("load_into", p.shape, value.shape, p.name)
        p.data = value.copy()
