"""
In-memory LRU cache for decoded scene images.
Cache key = image ref (path or synthetic id).
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from typing import Optional

import numpy as np


class ImageCache:
    """LRU cache of read-only (H, W, 3) float32 images, safe to share across rollout threads."""

    def __init__(self, max_size: int = 256):
        self._max_size = max(1, max_size)
        self._data: OrderedDict[str, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key: str) -> Optional[np.ndarray]:
        with self._lock:
            value = self._data.get(key)
            if value is None:
                self.misses += 1
                return None
            self._data.move_to_end(key)
            self.hits += 1
            return value

    def set(self, key: str, value: np.ndarray) -> None:
        """Store an image (made read-only); evict the least recently used entry if full."""
        value.setflags(write=False)
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
            elif len(self._data) >= self._max_size:
                self._data.popitem(last=False)
            self._data[key] = value

    def clear(self) -> None:
        with self._lock:
            self._data.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._data)

    def __contains__(self, key: str) -> bool:
        return key in self._data
