"""Sensor frame containers produced by the synthetic camera."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class DepthFrame:
    """Row-major u16 depth image; 0 marks an invalid pixel."""

    seq: int
    stamp_ns: int
    width: int
    height: int
    data: np.ndarray  # (height, width) uint16

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.uint16)
        if self.data.shape != (self.height, self.width):
            raise ValueError("depth data shape must be (height, width)")


@dataclass(eq=False)
class RgbFrame:
    """Row-major 8-bit RGB image."""

    seq: int
    stamp_ns: int
    width: int
    height: int
    data: np.ndarray  # (height, width, 3) uint8

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.data.shape != (self.height, self.width, 3):
            raise ValueError("rgb data shape must be (height, width, 3)")
