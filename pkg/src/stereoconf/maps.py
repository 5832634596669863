"""Dense disparity and confidence grids shared by the rest of the toolkit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionMismatchError(ValueError):
    """Paired grids do not share the same width and height."""


class EmptyMaskError(ValueError):
    """An operation that needs valid pixels was given a mask with none."""


@dataclass
class DisparityMap:
    """Dense disparity field (pixels) with a per-pixel validity mask.

    Invalid pixels carry the value 0 by convention and are excluded from
    every statistic computed on the map.
    """

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"disparity values must be a 2-D grid, got shape {values.shape}")
        valid = np.asarray(self.valid, dtype=bool)
        if valid.shape != values.shape:
            raise DimensionMismatchError(
                f"valid mask shape {valid.shape} does not match values shape {values.shape}"
            )
        self.values = np.where(valid, values, 0.0)
        self.valid = valid

    @classmethod
    def full(cls, values: np.ndarray) -> "DisparityMap":
        """Wrap a grid whose pixels are all valid."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())


@dataclass
class ConfidenceMap:
    """Per-pixel confidence grid with values in [0, 1]."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"confidence values must be a 2-D grid, got shape {values.shape}")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("confidence values must lie in [0, 1]")
        self.values = values

    @classmethod
    def constant(cls, value: float, height: int, width: int) -> "ConfidenceMap":
        return cls(np.full((height, width), float(value)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def require_same_shape(*grids) -> None:
    """Raise DimensionMismatchError unless all maps share one shape."""
    shapes = {g.values.shape for g in grids}
    if len(shapes) > 1:
        raise DimensionMismatchError(f"grids have mismatched shapes: {sorted(shapes)}")


def joint_valid_mask(pred: DisparityMap, gt: DisparityMap) -> np.ndarray:
    """Mask of pixels valid in both maps; raises if there are none."""
    require_same_shape(pred, gt)
    mask = pred.valid & gt.valid
    if not mask.any():
        raise EmptyMaskError("no pixel is valid in both maps")
    return mask
