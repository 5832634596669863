"""Confidence-guided fusion of two disparity predictions.

Keeps the primary prediction where its confidence is high and falls back
to a baseline prediction on the least-confident fraction of pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maps import ConfidenceMap, DisparityMap, require_same_shape

# Keeps floor() from dropping a pixel when q*n is exact in real arithmetic
# but lands just below the integer in floats (e.g. 0.35*20 -> 6.999...).
_COUNT_EPS = 1e-9


@dataclass(frozen=True)
class EnsembleConfig:
    """Fraction of the lowest-confidence valid pixels handed to the baseline."""

    replace_fraction: float = 0.15

    def __post_init__(self) -> None:
        if not 0.0 <= self.replace_fraction <= 1.0:
            raise ValueError(
                f"replace_fraction must lie in [0, 1], got {self.replace_fraction}"
            )


def conf_guided_ensemble(
    primary: DisparityMap,
    conf: ConfidenceMap,
    baseline: DisparityMap,
    cfg: EnsembleConfig = EnsembleConfig(),
) -> DisparityMap:
    """Replace the least-confident floor(q * n_valid) pixels with the baseline.

    Valid pixels of the primary map are ranked by confidence ascending
    (ties broken by ascending row-major index); the first
    floor(replace_fraction * n_valid) of them take the baseline's value and
    the rest keep the primary's. The output carries the primary's validity
    mask, so the baseline must be valid wherever the primary is.
    """
    require_same_shape(primary, conf, baseline)
    if (primary.valid & ~baseline.valid).any():
        raise ValueError("baseline must be valid wherever the primary is valid")

    flat_valid = primary.valid.ravel()
    valid_idx = np.flatnonzero(flat_valid)
    n_valid = valid_idx.size
    n_replace = int(math.floor(cfg.replace_fraction * n_valid + _COUNT_EPS))
    n_replace = min(n_replace, n_valid)

    values = primary.values.copy()
    if n_replace > 0:
        order = np.argsort(conf.values.ravel()[valid_idx], kind="stable")
        replace_idx = valid_idx[order[:n_replace]]
        values.ravel()[replace_idx] = baseline.values.ravel()[replace_idx]
    return DisparityMap(values, primary.valid.copy())
