"""Confidence-weighted L1 loss, its gradients, and the per-pixel optimum.

The loss treats each pixel's residual as Laplacian noise whose scale
b = a - k*c shrinks linearly as the predicted confidence c grows, plus a
prior on confidence proportional to c**gamma.  Taking the negative log
likelihood gives, per pixel,

    |r| / (a - k*c)  +  ln(a - k*c)  -  gamma * ln(c)

where the first term is the attenuated ("focused") L1 residual and the
remainder regularizes the confidence.  Additive constants from the
likelihood normalization are dropped, and logs are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maps import ConfidenceMap, DisparityMap, EmptyMaskError, joint_valid_mask, require_same_shape

DEFAULT_C_MIN = 1e-6


@dataclass(frozen=True)
class FocusedLossParams:
    """Parameters (k, a, gamma, c_min) of the confidence-weighted L1 loss.

    ``a >= k + 1`` keeps the Laplacian scale b = a - k*c at least 1 over the
    whole confidence range, and ``c_min`` is a small positive clamp that
    keeps -gamma*ln(c) finite near zero confidence.
    """

    k: float = 4.0
    a: float = 5.0
    gamma: float = 1.0
    c_min: float = DEFAULT_C_MIN

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.a >= self.k + 1:
            raise ValueError(f"a must satisfy a >= k + 1, got a={self.a}, k={self.k}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not 0.0 < self.c_min < 1.0:
            raise ValueError(f"c_min must lie in (0, 1), got {self.c_min}")

    def scale(self, c):
        """Laplacian scale b = a - k*c (works on scalars and arrays)."""
        return self.a - self.k * np.asarray(c, dtype=np.float64)


@dataclass(frozen=True)
class PixelLossTerms:
    """One pixel's loss split into its attenuated-L1 and regularizer parts."""

    focused_term: float
    regularization_term: float
    total: float


@dataclass(frozen=True)
class LossGradient:
    d_prediction: float
    d_confidence: float


@dataclass(frozen=True)
class MapLossTerms:
    """Per-pixel loss term grids; invalid pixels hold 0 in every field."""

    focused_term: np.ndarray
    regularization_term: np.ndarray
    total: np.ndarray


def _check_confidence(c, params: FocusedLossParams) -> None:
    c = np.asarray(c, dtype=np.float64)
    if c.size and ((c < params.c_min).any() or (c > 1.0).any()):
        raise ValueError(f"confidence must lie in [{params.c_min}, 1]")


def focused_loss_pixel(residual: float, c: float, params: FocusedLossParams) -> PixelLossTerms:
    """Loss terms at one pixel: |r|/(a-kc), ln(a-kc) - gamma*ln(c), and their sum."""
    _check_confidence(c, params)
    b = params.a - params.k * c
    focused = abs(residual) / b
    regularization = math.log(b) - params.gamma * math.log(c)
    return PixelLossTerms(focused, regularization, focused + regularization)


def plain_l1_pixel(residual: float) -> float:
    """Baseline L1 loss: |residual| with unit Laplacian scale."""
    return abs(residual)


def focused_loss_map(
    pred: DisparityMap,
    gt: DisparityMap,
    conf: ConfidenceMap,
    params: FocusedLossParams,
) -> tuple[float, MapLossTerms]:
    """Mean pixel loss over the joint valid mask plus the per-pixel term grids.

    Invalid pixels contribute 0 to every grid and are excluded from the mean.
    """
    require_same_shape(pred, gt, conf)
    mask = joint_valid_mask(pred, gt)
    _check_confidence(conf.values[mask], params)

    residual = np.where(mask, gt.values - pred.values, 0.0)
    b = params.a - params.k * conf.values
    focused = np.where(mask, np.abs(residual) / b, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        reg_all = np.log(b) - params.gamma * np.log(conf.values)
    regularization = np.where(mask, reg_all, 0.0)
    total = focused + regularization
    mean_total = float(total[mask].mean())
    return mean_total, MapLossTerms(focused, regularization, total)


def gradient_pixel(residual: float, c: float, params: FocusedLossParams) -> LossGradient:
    """Analytic derivatives of the pixel loss w.r.t. the prediction and c.

    The residual is gt - prediction, so d/d(prediction)|r| = -sign(r); the
    subgradient at residual = 0 is taken as 0.
    """
    _check_confidence(c, params)
    b = params.a - params.k * c
    if residual == 0:
        d_prediction = 0.0
    else:
        d_prediction = -math.copysign(1.0, residual) / b
    d_confidence = abs(residual) * params.k / b**2 - params.k / b - params.gamma / c
    return LossGradient(d_prediction, d_confidence)


def _stationary_candidates(r: float, params: FocusedLossParams) -> list[float]:
    """Real roots of d(total)/dc = 0, as roots of a quadratic in c.

    Clearing denominators from |r|k/b^2 - k/b - gamma/c = 0 with b = a - kc
    gives  c^2 k^2 (1-gamma) + c k (r - a + 2 gamma a) - gamma a^2 = 0.
    """
    k, a, gamma = params.k, params.a, params.gamma
    qa = k * k * (1.0 - gamma)
    qb = k * (r - a + 2.0 * gamma * a)
    qc = -gamma * a * a
    if qa == 0.0:
        return [-qc / qb] if qb != 0.0 else []
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return []
    # Citardauq-style split keeps the smaller root accurate when qa is tiny.
    q = -(qb + math.copysign(math.sqrt(disc), qb)) / 2.0
    roots = [q / qa]
    if q != 0.0:
        roots.append(qc / q)
    return roots


def optimal_confidence(residual: float, params: FocusedLossParams) -> float:
    """Confidence in [c_min, 1] minimizing the pixel loss for |residual|.

    Candidates are the interval endpoints plus any interior stationary
    points; exact ties are broken toward the larger confidence.
    """
    r = abs(residual)
    candidates = [params.c_min, 1.0]
    candidates += [c for c in _stationary_candidates(r, params) if params.c_min < c < 1.0]
    candidates.sort(reverse=True)
    best_c, best_total = candidates[0], focused_loss_pixel(r, candidates[0], params).total
    for c in candidates[1:]:
        total = focused_loss_pixel(r, c, params).total
        if total < best_total:
            best_c, best_total = c, total
    return best_c


def loss_scan(residual: float, params: FocusedLossParams, n_points: int) -> np.ndarray:
    """Sample the pixel total on a uniform confidence grid over [c_min, 1].

    Returns an (n_points, 2) array with columns (c, total).
    """
    if n_points < 2:
        raise ValueError(f"n_points must be at least 2, got {n_points}")
    c = np.linspace(params.c_min, 1.0, n_points)
    b = params.a - params.k * c
    total = abs(residual) / b + np.log(b) - params.gamma * np.log(c)
    return np.column_stack([c, total])
