"""Disparity and confidence evaluation.

Covers end-point error, t-px error rates, the confidence sparsification
curve (error rate among the top-d most confident pixels as the kept
density d grows), its trapezoidal area, the closed-form area a perfect
confidence ranking would achieve, and their ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maps import ConfidenceMap, DisparityMap, joint_valid_mask, require_same_shape

DEFAULT_THETA = 1.0
DEFAULT_THRESHOLDS = (1.0, 3.0, 5.0)
# Top-density grid: 5%, 10%, ..., 100%.
DEFAULT_DENSITIES = tuple(np.round(np.arange(1, 21) * 0.05, 2))

# Tolerance subtracted before ceil/floor so that an exactly-representable
# product like 0.8*10 is not bumped to the next integer by float noise.
_COUNT_EPS = 1e-9


@dataclass(frozen=True)
class SparsificationCurve:
    """Error rate among the most-confident pixels, per kept density.

    ``points`` is an (n, 2) array with columns (density, error_rate);
    densities are strictly increasing within (0, 1] and end at exactly 1,
    so the last error rate is the full-density error rate.
    """

    points: np.ndarray
    theta: float

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError(f"points must be (n, 2), got shape {points.shape}")
        if points.shape[0] == 0:
            raise ValueError("curve needs at least one point")
        _check_densities(points[:, 0])
        object.__setattr__(self, "points", points)

    @property
    def densities(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def error_rates(self) -> np.ndarray:
        return self.points[:, 1]


@dataclass(frozen=True)
class EvalReport:
    """All metrics for one prediction (or an aggregate over several).

    ``auc``, ``auc_opt``, and ``ratio`` are None when no confidence map was
    supplied; they are then omitted from the JSON form.
    """

    epe: float
    error_rates: dict[float, float]
    n_valid: int
    auc: float | None = None
    auc_opt: float | None = None
    ratio: float | None = None

    def to_json_dict(self) -> dict:
        out: dict = {
            "epe": self.epe,
            "error_rates": {f"{t:g}": rate for t, rate in self.error_rates.items()},
            "n_valid": self.n_valid,
        }
        if self.auc is not None:
            out["auc"] = self.auc
            out["auc_opt"] = self.auc_opt
            out["ratio"] = self.ratio
        return out


def _check_densities(densities: np.ndarray) -> None:
    if (densities <= 0).any() or (densities > 1).any():
        raise ValueError("densities must lie in (0, 1]")
    if (np.diff(densities) <= 0).any():
        raise ValueError("densities must be strictly increasing")
    if densities[-1] != 1.0:
        raise ValueError("the last density must be exactly 1.0")


def _abs_errors(pred: DisparityMap, gt: DisparityMap) -> np.ndarray:
    """|pred - gt| restricted to the jointly valid pixels, row-major order."""
    require_same_shape(pred, gt)
    mask = joint_valid_mask(pred, gt)
    return np.abs(pred.values - gt.values)[mask]


def epe(pred: DisparityMap, gt: DisparityMap) -> float:
    """Mean absolute disparity error over the jointly valid pixels."""
    return float(_abs_errors(pred, gt).mean())


def error_rate(pred: DisparityMap, gt: DisparityMap, t: float) -> float:
    """Fraction of jointly valid pixels with |pred - gt| strictly above t."""
    if not t > 0:
        raise ValueError(f"threshold must be positive, got {t}")
    errors = _abs_errors(pred, gt)
    return float((errors > t).mean())


def sparsification_from_arrays(
    abs_errors: np.ndarray,
    confidences: np.ndarray,
    theta: float = DEFAULT_THETA,
    densities=DEFAULT_DENSITIES,
) -> SparsificationCurve:
    """Sparsification curve from flat per-pixel error/confidence arrays.

    Pixels are ranked by confidence descending, ties broken by ascending
    position in the input arrays; at each density d the first
    ceil(d * n) pixels are kept and their error>theta rate reported.
    """
    abs_errors = np.asarray(abs_errors, dtype=np.float64)
    confidences = np.asarray(confidences, dtype=np.float64)
    if abs_errors.shape != confidences.shape or abs_errors.ndim != 1:
        raise ValueError("abs_errors and confidences must be equal-length 1-D arrays")
    n = abs_errors.size
    if n == 0:
        raise ValueError("need at least one pixel")
    densities = np.asarray(densities, dtype=np.float64)
    _check_densities(densities)

    order = np.argsort(-confidences, kind="stable")
    wrong = (abs_errors[order] > theta).astype(np.float64)
    wrong_prefix = np.cumsum(wrong)
    n_take = np.ceil(densities * n - _COUNT_EPS).astype(np.int64)
    n_take = np.clip(n_take, 1, n)
    rates = wrong_prefix[n_take - 1] / n_take
    return SparsificationCurve(np.column_stack([densities, rates]), float(theta))


def sparsification(
    pred: DisparityMap,
    gt: DisparityMap,
    conf: ConfidenceMap,
    theta: float = DEFAULT_THETA,
    densities=DEFAULT_DENSITIES,
) -> SparsificationCurve:
    """Sparsification curve over the jointly valid pixels of one image."""
    require_same_shape(pred, gt, conf)
    mask = joint_valid_mask(pred, gt)
    abs_errors = np.abs(pred.values - gt.values)[mask]
    return sparsification_from_arrays(abs_errors, conf.values[mask], theta, densities)


def auc(curve: SparsificationCurve) -> float:
    """Area under the sparsification curve over density [0, 1].

    The segment [0, d_1] before the first point is integrated as a
    rectangle at the first error rate (constant extrapolation); the rest
    is the trapezoid rule over the curve's points.
    """
    d = curve.densities
    e = curve.error_rates
    area = d[0] * e[0]
    if d.size > 1:
        area += float(np.sum((d[1:] - d[:-1]) * (e[1:] + e[:-1]) * 0.5))
    return float(area)


def auc_opt(epsilon: float) -> float:
    """Area a perfect confidence ranking would achieve at full-density
    error rate epsilon: epsilon + (1 - epsilon) * ln(1 - epsilon).

    Continuous limits at the ends: 0 at epsilon = 0, 1 at epsilon = 1.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon == 1.0:
        return 1.0
    return float(epsilon + (1.0 - epsilon) * math.log1p(-epsilon))


def auc_ratio(opt: float, avr: float) -> float:
    """auc_opt / auc, with the 0/0 case (perfect prediction) defined as 0."""
    if opt == 0.0 and avr == 0.0:
        return 0.0
    return opt / avr


def evaluate(
    pred: DisparityMap,
    gt: DisparityMap,
    conf: ConfidenceMap | None = None,
    theta: float = DEFAULT_THETA,
    thresholds=DEFAULT_THRESHOLDS,
    densities=DEFAULT_DENSITIES,
) -> EvalReport:
    """Assemble the full metric set for one prediction.

    The ranking-quality fields use epsilon = error rate at t = theta;
    without a confidence map they are left as None.
    """
    errors = _abs_errors(pred, gt)
    rates = {float(t): error_rate(pred, gt, t) for t in thresholds}
    report_epe = float(errors.mean())
    n_valid = int(errors.size)
    if conf is None:
        return EvalReport(report_epe, rates, n_valid)

    curve = sparsification(pred, gt, conf, theta, densities)
    avr = auc(curve)
    epsilon = float(curve.error_rates[-1])
    opt = auc_opt(epsilon)
    return EvalReport(report_epe, rates, n_valid, avr, opt, auc_ratio(opt, avr))


def aggregate(reports: list[EvalReport], full_density_errors: list[float]) -> EvalReport:
    """Combine per-image reports into one dataset-level report.

    auc is the unweighted mean of the per-image areas; epe and the error
    rates are valid-pixel-weighted means; auc_opt is the closed form of
    the valid-pixel-weighted mean of the per-image full-density error
    rates (so it pairs with the dataset-level error rate, not with the
    mean of per-image optimal areas).
    """
    if not reports:
        raise ValueError("need at least one report")
    if len(full_density_errors) != len(reports):
        raise ValueError("full_density_errors must pair 1:1 with reports")
    weights = np.array([r.n_valid for r in reports], dtype=np.float64)
    total = weights.sum()

    def weighted(values) -> float:
        return float(np.dot(weights, np.asarray(values, dtype=np.float64)) / total)

    thresholds = list(reports[0].error_rates)
    if any(list(r.error_rates) != thresholds for r in reports):
        raise ValueError("reports must share the same error-rate thresholds")
    rates = {t: weighted([r.error_rates[t] for r in reports]) for t in thresholds}
    agg_epe = weighted([r.epe for r in reports])
    n_valid = int(total)

    if any(r.auc is None for r in reports):
        return EvalReport(agg_epe, rates, n_valid)
    avr = float(np.mean([r.auc for r in reports]))
    opt = auc_opt(weighted(full_density_errors))
    return EvalReport(agg_epe, rates, n_valid, avr, opt, auc_ratio(opt, avr))
