"""A desk-scale disparity-plus-confidence regressor on synthetic scenes.

A tiny per-pixel MLP maps an F-vector of per-pixel features to a
disparity and a confidence.  Training minimizes either the
confidence-weighted loss from :mod:`stereoconf.loss` or plain L1, with
minibatch Adam, entirely in numpy and deterministic per seed.  The
synthetic scenes corrupt a feature-identifiable subset of the observed
targets with large offsets, so a good confidence head can learn to flag
them and the robust loss can learn to ignore them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .loss import DEFAULT_C_MIN, FocusedLossParams
from .maps import ConfidenceMap, DimensionMismatchError, DisparityMap

LOSS_MODES = ("focused", "plain_l1")

DEFAULT_HIDDEN = 16


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss and was aborted."""


@dataclass(frozen=True)
class ToyScene:
    """Synthetic per-pixel regression problem with corrupted observations.

    ``observed_disparity`` is the training target: the ground truth plus
    Gaussian noise, plus a large positive offset on the pixels flagged in
    ``corruption_mask``.  The mask is decidable from the features (it is
    the top quantile of the product of the first two channels), so a
    per-pixel model can in principle learn where the targets are
    untrustworthy.
    """

    features: np.ndarray
    gt_disparity: DisparityMap
    corruption_mask: np.ndarray
    observed_disparity: DisparityMap

    @property
    def height(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[2]


@dataclass(frozen=True)
class ToyModel:
    """Per-pixel MLP: tanh hidden layers, a linear disparity head, and a
    logistic confidence head clamped to [c_min, 1] at forward time."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, alternating weight matrix and bias vector."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def with_parameters(self, params: list[np.ndarray]) -> "ToyModel":
        weights = tuple(params[0::2])
        biases = tuple(params[1::2])
        return ToyModel(weights, biases)


@dataclass(frozen=True)
class TrainConfig:
    loss_params: FocusedLossParams = field(default_factory=FocusedLossParams)
    weight_decay: float = 1e-4
    learning_rate: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    iterations: int = 2500
    batch_pixels: int = 256
    hidden_units: int = DEFAULT_HIDDEN
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.weight_decay >= 0:
            raise ValueError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not self.adam_epsilon > 0:
            raise ValueError(f"adam_epsilon must be positive, got {self.adam_epsilon}")
        if self.iterations < 0 or self.batch_pixels < 1 or self.hidden_units < 1:
            raise ValueError("iterations must be >= 0; batch_pixels and hidden_units >= 1")


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            tuple(np.zeros_like(p) for p in params),
            tuple(np.zeros_like(p) for p in params),
            0,
        )


@dataclass(frozen=True)
class TrainReport:
    loss_mode: str
    seed: int
    loss_history: tuple[float, ...]
    initial_loss: float
    final_loss: float
    clean_epe: float
    mean_conf_clean: float
    mean_conf_corrupted: float | None

    def to_json_dict(self) -> dict:
        out = {
            "loss_mode": self.loss_mode,
            "seed": self.seed,
            "iterations": len(self.loss_history),
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "clean_epe": self.clean_epe,
            "mean_conf_clean": self.mean_conf_clean,
            "loss_history": list(self.loss_history),
        }
        if self.mean_conf_corrupted is not None:
            out["mean_conf_corrupted"] = self.mean_conf_corrupted
        return out


def gen_synthetic_scene(
    seed: int,
    width: int = 50,
    height: int = 50,
    feature_dim: int = 4,
    outlier_frac: float = 0.2,
    noise_sigma: float = 0.2,
    outlier_magnitude: float = 16.0,
) -> ToyScene:
    """Deterministic synthetic scene.

    Features are uniform in (-1, 1); the ground truth is a smooth
    function of them; exactly round(outlier_frac * n_pixels) pixels get
    an extra offset drawn uniformly from
    [outlier_magnitude, 2 * outlier_magnitude) added to their observed
    target.  The corrupted pixels are the ones with the largest product
    of the first two feature channels, so the corruption overlaps the
    interaction term of the ground-truth function: a non-robust fit of
    the corrupted targets distorts the shared representation that the
    clean pixels also rely on.
    """
    if width < 1 or height < 1 or feature_dim < 1:
        raise ValueError(f"degenerate dimensions {height}x{width}x{feature_dim}")
    if not 0.0 <= outlier_frac <= 0.5:
        raise ValueError(f"outlier_frac must lie in [0, 0.5], got {outlier_frac}")
    if not noise_sigma >= 0:
        raise ValueError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if not outlier_magnitude > 0:
        raise ValueError(f"outlier_magnitude must be positive, got {outlier_magnitude}")

    rng = np.random.default_rng(seed)
    features = rng.uniform(-1.0, 1.0, size=(height, width, feature_dim))
    x0 = features[:, :, 0]
    x1 = features[:, :, 1 % feature_dim]
    x_last = features[:, :, -1]
    gt = (
        3.0
        + 1.5 * np.sin(1.6 * x0 - 0.9 * x1)
        + 1.2 * x0 * x1
        + 0.5 * np.cos(1.3 * x_last)
    )

    n_pixels = height * width
    n_corrupt = int(round(outlier_frac * n_pixels))
    mask = np.zeros(n_pixels, dtype=bool)
    if n_corrupt > 0:
        order = np.argsort(-(x0 * x1).ravel(), kind="stable")
        mask[order[:n_corrupt]] = True
    mask = mask.reshape(height, width)

    observed = gt + rng.normal(0.0, noise_sigma, size=gt.shape) if noise_sigma > 0 else gt.copy()
    if n_corrupt > 0:
        offsets = rng.uniform(outlier_magnitude, 2.0 * outlier_magnitude, size=n_corrupt)
        observed = observed.copy()
        observed[mask] += offsets
    return ToyScene(features, DisparityMap.full(gt), mask, DisparityMap.full(observed))


def init_model(
    seed_or_rng, feature_dim: int, hidden_units: int = DEFAULT_HIDDEN
) -> ToyModel:
    """Model with weights uniform in ±1/sqrt(fan_in) and zero biases."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    dims = (feature_dim, hidden_units, hidden_units, 2)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return ToyModel(tuple(weights), tuple(biases))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_flat(model: ToyModel, x: np.ndarray, c_min: float):
    """Heads and activations for a flat (n, F) feature batch."""
    if x.shape[1] != model.weights[0].shape[1]:
        raise DimensionMismatchError(
            f"feature dimension {x.shape[1]} does not match model input "
            f"{model.weights[0].shape[1]}"
        )
    w1, w2, w3 = model.weights
    b1, b2, b3 = model.biases
    h1 = np.tanh(x @ w1.T + b1)
    h2 = np.tanh(h1 @ w2.T + b2)
    out = h2 @ w3.T + b3
    disparity = out[:, 0]
    conf_raw = _sigmoid(out[:, 1])
    conf = np.clip(conf_raw, c_min, 1.0)
    return disparity, conf, conf_raw, h1, h2


def forward(
    model: ToyModel, features: np.ndarray, c_min: float = DEFAULT_C_MIN
) -> tuple[DisparityMap, ConfidenceMap]:
    """Apply the model per pixel to an (H, W, F) feature grid."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 3:
        raise DimensionMismatchError(f"features must be (H, W, F), got {features.shape}")
    h, w, f = features.shape
    disparity, conf, _, _, _ = _forward_flat(model, features.reshape(h * w, f), c_min)
    return DisparityMap.full(disparity.reshape(h, w)), ConfidenceMap(conf.reshape(h, w))


def _loss_and_grads_flat(
    model: ToyModel,
    x: np.ndarray,
    target: np.ndarray,
    loss_params: FocusedLossParams,
    weight_decay: float,
    loss_mode: str,
) -> tuple[float, list[np.ndarray]]:
    """Objective (mean pixel loss + L1 weight penalty) and its gradients.

    The confidence clamp passes gradient through only where the raw
    logistic output is at or above c_min; the |w| penalty applies to
    weight matrices, not biases, with subgradient 0 at w = 0.

    Non-finite targets or activations flow through to the returned loss
    value (which the training loop's divergence guard checks) instead of
    warning here.
    """
    if loss_mode not in LOSS_MODES:
        raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {loss_mode!r}")
    with np.errstate(over="ignore", invalid="ignore"):
        return _loss_and_grads_unchecked(model, x, target, loss_params, weight_decay, loss_mode)


def _loss_and_grads_unchecked(
    model: ToyModel,
    x: np.ndarray,
    target: np.ndarray,
    loss_params: FocusedLossParams,
    weight_decay: float,
    loss_mode: str,
) -> tuple[float, list[np.ndarray]]:
    n = x.shape[0]
    w1, w2, w3 = model.weights
    disparity, conf, conf_raw, h1, h2 = _forward_flat(model, x, loss_params.c_min)
    residual = target - disparity

    if loss_mode == "plain_l1":
        data_loss = float(np.abs(residual).mean())
        d_disparity = -np.sign(residual) / n
        d_zconf = np.zeros(n)
    else:
        k, a, gamma = loss_params.k, loss_params.a, loss_params.gamma
        b = a - k * conf
        data_loss = float(
            (np.abs(residual) / b + np.log(b) - gamma * np.log(conf)).mean()
        )
        d_disparity = -np.sign(residual) / b / n
        d_conf = (np.abs(residual) * k / b**2 - k / b - gamma / conf) / n
        pass_through = conf_raw >= loss_params.c_min
        d_zconf = d_conf * pass_through * conf_raw * (1.0 - conf_raw)

    d_out = np.column_stack([d_disparity, d_zconf])
    g_w3 = d_out.T @ h2
    g_b3 = d_out.sum(axis=0)
    d_h2 = d_out @ w3
    d_a2 = d_h2 * (1.0 - h2**2)
    g_w2 = d_a2.T @ h1
    g_b2 = d_a2.sum(axis=0)
    d_h1 = d_a2 @ w2
    d_a1 = d_h1 * (1.0 - h1**2)
    g_w1 = d_a1.T @ x
    g_b1 = d_a1.sum(axis=0)

    penalty = weight_decay * sum(float(np.abs(w).sum()) for w in (w1, w2, w3))
    grads = [
        g_w1 + weight_decay * np.sign(w1),
        g_b1,
        g_w2 + weight_decay * np.sign(w2),
        g_b2,
        g_w3 + weight_decay * np.sign(w3),
        g_b3,
    ]
    return data_loss + penalty, grads


def backward(
    model: ToyModel,
    scene: ToyScene,
    loss_params: FocusedLossParams,
    weight_decay: float,
    loss_mode: str = "focused",
) -> tuple[float, list[np.ndarray]]:
    """Objective and gradients over every parameter, on the whole scene.

    The objective is the mean per-pixel loss against the observed targets
    plus the L1 weight penalty.
    """
    h, w, f = scene.features.shape
    x = scene.features.reshape(h * w, f)
    target = scene.observed_disparity.values.reshape(h * w)
    return _loss_and_grads_flat(model, x, target, loss_params, weight_decay, loss_mode)


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[list[np.ndarray], AdamState]:
    """One Adam update with bias correction; returns new arrays throughout."""
    if len(grads) != len(params) or len(state.m) != len(params):
        raise ValueError("params, grads, and state must have matching lengths")
    t = state.t + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g**2
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        new_params.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(tuple(new_m), tuple(new_v), t)


def train(
    cfg: TrainConfig, scene: ToyScene, loss_mode: str = "focused"
) -> tuple[ToyModel, TrainReport]:
    """Minibatch Adam over the scene's pixels; deterministic per cfg.seed.

    The loss history records each minibatch objective; initial/final loss
    are whole-scene objectives.  clean_epe compares the prediction with
    the ground truth on non-corrupted pixels only.  Raises
    TrainingDivergedError the first time the objective goes non-finite.
    """
    if loss_mode not in LOSS_MODES:
        raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {loss_mode!r}")
    rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, scene.feature_dim, cfg.hidden_units)

    h, w, f = scene.features.shape
    x_all = scene.features.reshape(h * w, f)
    target_all = scene.observed_disparity.values.reshape(h * w)
    n_pixels = h * w

    initial_loss, _ = _loss_and_grads_flat(
        model, x_all, target_all, cfg.loss_params, cfg.weight_decay, loss_mode
    )
    params = model.parameters()
    state = AdamState.zeros_like(params)
    history: list[float] = []
    for _ in range(cfg.iterations):
        idx = rng.integers(0, n_pixels, size=cfg.batch_pixels)
        batch_loss, grads = _loss_and_grads_flat(
            model.with_parameters(params),
            x_all[idx],
            target_all[idx],
            cfg.loss_params,
            cfg.weight_decay,
            loss_mode,
        )
        if not np.isfinite(batch_loss):
            raise TrainingDivergedError(
                f"non-finite loss at iteration {len(history)}: {batch_loss}"
            )
        params, state = adam_step(params, grads, state, cfg)
        history.append(batch_loss)

    model = model.with_parameters(params)
    final_loss, _ = _loss_and_grads_flat(
        model, x_all, target_all, cfg.loss_params, cfg.weight_decay, loss_mode
    )
    pred, conf = forward(model, scene.features, cfg.loss_params.c_min)
    clean = ~scene.corruption_mask
    clean_epe = float(np.abs(pred.values - scene.gt_disparity.values)[clean].mean())
    mean_conf_clean = float(conf.values[clean].mean())
    mean_conf_corrupted = (
        float(conf.values[scene.corruption_mask].mean())
        if scene.corruption_mask.any()
        else None
    )
    report = TrainReport(
        loss_mode,
        cfg.seed,
        tuple(history),
        initial_loss,
        final_loss,
        clean_epe,
        mean_conf_clean,
        mean_conf_corrupted,
    )
    return model, report
