"""Confidence-aware robust regression toolkit for stereo disparity.

Core pieces: the confidence-weighted L1 loss and its closed-form
per-pixel optimum (:mod:`stereoconf.loss`), sparsification-based
confidence evaluation (:mod:`stereoconf.metrics`), confidence-guided
prediction fusion (:mod:`stereoconf.ensemble`), disparity/confidence
file formats (:mod:`stereoconf.io`), and a small trainable demonstrator
(:mod:`stereoconf.toymodel`).
"""

from .ensemble import EnsembleConfig, conf_guided_ensemble
from .loss import (
    DEFAULT_C_MIN,
    FocusedLossParams,
    LossGradient,
    MapLossTerms,
    PixelLossTerms,
    focused_loss_map,
    focused_loss_pixel,
    gradient_pixel,
    loss_scan,
    optimal_confidence,
    plain_l1_pixel,
)
from .maps import (
    ConfidenceMap,
    DimensionMismatchError,
    DisparityMap,
    EmptyMaskError,
    joint_valid_mask,
    require_same_shape,
)
from .metrics import (
    DEFAULT_DENSITIES,
    DEFAULT_THETA,
    DEFAULT_THRESHOLDS,
    EvalReport,
    SparsificationCurve,
    aggregate,
    auc,
    auc_opt,
    auc_ratio,
    epe,
    error_rate,
    evaluate,
    sparsification,
    sparsification_from_arrays,
)
from .toymodel import (
    LOSS_MODES,
    AdamState,
    ToyModel,
    ToyScene,
    TrainConfig,
    TrainReport,
    TrainingDivergedError,
    adam_step,
    backward,
    forward,
    gen_synthetic_scene,
    init_model,
    train,
)

__all__ = [
    "AdamState",
    "ConfidenceMap",
    "DEFAULT_C_MIN",
    "DEFAULT_DENSITIES",
    "DEFAULT_THETA",
    "DEFAULT_THRESHOLDS",
    "DimensionMismatchError",
    "DisparityMap",
    "EmptyMaskError",
    "EnsembleConfig",
    "EvalReport",
    "FocusedLossParams",
    "LOSS_MODES",
    "LossGradient",
    "MapLossTerms",
    "PixelLossTerms",
    "SparsificationCurve",
    "ToyModel",
    "ToyScene",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "adam_step",
    "aggregate",
    "auc",
    "auc_opt",
    "auc_ratio",
    "backward",
    "conf_guided_ensemble",
    "epe",
    "error_rate",
    "evaluate",
    "focused_loss_map",
    "focused_loss_pixel",
    "forward",
    "gen_synthetic_scene",
    "gradient_pixel",
    "init_model",
    "joint_valid_mask",
    "loss_scan",
    "optimal_confidence",
    "plain_l1_pixel",
    "require_same_shape",
    "sparsification",
    "sparsification_from_arrays",
    "train",
]

__version__ = "0.1.0"
