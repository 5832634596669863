"""Command-line interface.

Subcommands: ``eval`` (metric report for one prediction or a directory of
them), ``roc`` (sparsification curve CSV), ``ensemble`` (confidence-guided
fusion), ``loss-scan`` (loss-versus-confidence CSV curves), ``opt-conf``
(closed-form best confidence for a residual), ``auc-opt`` (closed-form
best area for an error rate), and ``train-toy`` (train the synthetic
demonstrator and dump its outputs).

Exit codes: 0 success, 1 unreadable/unwritable input, 2 invalid values or
mismatched dimensions, 3 training divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io as sio
from .ensemble import EnsembleConfig, conf_guided_ensemble
from .loss import FocusedLossParams, loss_scan, optimal_confidence
from .maps import ConfidenceMap, DisparityMap, joint_valid_mask, require_same_shape
from .metrics import (
    DEFAULT_DENSITIES,
    DEFAULT_THETA,
    DEFAULT_THRESHOLDS,
    aggregate,
    auc_opt,
    error_rate,
    evaluate,
    sparsification_from_arrays,
)
from .toymodel import TrainConfig, TrainingDivergedError, forward, gen_synthetic_scene, train

_EXIT_OK = 0
_EXIT_IO = 1
_EXIT_VALIDATION = 2
_EXIT_DIVERGED = 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _loss_params(args) -> FocusedLossParams:
    return FocusedLossParams(k=args.k, a=args.a, gamma=args.gamma)


def _add_loss_flags(parser: argparse.ArgumentParser, gamma_default: float = 1.0) -> None:
    parser.add_argument("--k", type=float, default=4.0, help="confidence-to-scale slope k")
    parser.add_argument("--a", type=float, default=5.0, help="scale intercept a (b = a - k*c)")
    parser.add_argument(
        "--gamma", type=float, default=gamma_default, help="confidence prior exponent"
    )


def _pair_directory(pred_dir: Path, other_dir: Path, kind: str) -> list[tuple[Path, Path]]:
    """Match files across two directories by stem, sorted by filename."""
    pairs = []
    pred_files = sorted(p for p in pred_dir.iterdir() if p.is_file())
    if not pred_files:
        raise sio.FormatError(f"no files in {pred_dir}")
    others = {p.stem: p for p in other_dir.iterdir() if p.is_file()}
    for pred_path in pred_files:
        other = others.get(pred_path.stem)
        if other is None:
            raise sio.FormatError(f"no {kind} file matching {pred_path.stem!r} in {other_dir}")
        pairs.append((pred_path, other))
    return pairs


def _eval_inputs(args) -> list[tuple[DisparityMap, DisparityMap, ConfidenceMap | None]]:
    """Load (pred, gt, conf) triples; directories are paired by stem."""
    pred_path = Path(args.pred)
    gt_path = Path(args.gt)
    conf_path = Path(args.conf) if args.conf else None
    if not pred_path.is_dir():
        conf = sio.load_confidence(conf_path) if conf_path else None
        return [(sio.load_disparity(pred_path), sio.load_disparity(gt_path), conf)]

    triples = []
    gt_by_pred = dict(_pair_directory(pred_path, gt_path, "ground-truth"))
    conf_by_pred = dict(_pair_directory(pred_path, conf_path, "confidence")) if conf_path else {}
    for pred_file in sorted(gt_by_pred):
        pred = sio.load_disparity(pred_file)
        gt = sio.load_disparity(gt_by_pred[pred_file])
        conf = sio.load_confidence(conf_by_pred[pred_file]) if conf_path else None
        triples.append((pred, gt, conf))
    return triples


def cmd_eval(args) -> int:
    triples = _eval_inputs(args)
    reports = [
        evaluate(pred, gt, conf, theta=args.theta, thresholds=tuple(args.thresholds))
        for pred, gt, conf in triples
    ]
    if len(reports) == 1:
        report = reports[0]
    else:
        epsilons = [error_rate(pred, gt, args.theta) for pred, gt, _ in triples]
        report = aggregate(reports, epsilons)
    sio.write_report_json(report, args.out)
    print(f"images: {len(reports)}")
    print(f"n_valid: {report.n_valid}")
    print(f"epe: {report.epe:.9g}")
    for t, rate in report.error_rates.items():
        print(f"error_rate[{t:g}px]: {rate:.9g}")
    if report.auc is not None:
        print(f"auc: {report.auc:.9g}")
        print(f"auc_opt: {report.auc_opt:.9g}")
        print(f"ratio: {report.ratio:.9g}")
    return _EXIT_OK


def cmd_roc(args) -> int:
    triples = _eval_inputs(args)
    errors, confs = [], []
    for pred, gt, conf in triples:
        if conf is None:
            raise ValueError("roc requires --conf")
        require_same_shape(pred, gt, conf)
        mask = joint_valid_mask(pred, gt)
        errors.append(np.abs(pred.values - gt.values)[mask])
        confs.append(conf.values[mask])
    curve = sparsification_from_arrays(
        np.concatenate(errors),
        np.concatenate(confs),
        theta=args.theta,
        densities=tuple(args.densities),
    )
    sio.write_curve_csv(curve, args.out)
    print(f"pixels: {sum(e.size for e in errors)}")
    print(f"full-density error rate: {curve.error_rates[-1]:.9g}")
    return _EXIT_OK


def cmd_ensemble(args) -> int:
    primary = sio.load_disparity(args.primary)
    conf = sio.load_confidence(args.conf)
    baseline = sio.load_disparity(args.baseline)
    fused = conf_guided_ensemble(primary, conf, baseline, EnsembleConfig(args.fraction))
    out = Path(args.out)
    if out.suffix.lower() == ".png":
        sio.write_kitti_disparity(fused, out)
    else:
        sio.write_pfm(fused, out)
    n_changed = int((fused.values != primary.values).sum())
    print(f"replaced pixels: {n_changed} of {primary.n_valid} valid")
    return _EXIT_OK


def cmd_loss_scan(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for gamma in args.gammas:
        params = FocusedLossParams(k=args.k, a=args.a, gamma=gamma)
        for residual in args.residuals:
            scan = loss_scan(residual, params, args.points)
            path = out_dir / f"scan_r{residual:g}_gamma{gamma:g}.csv"
            sio.write_scan_csv(scan, path)
            print(path)
    return _EXIT_OK


def cmd_opt_conf(args) -> int:
    c = optimal_confidence(args.residual, _loss_params(args))
    print(f"{c:.12g}")
    return _EXIT_OK


def cmd_auc_opt(args) -> int:
    print(f"{auc_opt(args.epsilon):.12g}")
    return _EXIT_OK


def cmd_train_toy(args) -> int:
    scene = gen_synthetic_scene(
        args.scene_seed,
        outlier_frac=args.outlier_frac,
        noise_sigma=args.noise_sigma,
        outlier_magnitude=args.outlier_magnitude,
    )
    cfg = TrainConfig(
        loss_params=_loss_params(args),
        iterations=args.iterations,
        seed=args.seed,
    )
    loss_mode = {"focused": "focused", "l1": "plain_l1"}[args.loss]
    model, report = train(cfg, scene, loss_mode)
    pred, conf = forward(model, scene.features, cfg.loss_params.c_min)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sio.write_json(report.to_json_dict(), out_dir / "train_report.json")
    sio.write_pfm(pred, out_dir / "pred_disparity.pfm")
    sio.write_confidence_png(conf, out_dir / "confidence.png")
    sio.write_pfm(scene.gt_disparity, out_dir / "gt_disparity.pfm")
    sio.write_pfm(scene.observed_disparity, out_dir / "observed_disparity.pfm")
    print(f"loss_mode: {report.loss_mode}")
    print(f"initial_loss: {report.initial_loss:.9g}")
    print(f"final_loss: {report.final_loss:.9g}")
    print(f"clean_epe: {report.clean_epe:.9g}")
    print(f"mean_conf_clean: {report.mean_conf_clean:.9g}")
    if report.mean_conf_corrupted is not None:
        print(f"mean_conf_corrupted: {report.mean_conf_corrupted:.9g}")
    return _EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stereoconf",
        description="Confidence-aware disparity evaluation, fusion, and loss analysis.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_eval = sub.add_parser("eval", help="metric report for a prediction (file or directory)")
    p_eval.add_argument("--pred", required=True, help="predicted disparity (.pfm/.png) or directory")
    p_eval.add_argument("--gt", required=True, help="ground-truth disparity or directory")
    p_eval.add_argument("--conf", help="confidence map or directory (enables ranking metrics)")
    p_eval.add_argument("--theta", type=float, default=DEFAULT_THETA, help="correctness threshold")
    p_eval.add_argument(
        "--thresholds",
        type=_float_list,
        default=list(DEFAULT_THRESHOLDS),
        help="comma-separated t-px error thresholds",
    )
    p_eval.add_argument("--out", required=True, help="output report JSON path")
    p_eval.set_defaults(func=cmd_eval)

    p_roc = sub.add_parser("roc", help="sparsification curve CSV (pixels pooled over inputs)")
    p_roc.add_argument("--pred", required=True, help="predicted disparity or directory")
    p_roc.add_argument("--gt", required=True, help="ground-truth disparity or directory")
    p_roc.add_argument("--conf", required=True, help="confidence map or directory")
    p_roc.add_argument("--theta", type=float, default=DEFAULT_THETA, help="correctness threshold")
    p_roc.add_argument(
        "--densities",
        type=_float_list,
        default=list(DEFAULT_DENSITIES),
        help="comma-separated kept densities, ending at 1.0",
    )
    p_roc.add_argument("--out", required=True, help="output CSV path")
    p_roc.set_defaults(func=cmd_roc)

    p_ens = sub.add_parser("ensemble", help="confidence-guided fusion of two predictions")
    p_ens.add_argument("--primary", required=True, help="primary disparity map")
    p_ens.add_argument("--conf", required=True, help="confidence of the primary prediction")
    p_ens.add_argument("--baseline", required=True, help="fallback disparity map")
    p_ens.add_argument("--fraction", type=float, default=0.15, help="fraction replaced")
    p_ens.add_argument("--out", required=True, help="output map (.pfm or .png)")
    p_ens.set_defaults(func=cmd_ensemble)

    p_scan = sub.add_parser("loss-scan", help="loss-versus-confidence curves as CSV")
    p_scan.add_argument(
        "--residuals", type=_float_list, default=[10.0, 0.1], help="comma-separated residuals"
    )
    p_scan.add_argument(
        "--gammas", type=_float_list, default=[0.0, 1.0], help="comma-separated gamma values"
    )
    p_scan.add_argument("--k", type=float, default=4.0, help="confidence-to-scale slope k")
    p_scan.add_argument("--a", type=float, default=5.0, help="scale intercept a (b = a - k*c)")
    p_scan.add_argument("--points", type=int, default=200, help="samples per curve")
    p_scan.add_argument("--out-dir", required=True, help="directory for the CSV files")
    p_scan.set_defaults(func=cmd_loss_scan)

    p_opt = sub.add_parser("opt-conf", help="loss-minimizing confidence for a residual")
    p_opt.add_argument("--residual", type=float, required=True, help="absolute residual in px")
    _add_loss_flags(p_opt)
    p_opt.set_defaults(func=cmd_opt_conf)

    p_aopt = sub.add_parser("auc-opt", help="closed-form best sparsification area")
    p_aopt.add_argument(
        "--epsilon", type=float, required=True, help="full-density error rate in [0, 1]"
    )
    p_aopt.set_defaults(func=cmd_auc_opt)

    p_toy = sub.add_parser("train-toy", help="train the synthetic demonstrator")
    _add_loss_flags(p_toy)
    p_toy.add_argument("--loss", choices=("focused", "l1"), default="focused")
    p_toy.add_argument("--seed", type=int, default=0, help="training seed")
    p_toy.add_argument("--scene-seed", type=int, default=0, help="scene generation seed")
    p_toy.add_argument("--iterations", type=int, default=TrainConfig().iterations)
    p_toy.add_argument("--outlier-frac", type=float, default=0.2)
    p_toy.add_argument("--noise-sigma", type=float, default=0.2)
    p_toy.add_argument("--outlier-magnitude", type=float, default=16.0)
    p_toy.add_argument("--out-dir", required=True, help="directory for report and maps")
    p_toy.set_defaults(func=cmd_train_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (sio.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_VALIDATION
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DIVERGED


def run() -> None:
    raise SystemExit(main())
