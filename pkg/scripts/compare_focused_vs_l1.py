#!/usr/bin/env python3
"""Train the toy matcher with focused loss and plain L1 across seeds.

Prints a per-seed table of clean-pixel EPE and sparsification AUC
(learned confidence vs a constant-0.5 reference), then the medians and
win counts the shipping gate checks. Optionally dumps the raw numbers
as JSON.
"""

from __future__ import annotations

import argparse
import json
import statistics
import time
from pathlib import Path

import stereoconf as sc


def run_seed(seed: int, args: argparse.Namespace) -> dict:
    scene = sc.gen_synthetic_scene(
        seed,
        outlier_frac=args.outlier_frac,
        noise_sigma=args.noise_sigma,
    )
    cfg = sc.TrainConfig(iterations=args.iterations)
    model_f, report_f = sc.train(cfg, scene, "focused")
    _, report_l1 = sc.train(cfg, scene, "plain_l1")

    pred, conf = sc.forward(model_f, scene.features)
    constant = sc.ConfidenceMap.constant(0.5, scene.height, scene.width)
    auc_learned = sc.auc(sc.sparsification(pred, scene.observed_disparity, conf))
    auc_constant = sc.auc(sc.sparsification(pred, scene.observed_disparity, constant))
    return {
        "seed": seed,
        "epe_focused": report_f.clean_epe,
        "epe_plain_l1": report_l1.clean_epe,
        "auc_learned": auc_learned,
        "auc_constant": auc_constant,
        "conf_clean": report_f.mean_conf_clean,
        "conf_corrupted": report_f.mean_conf_corrupted,
    }


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20, help="number of seeds, starting at 0")
    parser.add_argument("--iterations", type=int, default=2500)
    parser.add_argument("--outlier-frac", type=float, default=0.2)
    parser.add_argument("--noise-sigma", type=float, default=0.2)
    parser.add_argument("--out", type=Path, default=None, help="write per-seed JSON here")
    args = parser.parse_args(argv)

    t0 = time.time()
    rows = []
    print(f"{'seed':>4}  {'EPE focused':>11}  {'EPE plain-L1':>12}  "
          f"{'AUC learned':>11}  {'AUC const':>9}")
    for seed in range(args.seeds):
        row = run_seed(seed, args)
        rows.append(row)
        print(f"{row['seed']:>4}  {row['epe_focused']:>11.4f}  "
              f"{row['epe_plain_l1']:>12.4f}  {row['auc_learned']:>11.4f}  "
              f"{row['auc_constant']:>9.4f}")

    med_f = statistics.median(r["epe_focused"] for r in rows)
    med_l1 = statistics.median(r["epe_plain_l1"] for r in rows)
    auc_wins = sum(r["auc_learned"] < r["auc_constant"] for r in rows)
    print()
    print(f"median clean EPE: focused {med_f:.4f} vs plain-L1 {med_l1:.4f} "
          f"(gap {1 - med_f / med_l1:.1%})")
    print(f"confidence AUC wins over constant: {auc_wins}/{len(rows)}")
    print(f"wall clock: {time.time() - t0:.1f}s")

    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
