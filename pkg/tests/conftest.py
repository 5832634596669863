"""Shared fixtures.

The 20-seed focused-versus-L1 training sweep is the expensive part of the
suite; it runs once per session here and is consumed by both the module
tests and the acceptance tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

import stereoconf as sc

STANDARD_SEEDS = tuple(range(20))


@dataclass(frozen=True)
class SeedRun:
    """Everything the assertions need from one seed of the standard sweep."""

    seed: int
    focused_report: sc.TrainReport
    l1_report: sc.TrainReport
    auc_learned: float
    auc_constant: float


@pytest.fixture(scope="session")
def standard_runs() -> tuple[list[SeedRun], float]:
    """Train focused and plain-L1 on the standard scene for 20 seeds.

    Returns the per-seed records and the total wall-clock time, so the
    acceptance test can check the runtime budget of the sweep itself.
    """
    runs = []
    t0 = time.time()
    for seed in STANDARD_SEEDS:
        scene = sc.gen_synthetic_scene(seed)
        model_f, report_f = sc.train(sc.TrainConfig(), scene, "focused")
        _, report_l1 = sc.train(sc.TrainConfig(), scene, "plain_l1")

        pred, conf = sc.forward(model_f, scene.features)
        curve_learned = sc.sparsification(pred, scene.observed_disparity, conf)
        constant = sc.ConfidenceMap.constant(0.5, scene.height, scene.width)
        curve_constant = sc.sparsification(pred, scene.observed_disparity, constant)
        runs.append(
            SeedRun(
                seed,
                report_f,
                report_l1,
                sc.auc(curve_learned),
                sc.auc(curve_constant),
            )
        )
    return runs, time.time() - t0


@pytest.fixture(scope="session")
def clean_scene_runs() -> list[tuple[float, float]]:
    """(focused, plain_l1) clean-pixel EPE on scenes with no corruption."""
    out = []
    for seed in (0, 1):
        scene = sc.gen_synthetic_scene(seed, outlier_frac=0.0, noise_sigma=0.0)
        _, rf = sc.train(sc.TrainConfig(), scene, "focused")
        _, rl = sc.train(sc.TrainConfig(), scene, "plain_l1")
        out.append((rf.clean_epe, rl.clean_epe))
    return out


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
