"""Tests for the evaluation metrics, pinned against exact-rational and
brute-force oracles."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

import stereoconf as sc
from stereoconf.metrics import DEFAULT_DENSITIES

from _oracles import auc_oracle, sparsification_oracle

# Frozen from a 50-digit decimal evaluation of e + (1-e)ln(1-e); the
# reference values are rounded to 4 decimals.
AUC_OPT_PAIRS = [
    (0.1420, 0.0106),
    (0.1409, 0.0104),
    (0.1337, 0.0094),
    (0.1466, 0.0113),
    (0.1499, 0.0118),
    (0.4402, 0.1154),
]


def random_triple(rng, shape=(32, 32), conf_correlated=False):
    gt = sc.DisparityMap(rng.uniform(0, 80, shape), rng.random(shape) > 0.15)
    noise = rng.standard_normal(shape) * rng.uniform(0.2, 3.0)
    pred = sc.DisparityMap(gt.values + noise, rng.random(shape) > 0.1)
    if conf_correlated:
        conf_values = 1.0 / (1.0 + np.abs(noise))
    else:
        conf_values = rng.random(shape)
    return pred, gt, sc.ConfidenceMap(conf_values)


class TestEpeAndErrorRate:
    def test_perfect(self):
        gt = sc.DisparityMap.full(np.arange(12.0).reshape(3, 4))
        assert sc.epe(gt, gt) == 0.0
        assert sc.error_rate(gt, gt, 1.0) == 0.0

    def test_constant_offset(self):
        gt = sc.DisparityMap.full(np.arange(12.0).reshape(3, 4))
        pred = sc.DisparityMap.full(gt.values + 2.5)
        assert sc.epe(pred, gt) == pytest.approx(2.5)

    def test_hand_mean_with_invalid(self):
        # valid abs errors (1, 2, 6) plus one invalid pixel -> mean 3.0
        gt = sc.DisparityMap(np.zeros((2, 2)), np.array([[True, True], [True, False]]))
        pred = sc.DisparityMap.full(np.array([[1.0, 2.0], [6.0, 50.0]]))
        assert sc.epe(pred, gt) == pytest.approx(3.0)

    def test_error_rate_strict_inequality(self):
        gt = sc.DisparityMap.full(np.zeros((1, 4)))
        pred = sc.DisparityMap.full(np.array([[0.5, 1.5, 3.5, 0.0]]))
        assert sc.error_rate(pred, gt, 1.0) == pytest.approx(0.5)
        assert sc.error_rate(pred, gt, 3.0) == pytest.approx(0.25)
        # an error sitting exactly at t does not count
        assert sc.error_rate(pred, gt, 3.5) == 0.0

    def test_rejects_nonpositive_threshold(self):
        gt = sc.DisparityMap.full(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            sc.error_rate(gt, gt, 0.0)

    def test_empty_joint_mask(self):
        a = sc.DisparityMap(np.zeros((2, 2)), np.zeros((2, 2), dtype=bool))
        with pytest.raises(sc.EmptyMaskError):
            sc.epe(a, a)


class TestSparsification:
    def test_all_correct(self):
        gt = sc.DisparityMap.full(np.zeros((4, 4)))
        pred = sc.DisparityMap.full(np.full((4, 4), 0.3))
        conf = sc.ConfidenceMap(np.random.default_rng(0).random((4, 4)))
        curve = sc.sparsification(pred, gt, conf)
        assert np.all(curve.error_rates == 0.0)

    def test_two_wrong_ranked_lowest(self):
        # 10 pixels, 2 wrong, confidence puts the wrong ones last: the
        # error rate stays 0 through d=0.8 (exactly 8 pixels taken) and
        # becomes (n_taken - 8)/n_taken afterwards.
        errors = np.array([0.0] * 8 + [5.0, 7.0])
        conf = np.linspace(1.0, 0.1, 10)
        curve = sc.sparsification_from_arrays(
            errors, conf, theta=1.0, densities=[0.2, 0.5, 0.8, 0.9, 1.0]
        )
        np.testing.assert_array_equal(curve.error_rates[:3], [0.0, 0.0, 0.0])
        assert curve.error_rates[3] == pytest.approx(1.0 / 9.0)
        assert curve.error_rates[4] == pytest.approx(2.0 / 10.0)

    def test_last_point_is_full_density_rate(self, rng):
        pred, gt, conf = random_triple(rng)
        curve = sc.sparsification(pred, gt, conf, theta=1.0)
        assert curve.error_rates[-1] == pytest.approx(
            sc.error_rate(pred, gt, 1.0), abs=0
        )

    def test_matches_exact_oracle(self, rng):
        for _ in range(25):
            n = int(rng.integers(3, 60))
            errors = rng.uniform(0, 4, n)
            conf = rng.choice(np.linspace(0, 1, 7), size=n)  # force ties
            densities = sorted(set(rng.choice(DEFAULT_DENSITIES, size=5).tolist()) | {1.0})
            curve = sc.sparsification_from_arrays(errors, conf, 1.0, densities)
            oracle = sparsification_oracle(errors.tolist(), conf.tolist(), 1.0, densities)
            for (d, rate), (od, orate) in zip(curve.points, oracle):
                assert abs(rate - float(orate)) < 1e-12

    def test_statistical_oracle_uninformative_confidence(self):
        # with confidence independent of error, the expected curve is flat
        # at the full-density rate
        rng = np.random.default_rng(42)
        errors = (np.arange(200) < 46).astype(float) * 3.0  # 46/200 wrong
        epsilon = 0.23
        rates = np.empty((1000, len(DEFAULT_DENSITIES)))
        for trial in range(1000):
            conf = rng.random(200)
            curve = sc.sparsification_from_arrays(errors, conf, 1.0, DEFAULT_DENSITIES)
            rates[trial] = curve.error_rates
        mean = rates.mean(axis=0)
        se = rates.std(axis=0, ddof=1) / np.sqrt(1000)
        # the d=1.0 column is deterministic (se = 0): compare exactly
        assert mean[-1] == pytest.approx(epsilon)
        for j in range(len(DEFAULT_DENSITIES) - 1):
            assert abs(mean[j] - epsilon) <= 3.0 * se[j]

    def test_monotone_transform_invariance(self, rng):
        pred, gt, conf = random_triple(rng, conf_correlated=True)
        curve = sc.sparsification(pred, gt, conf)
        for transform in (lambda x: x**3, lambda x: np.expm1(x) / np.expm1(1.0)):
            warped = sc.ConfidenceMap(transform(conf.values))
            warped_curve = sc.sparsification(pred, gt, warped)
            np.testing.assert_array_equal(curve.points, warped_curve.points)

    def test_rejects_bad_densities(self, rng):
        pred, gt, conf = random_triple(rng, shape=(4, 4))
        for densities in ([0.5, 0.2, 1.0], [0.0, 1.0], [0.5, 1.2], [0.3, 0.9]):
            with pytest.raises(ValueError):
                sc.sparsification(pred, gt, conf, densities=densities)


class TestAuc:
    def test_trivial_curves(self):
        zero = sc.SparsificationCurve(np.array([[0.5, 0.0], [1.0, 0.0]]), 1.0)
        assert sc.auc(zero) == 0.0
        const = sc.SparsificationCurve(
            np.column_stack([np.linspace(0.1, 1.0, 10), np.full(10, 0.37)]), 1.0
        )
        assert sc.auc(const) == pytest.approx(0.37)

    def test_two_point_hand_example(self):
        curve = sc.SparsificationCurve(np.array([[0.5, 0.0], [1.0, 0.2]]), 1.0)
        assert sc.auc(curve) == pytest.approx(0.05)

    def test_matches_exact_oracle_on_random_maps(self, rng):
        for _ in range(100):
            pred, gt, conf = random_triple(rng, shape=(32, 32))
            curve = sc.sparsification(pred, gt, conf)
            mask = pred.valid & gt.valid
            oracle_points = sparsification_oracle(
                np.abs(pred.values - gt.values)[mask].tolist(),
                conf.values[mask].tolist(),
                1.0,
                list(DEFAULT_DENSITIES),
            )
            assert abs(sc.auc(curve) - float(auc_oracle(oracle_points))) < 1e-12

    def test_oracle_confidence_is_minimal_exhaustive(self):
        # brute force over every confidence ordering of small instances
        rng = np.random.default_rng(7)
        for n in (6, 8):
            errors = rng.uniform(0, 3, n)
            errors[rng.permutation(n)[: n // 2]] += 2.0  # guarantee a mix
            densities = np.arange(1, n + 1) / n
            wrong = (errors > 1.0).astype(np.float64)

            perms = np.array(list(itertools.permutations(range(n))))
            prefix_wrong = np.cumsum(wrong[perms], axis=1)
            takes = np.arange(1, n + 1)
            rates = prefix_wrong / takes
            d = densities
            areas = d[0] * rates[:, 0] + np.sum(
                (d[1:] - d[:-1]) * (rates[:, 1:] + rates[:, :-1]) * 0.5, axis=1
            )

            oracle_conf = 1.0 / (1.0 + errors)  # ranks by true error
            curve = sc.sparsification_from_arrays(errors, oracle_conf, 1.0, densities)
            oracle_auc = sc.auc(curve)
            assert oracle_auc <= areas.min() + 1e-12
            assert oracle_auc == pytest.approx(areas.min(), abs=1e-12)


class TestAucOpt:
    def test_limits(self):
        assert sc.auc_opt(0.0) == 0.0
        assert sc.auc_opt(1.0) == 1.0

    @pytest.mark.parametrize("epsilon,expected", AUC_OPT_PAIRS)
    def test_reference_pairs(self, epsilon, expected):
        assert sc.auc_opt(epsilon) == pytest.approx(expected, abs=5e-4)

    def test_rejects_out_of_range(self):
        for epsilon in (-0.01, 1.01):
            with pytest.raises(ValueError):
                sc.auc_opt(epsilon)

    def test_closed_form_approaches_oracle_auc(self):
        # the closed form is the dense-grid limit of the oracle ranking's
        # area: the gap shrinks as the density grid refines
        rng = np.random.default_rng(3)
        gaps = []
        for n in (100, 10000):
            errors = rng.uniform(0, 0.5, n)
            errors[: int(0.3 * n)] += 2.0
            oracle_conf = 1.0 / (1.0 + errors)
            densities = np.arange(1, n + 1) / n
            curve = sc.sparsification_from_arrays(errors, oracle_conf, 1.0, densities)
            oracle_auc = sc.auc(curve)
            opt = sc.auc_opt(float(curve.error_rates[-1]))
            assert opt <= oracle_auc + 3.0 / n
            gaps.append(abs(oracle_auc - opt))
        assert gaps[1] < gaps[0] / 10


class TestAucRatio:
    def test_zero_over_zero(self):
        assert sc.auc_ratio(0.0, 0.0) == 0.0

    def test_plain_division(self):
        assert sc.auc_ratio(0.0094, 0.0588) == pytest.approx(0.1599, abs=5e-4)
        assert sc.auc_ratio(0.0106, 0.0478) == pytest.approx(0.2218, abs=5e-4)


class TestEvaluate:
    def test_perfect_prediction(self):
        gt = sc.DisparityMap.full(np.arange(16.0).reshape(4, 4))
        conf = sc.ConfidenceMap(np.full((4, 4), 0.8))
        report = sc.evaluate(gt, gt, conf)
        assert report.epe == 0.0
        assert all(rate == 0.0 for rate in report.error_rates.values())
        assert report.auc == 0.0
        assert report.auc_opt == 0.0
        assert report.ratio == 0.0  # 0/0 defined as 0
        assert report.n_valid == 16

    def test_without_confidence(self, rng):
        pred, gt, _ = random_triple(rng)
        report = sc.evaluate(pred, gt)
        assert report.auc is None and report.auc_opt is None and report.ratio is None
        d = report.to_json_dict()
        assert "auc" not in d and "auc_opt" not in d and "ratio" not in d

    def test_fields_match_components(self, rng):
        pred, gt, conf = random_triple(rng, shape=(16, 16))
        report = sc.evaluate(pred, gt, conf)
        assert report.epe == pytest.approx(sc.epe(pred, gt))
        for t in (1.0, 3.0, 5.0):
            assert report.error_rates[t] == pytest.approx(sc.error_rate(pred, gt, t))
        curve = sc.sparsification(pred, gt, conf)
        assert report.auc == pytest.approx(sc.auc(curve))
        assert report.auc_opt == pytest.approx(sc.auc_opt(sc.error_rate(pred, gt, 1.0)))
        assert report.ratio == pytest.approx(sc.auc_ratio(report.auc_opt, report.auc))

    def test_invalid_padding_leaves_report_unchanged(self, rng):
        pred, gt, conf = random_triple(rng, shape=(9, 9))
        report = sc.evaluate(pred, gt, conf)

        def pad_disp(m):
            return sc.DisparityMap(np.pad(m.values, 3), np.pad(m.valid, 3))

        padded = sc.evaluate(
            pad_disp(pred), pad_disp(gt), sc.ConfidenceMap(np.pad(conf.values, 3))
        )
        assert padded == report


class TestAggregate:
    def test_single_report_is_identity(self, rng):
        pred, gt, conf = random_triple(rng)
        report = sc.evaluate(pred, gt, conf)
        epsilon = sc.error_rate(pred, gt, 1.0)
        agg = sc.aggregate([report], [epsilon])
        assert agg.epe == pytest.approx(report.epe)
        assert agg.auc == pytest.approx(report.auc)
        assert agg.auc_opt == pytest.approx(report.auc_opt)
        assert agg.n_valid == report.n_valid

    def test_equal_size_epsilon_mean(self):
        r1 = sc.EvalReport(1.0, {1.0: 0.1}, 100, auc=0.2, auc_opt=0.01, ratio=0.05)
        r2 = sc.EvalReport(2.0, {1.0: 0.2}, 100, auc=0.4, auc_opt=0.03, ratio=0.075)
        agg = sc.aggregate([r1, r2], [0.1, 0.2])
        assert agg.auc_opt == pytest.approx(sc.auc_opt(0.15))
        assert agg.auc == pytest.approx(0.3)  # unweighted mean
        assert agg.epe == pytest.approx(1.5)
        assert agg.n_valid == 200

    def test_pixel_weighted_means(self):
        r1 = sc.EvalReport(1.0, {1.0: 0.0}, 300)
        r2 = sc.EvalReport(4.0, {1.0: 1.0}, 100)
        agg = sc.aggregate([r1, r2], [0.0, 1.0])
        assert agg.epe == pytest.approx(1.75)  # (300*1 + 100*4)/400
        assert agg.error_rates[1.0] == pytest.approx(0.25)
        assert agg.auc is None  # a report without auc poisons the mean

    def test_dataset_epsilon_reproduces_reference_value(self):
        reports = [
            sc.EvalReport(1.0, {1.0: 0.1337}, 500, auc=0.05, auc_opt=0.009, ratio=0.2)
            for _ in range(4)
        ]
        agg = sc.aggregate(reports, [0.1337] * 4)
        assert agg.auc_opt == pytest.approx(0.0094, abs=5e-4)

    def test_rejects_empty_and_mismatched(self):
        with pytest.raises(ValueError):
            sc.aggregate([], [])
        r = sc.EvalReport(1.0, {1.0: 0.1}, 10)
        with pytest.raises(ValueError):
            sc.aggregate([r], [0.1, 0.2])


class TestSparsificationCurveType:
    def test_rejects_unsorted_and_wrong_tail(self):
        with pytest.raises(ValueError):
            sc.SparsificationCurve(np.array([[0.8, 0.0], [0.5, 0.0]]), 1.0)
        with pytest.raises(ValueError):
            sc.SparsificationCurve(np.array([[0.5, 0.0], [0.9, 0.0]]), 1.0)
        with pytest.raises(ValueError):
            sc.SparsificationCurve(np.zeros((0, 2)), 1.0)
