import unittest

import numpy as np

from dsinfluence.corpus import load_snapshot
from dsinfluence.errors import (
    DataError,
    DegenerateFeatureError,
    InsufficientDataError,
    RankDeficiencyError,
)
from dsinfluence.metrics import regression_table
from dsinfluence.regression import (
    DESIGNS,
    BASELINE,
    DesignSpec,
    Term,
    Transform,
    breusch_pagan,
    build_design,
    ols_fit,
    robust_se,
    run_paper_regression,
    standardize,
    vif,
    white_test,
)
from dsinfluence.synthetic import NULL_TERMS, PLANTED_TERMS, planted_regression_rows, planted_snapshot
from dsinfluence.tools import spawn_seeds
from dsinfluence.unittests.mocks import fixture


def design(rng, n, slopes):
    X = np.column_stack([rng.normal(size=(n, slopes)), np.ones(n)])
    return X


class TestTransforms(unittest.TestCase):
    def test_standardize(self):
        values = standardize([1.0, 2.0, 3.0, 4.0])
        self.assertAlmostEqual(values.mean(), 0.0)
        self.assertAlmostEqual(values.std(), 1.0)
        with self.assertRaises(DegenerateFeatureError):
            standardize([2, 2, 2], "n_sensors")
        with self.assertRaises(InsufficientDataError):
            standardize([1.0])

    def test_design(self):
        rows = [
            {"dataset_id": "a", "x": 1, "cit_1y": 0},
            {"dataset_id": "b", "x": 2, "cit_1y": 1},
            {"dataset_id": "c", "x": None, "cit_1y": 5},
            {"dataset_id": "d", "x": 3, "cit_1y": 3},
        ]
        spec = DesignSpec((Term("x"),), quadratic_terms=("x",))
        built = build_design(rows, spec)
        self.assertEqual(built.names, ("x", "x^2", "intercept"))
        self.assertEqual(built.keys, ("a", "b", "d"))
        self.assertEqual(built.row_mask.tolist(), [True, True, False, True])
        np.testing.assert_allclose(built.y, np.log1p([0, 1, 3]))
        np.testing.assert_allclose(built.X[:, 1], built.X[:, 0] ** 2)
        with self.assertRaises(InsufficientDataError):
            build_design(rows[:1], spec)

    def test_spec_validation(self):
        with self.assertRaises(ValueError):
            DesignSpec((Term("x"), Term("x")))
        with self.assertRaises(ValueError):
            DesignSpec((Term("x"),), quadratic_terms=("y",))
        self.assertEqual(
            BASELINE.column_names,
            ("ref_h3", "aut_mu_h3", "a_pub", "n_sensors", "aas_3m", "aas_3m^2", "intercept"),
        )
        self.assertIn("n_cit3", DESIGNS["with_citations"].column_names)


class TestOls(unittest.TestCase):
    def test_noise_free(self):
        rng = np.random.default_rng(0)
        X = design(rng, 50, 3)
        beta = np.array([1.5, -2.0, 0.25, 4.0])
        result = ols_fit(X, X @ beta, ["a", "b", "c", "intercept"])
        np.testing.assert_allclose(result.coef, beta, atol=1e-8)
        self.assertLess(np.abs(result.residuals).max(), 1e-8)

    def test_against_normal_equations(self):
        rng = np.random.default_rng(1)
        X = design(rng, 80, 2)
        y = X @ np.array([1.0, 0.5, 2.0]) + rng.normal(0, 1 + np.abs(X[:, 0]), 80)
        result = ols_fit(X, y)
        xtx_inv = np.linalg.inv(X.T @ X)
        np.testing.assert_allclose(result.coef, xtx_inv @ X.T @ y, rtol=1e-9)
        residuals = y - X @ result.coef
        sigma2 = residuals @ residuals / (80 - 3)
        np.testing.assert_allclose(result.se, np.sqrt(np.diag(xtx_inv) * sigma2), rtol=1e-9)
        meat = X.T @ (X * residuals[:, None] ** 2)
        hc0 = np.sqrt(np.diag(xtx_inv @ meat @ xtx_inv))
        np.testing.assert_allclose(robust_se(X, residuals, "HC0"), hc0, rtol=1e-9)
        np.testing.assert_allclose(
            robust_se(X, residuals, "HC1"), hc0 * np.sqrt(80 / 77), rtol=1e-9
        )
        self.assertTrue(np.all(robust_se(X, residuals, "HC3") >= robust_se(X, residuals, "HC2")))
        with self.assertRaises(ValueError):
            robust_se(X, residuals, "HC9")

    def test_interval_coverage(self):
        beta = np.array([0.8, -0.3, 1.0])
        covered = total = 0
        for seed in spawn_seeds(2024, 1000):
            rng = np.random.default_rng(seed)
            X = design(rng, 200, 2)
            y = X @ beta + rng.normal(0, 1.0, 200)
            fit = ols_fit(X, y)
            se = robust_se(X, fit.residuals, "HC1")
            covered += int(np.sum(np.abs(fit.coef - beta) <= 1.96 * se))
            total += len(beta)
        self.assertAlmostEqual(covered / total, 0.95, delta=0.02)

    def test_rank_deficient(self):
        rng = np.random.default_rng(2)
        X = design(rng, 30, 2)
        X = np.column_stack([X[:, :2], X[:, 1], X[:, 2]])
        with self.assertRaises(RankDeficiencyError) as ctx:
            ols_fit(X, rng.normal(size=30), ["a", "b", "b_copy", "intercept"])
        self.assertEqual(ctx.exception.column, "b_copy")

    def test_too_few_observations(self):
        with self.assertRaises(InsufficientDataError):
            ols_fit(np.ones((2, 2)) + np.eye(2), [1.0, 2.0])


class TestVif(unittest.TestCase):
    def test_orthogonal(self):
        rng = np.random.default_rng(3)
        centered = rng.normal(size=(100, 3))
        centered -= centered.mean(axis=0)
        Q, _ = np.linalg.qr(centered)
        X = np.column_stack([Q, np.ones(100)])
        for value in vif(X).values():
            self.assertAlmostEqual(value, 1.0, delta=1e-8)

    def test_duplicate(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=40)
        result = vif(np.column_stack([x, x, rng.normal(size=40), np.ones(40)]), ["a", "b", "c", "i"])
        self.assertTrue(np.isinf(result["a"]))
        self.assertTrue(np.isinf(result["b"]))
        self.assertNotIn("i", result)

    def test_constant_regressor(self):
        rng = np.random.default_rng(6)
        X = np.column_stack([rng.normal(size=50), rng.normal(size=50), np.full(50, 3.0), np.ones(50)])
        result = vif(X, ["a", "b", "flat", "intercept"])
        self.assertEqual(list(result), ["a", "b", "flat"])
        self.assertTrue(np.isinf(result["flat"]))
        self.assertTrue(np.isfinite(result["a"]))

    def test_correlated(self):
        rng = np.random.default_rng(5)
        n = 10000
        x1 = rng.normal(size=n)
        x2 = 0.8 * x1 + 0.6 * rng.normal(size=n)
        result = vif(np.column_stack([x1, x2, np.ones(n)]))
        for value in result.values():
            self.assertAlmostEqual(value, 1 / (1 - 0.64), delta=0.1 / (1 - 0.64))


class TestHeteroskedasticity(unittest.TestCase):
    def rejection_rates(self, trials, n, noise, alpha, seed):
        bp = white = 0
        for child in spawn_seeds(seed, trials):
            rng = np.random.default_rng(child)
            x = rng.uniform(1, 10, size=(n, 2))
            X = np.column_stack([x, np.ones(n)])
            y = X @ np.array([0.5, -0.5, 1.0]) + noise(rng, x)
            residuals = ols_fit(X, y).residuals
            bp_test = breusch_pagan(X, residuals)
            white_result = white_test(X, residuals)
            self.assertGreaterEqual(bp_test.statistic, 0.0)
            self.assertGreaterEqual(white_result.statistic, 0.0)
            bp += bp_test.p < alpha
            white += white_result.p < alpha
        return bp / trials, white / trials

    def test_size(self):
        bp, white = self.rejection_rates(
            1000, 200, lambda rng, x: rng.normal(0, 1, len(x)), 0.05, 7
        )
        self.assertAlmostEqual(bp, 0.05, delta=0.02)
        self.assertAlmostEqual(white, 0.05, delta=0.02)

    def test_power(self):
        bp, white = self.rejection_rates(
            100, 500, lambda rng, x: rng.normal(0, 1, len(x)) * x[:, 0], 0.01, 8
        )
        self.assertGreaterEqual(bp, 0.95)
        self.assertGreaterEqual(white, 0.95)

    def test_interaction(self):
        bp_rejections = white_rejections = 0
        for child in spawn_seeds(9, 100):
            rng = np.random.default_rng(child)
            x = rng.uniform(-1, 1, size=(500, 2))
            X = np.column_stack([x, np.ones(500)])
            y = X @ np.array([1.0, 1.0, 0.0]) + rng.normal(size=500) * x[:, 0] * x[:, 1]
            residuals = ols_fit(X, y).residuals
            bp_rejections += breusch_pagan(X, residuals).p < 0.01
            white_rejections += white_test(X, residuals).p < 0.01
        self.assertGreaterEqual(white_rejections, 90)
        self.assertLess(bp_rejections, white_rejections)

    def test_white_drops_collinear_terms(self):
        rng = np.random.default_rng(10)
        dummy = rng.integers(0, 2, 60).astype(float)
        X = np.column_stack([dummy, rng.normal(size=60), np.ones(60)])
        residuals = rng.normal(size=60)
        result = white_test(X, residuals, ["dummy", "x", "intercept"])
        self.assertEqual(result.dropped, ("dummy^2",))
        self.assertEqual(result.df, 4)


class TestPaperRegression(unittest.TestCase):
    def test_planted_effects(self):
        runs = 200
        planted_hits = exact_hits = 0
        null_hits = {term: 0 for term in NULL_TERMS}
        for seed in spawn_seeds(11, runs):
            result = run_paper_regression(planted_regression_rows(np.random.default_rng(seed)))
            significant = {row.name for row in result.rows() if row.p < 0.01} - {"intercept"}
            planted_hits += set(PLANTED_TERMS) <= significant
            exact_hits += significant == set(PLANTED_TERMS)
            for term in NULL_TERMS:
                null_hits[term] += term in significant
        self.assertGreaterEqual(planted_hits, 0.95 * runs)
        self.assertGreaterEqual(exact_hits, 0.95 * runs)
        for term, hits in null_hits.items():
            self.assertLessEqual(hits, 0.05 * runs, term)

    def test_report_shape(self):
        result = run_paper_regression(planted_regression_rows(np.random.default_rng(12)))
        self.assertEqual(result.names, BASELINE.column_names)
        self.assertEqual(result.n_obs, 300)
        self.assertEqual(result.provenance["dependent"], "log1p(cit_1y)")
        self.assertEqual(result.provenance["covariance"], "HC1")
        self.assertEqual(set(result.diagnostics.vif), set(BASELINE.column_names) - {"intercept"})
        for row in result.rows():
            self.assertTrue(0.0 <= row.p <= 1.0)
            self.assertLess(row.ci_low, row.ci_high)
            self.assertAlmostEqual(row.z, row.coef / row.se)

    def test_planted_snapshot(self):
        rows = planted_regression_rows(np.random.default_rng(13), n=120, intercept=2.0)
        snapshot = planted_snapshot(np.random.default_rng(13), n=120)
        self.assertEqual(snapshot.validate(), [])
        table = regression_table(snapshot)
        self.assertEqual(len(table), 120)
        for planted, derived in zip(rows, table):
            self.assertEqual(derived["dataset_id"], planted["dataset_id"])
            for name in ("ref_h3", "aut_mu_h3", "a_pub", "n_sensors", "aas_3m"):
                self.assertEqual(derived[name], planted[name], name)
            self.assertEqual(derived["cit_1y"], round(planted["cit_1y"]))
        result = run_paper_regression(table)
        for term in PLANTED_TERMS:
            self.assertLess(result.row(term).p, 0.01, term)

    def test_golden_snapshot_is_too_small(self):
        rows = regression_table(load_snapshot(fixture("golden_snapshot.jsonl")))
        with self.assertRaises(DataError):
            run_paper_regression(rows)

    def test_identity_transform(self):
        rows = [{"x": float(i), "y": 2.0 * i + 1.0} for i in range(10)]
        spec = DesignSpec((Term("x", Transform.NONE),), dependent=Term("y", Transform.NONE))
        result = run_paper_regression(rows, spec)
        np.testing.assert_allclose(result.coef, [2.0, 1.0], atol=1e-9)
