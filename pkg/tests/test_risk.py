import numpy as np
import pytest
from scipy.stats import norm, t as student_t

from portkit.risk import (
    RiskError,
    TFit,
    bootstrap_ci,
    cornish_fisher_quantile,
    fit_student_t,
    var_es_cornish_fisher,
    var_es_gaussian,
    var_es_historical,
    var_es_parametric_t,
)


def standardized_normal_sample(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    return (x - x.mean()) / x.std(ddof=1)


class TestFitStudentT:
    def test_normal_data_gives_large_nu(self):
        x = 0.01 * np.random.default_rng(40).standard_normal(10_000)
        fit = fit_student_t(x)
        assert fit.nu >= 30

    def test_t5_recovery(self):
        x = student_t.rvs(df=5, size=10_000, random_state=np.random.default_rng(41))
        fit = fit_student_t(x)
        assert 3.5 <= fit.nu <= 7
        assert fit.scale == pytest.approx(1.0, rel=0.1)

    def test_location_near_median(self):
        x = student_t.rvs(df=6, size=10_000, random_state=np.random.default_rng(42))
        fit = fit_student_t(x)
        assert abs(fit.location - np.median(x)) <= 2 * fit.scale / np.sqrt(len(x))

    def test_degenerate_rejected(self):
        with pytest.raises(RiskError):
            fit_student_t(np.zeros(100))

    def test_too_short_rejected(self):
        with pytest.raises(RiskError):
            fit_student_t(np.arange(5.0))


class TestParametricT:
    def test_symmetric_median_zero_var(self):
        fit = TFit(nu=5.0, location=0.0, scale=0.02)
        est = var_es_parametric_t(fit, position=1.0, alpha=0.5)
        assert est.var == pytest.approx(0.0, abs=1e-12)

    def test_normal_limit(self):
        fit = TFit(nu=200.0, location=0.0, scale=1.0)
        est = var_es_parametric_t(fit, position=1.0, alpha=0.05)
        assert est.var == pytest.approx(1.645, rel=0.01)

    def test_es_exceeds_var(self):
        fit = TFit(nu=4.0, location=0.001, scale=0.015)
        est = var_es_parametric_t(fit, position=100.0, alpha=0.05)
        assert est.es > est.var

    def test_tail_mean_matches_quadrature(self):
        from scipy.integrate import quad

        nu, alpha = 6.0, 0.05
        q = student_t.ppf(alpha, df=nu)
        integral, _ = quad(lambda x: x * student_t.pdf(x, df=nu), -np.inf, q)
        fit = TFit(nu=nu, location=0.0, scale=1.0)
        est = var_es_parametric_t(fit, position=1.0, alpha=alpha)
        assert est.es == pytest.approx(-integral / alpha, rel=1e-8)


class TestHistorical:
    def test_four_point_hand_instance(self):
        est = var_es_historical(np.array([-0.05, -0.02, 0.01, 0.03]), 1.0, alpha=0.25)
        assert est.var == pytest.approx(0.05)
        assert est.es == pytest.approx(0.05)

    def test_constant_returns(self):
        est = var_es_historical(np.full(10, 0.02), position=3.0, alpha=0.2)
        assert est.var == pytest.approx(-0.06)
        assert est.es == pytest.approx(-0.06)

    def test_matches_parametric_on_large_t5(self):
        rng = np.random.default_rng(43)
        x = student_t.rvs(df=5, size=2_000_000, random_state=rng)
        est = var_es_historical(x, 1.0, alpha=0.05)
        true_var = -student_t.ppf(0.05, df=5)
        assert est.var == pytest.approx(true_var, rel=0.05)

    def test_empty_tail_rejected(self):
        with pytest.raises(RiskError):
            var_es_historical(np.array([0.01]), 1.0, alpha=0.05)


class TestGaussian:
    def test_standardized_closed_forms(self):
        x = standardized_normal_sample(5000, seed=44)
        est = var_es_gaussian(x, 1.0, alpha=0.05)
        assert est.var == pytest.approx(1.6449, abs=1e-3)
        assert est.es == pytest.approx(2.0627, abs=1e-3)

    def test_alpha_half_zero_var(self):
        x = standardized_normal_sample(1000, seed=45)
        est = var_es_gaussian(x, 1.0, alpha=0.5)
        assert est.var == pytest.approx(0.0, abs=1e-12)

    def test_es_geq_var(self):
        rng = np.random.default_rng(46)
        for _ in range(20):
            x = rng.standard_normal(200) * rng.uniform(0.5, 2) + rng.uniform(-1, 1)
            est = var_es_gaussian(x, 1.0, alpha=rng.uniform(0.01, 0.5))
            assert est.es >= est.var - 1e-12


class TestCornishFisher:
    def test_zero_skew_kurt_equals_gaussian(self):
        x = standardized_normal_sample(64, seed=47)
        # force exact zero third/fourth standardized cumulants via symmetrization
        x = np.concatenate([x, -x])
        m2 = ((x - x.mean()) ** 2).mean()
        exkurt = ((x - x.mean()) ** 4).mean() / m2**2 - 3.0
        cf = var_es_cornish_fisher(x, 1.0, alpha=0.05)
        g = var_es_gaussian(x, 1.0, alpha=0.05)
        # symmetrization kills skew exactly; compare via the quantile identity
        z = norm.ppf(0.05)
        z_cf = cornish_fisher_quantile(z, 0.0, exkurt)
        assert cf.var == pytest.approx(-(x.mean() + x.std(ddof=1) * z_cf), rel=1e-12)
        if abs(exkurt) < 1e-12:
            assert cf.var == pytest.approx(g.var, rel=1e-12)

    def test_polynomial_hand_evaluation(self):
        z = norm.ppf(0.05)
        skew, exkurt = -1.0, 3.0
        expected = (
            z
            + (z**2 - 1) * skew / 6
            + (z**3 - 3 * z) * exkurt / 24
            - (2 * z**3 - 5 * z) * skew**2 / 36
        )
        assert cornish_fisher_quantile(z, skew, exkurt) == pytest.approx(expected, rel=1e-14)

    def test_negative_skew_raises_var(self):
        rng = np.random.default_rng(48)
        x = -np.exp(0.5 * rng.standard_normal(20_000))  # left-skewed
        cf = var_es_cornish_fisher(x, 1.0, alpha=0.05)
        g = var_es_gaussian(x, 1.0, alpha=0.05)
        assert cf.var >= g.var


class TestBootstrap:
    def test_constant_returns_zero_width(self):
        ci = bootstrap_ci(np.full(50, 0.01), 1.0, method="historical", seed=1)
        assert ci.var_lower == pytest.approx(ci.var_upper)
        assert ci.var_lower == pytest.approx(-0.01)

    def test_lower_leq_upper(self):
        rng = np.random.default_rng(49)
        x = 0.01 * rng.standard_normal(300)
        for method in ("historical", "gaussian", "cornish_fisher"):
            ci = bootstrap_ci(x, 1.0, method=method, seed=2)
            assert ci.var_lower <= ci.var_upper
            assert ci.es_lower <= ci.es_upper

    def test_seed_reproducible(self):
        rng = np.random.default_rng(50)
        x = 0.01 * rng.standard_normal(200)
        a = bootstrap_ci(x, 1.0, method="historical", seed=9)
        b = bootstrap_ci(x, 1.0, method="historical", seed=9)
        assert (a.var_lower, a.var_upper, a.es_lower, a.es_upper) == (
            b.var_lower,
            b.var_upper,
            b.es_lower,
            b.es_upper,
        )

    def test_replicate_floor(self):
        with pytest.raises(RiskError):
            bootstrap_ci(np.ones(50), 1.0, n_replicates=50)

    def test_unknown_method(self):
        with pytest.raises(RiskError):
            bootstrap_ci(np.ones(50), 1.0, method="magic")


class TestConventions:
    @pytest.mark.parametrize("method", ["historical", "gaussian", "cornish_fisher"])
    def test_shift_and_homogeneity(self, method):
        from portkit.risk import _METHODS

        estimator = _METHODS[method]
        rng = np.random.default_rng(51)
        x = 0.02 * rng.standard_normal(500)
        base = estimator(x, 1.0, 0.05)
        shifted = estimator(x - 0.01, 1.0, 0.05)
        assert shifted.var == pytest.approx(base.var + 0.01, abs=1e-12)
        assert shifted.es == pytest.approx(base.es + 0.01, abs=1e-12)
        doubled = estimator(x, 2.0, 0.05)
        assert doubled.var == pytest.approx(2 * base.var, rel=1e-12)
        assert doubled.es == pytest.approx(2 * base.es, rel=1e-12)

    def test_parametric_shift_homogeneity(self):
        fit = TFit(nu=5.0, location=0.002, scale=0.01)
        base = var_es_parametric_t(fit, 1.0, 0.05)
        shifted = var_es_parametric_t(
            TFit(nu=5.0, location=fit.location - 0.01, scale=0.01), 1.0, 0.05
        )
        assert shifted.var == pytest.approx(base.var + 0.01, abs=1e-12)
        doubled = var_es_parametric_t(fit, 2.0, 0.05)
        assert doubled.es == pytest.approx(2 * base.es, rel=1e-12)
