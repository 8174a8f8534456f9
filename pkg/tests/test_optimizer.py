import numpy as np
import pytest

from portkit.moments import MomentEstimate
from portkit.optimizer import (
    OptimizationError,
    efficient_frontier,
    min_variance_weights,
    portfolio_stats,
    tangent_weights,
)


def random_moments(rng, n=3, tag="MM"):
    a = rng.standard_normal((n, n))
    sigma = a @ a.T / n + 0.5 * np.eye(n)
    mu = 0.05 * rng.standard_normal(n) + 0.02
    return MomentEstimate(mu=mu, sigma=sigma, model_tag=tag)


def double_sum_variance(w, sigma):
    """Literal double-sum of the portfolio variance formula."""
    sd = np.sqrt(np.diag(sigma))
    corr = sigma / np.outer(sd, sd)
    n = len(w)
    total = sum(w[i] ** 2 * sigma[i, i] for i in range(n))
    total += sum(
        w[i] * w[j] * sd[i] * sd[j] * corr[i, j]
        for i in range(n)
        for j in range(n)
        if j != i
    )
    return total


class TestPortfolioStats:
    def test_corner_portfolio(self):
        m = MomentEstimate(
            mu=np.array([0.03, 0.01]),
            sigma=np.array([[0.04, 0.0], [0.0, 0.01]]),
            model_tag="MM",
        )
        stats = portfolio_stats(np.array([1.0, 0.0]), m)
        assert stats["mu_p"] == pytest.approx(0.03)
        assert stats["sigma_p"] == pytest.approx(0.2)

    def test_identity_half_half(self):
        m = MomentEstimate(mu=np.zeros(2), sigma=np.eye(2), model_tag="MM")
        stats = portfolio_stats(np.array([0.5, 0.5]), m)
        assert stats["sigma_p"] == pytest.approx(np.sqrt(0.5), rel=1e-14)

    def test_matches_double_sum_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = random_moments(rng)
            w = rng.standard_normal(3)
            w /= w.sum()
            stats = portfolio_stats(w, m)
            assert stats["sigma_p"] ** 2 == pytest.approx(
                double_sum_variance(w, m.sigma), abs=1e-12
            )

    def test_zero_sigma_undefined_sharpe(self):
        m = MomentEstimate(mu=np.array([0.02]), sigma=np.zeros((1, 1)), model_tag="MM")
        stats = portfolio_stats(np.array([1.0]), m, rf=0.0)
        assert np.isnan(stats["sharpe"])


class TestMinVariance:
    def test_identity_equal_weights(self):
        m = MomentEstimate(mu=np.zeros(4), sigma=np.eye(4), model_tag="MM")
        np.testing.assert_allclose(min_variance_weights(m), 0.25)

    def test_diag_1_4(self):
        m = MomentEstimate(
            mu=np.zeros(2), sigma=np.diag([1.0, 4.0]), model_tag="MM"
        )
        np.testing.assert_allclose(min_variance_weights(m), [0.8, 0.2], rtol=1e-12)

    def test_beats_random_simplex_points(self):
        rng = np.random.default_rng(12)
        m = random_moments(rng, n=4)
        w = min_variance_weights(m)
        best = w @ m.sigma @ w
        draws = rng.dirichlet(np.ones(4), size=1000)
        assert np.all(best <= np.einsum("ij,jk,ik->i", draws, m.sigma, draws) + 1e-12)

    def test_ill_conditioned_rejected(self):
        sigma = np.outer(np.ones(3), np.ones(3)) + 1e-14 * np.eye(3)
        m = MomentEstimate(mu=np.zeros(3), sigma=sigma, model_tag="MM")
        with pytest.raises(OptimizationError, match="condition"):
            min_variance_weights(m)


class TestTangent:
    def test_identity_equal_excess_gives_equal_weights(self):
        m = MomentEstimate(mu=np.full(3, 0.05), sigma=np.eye(3), model_tag="MM")
        np.testing.assert_allclose(tangent_weights(m, rf=0.01), 1 / 3)

    def test_diagonal_closed_form(self):
        sigma = np.diag([0.04, 0.01])
        mu = np.array([0.06, 0.03])
        rf = 0.01
        m = MomentEstimate(mu=mu, sigma=sigma, model_tag="MM")
        w = tangent_weights(m, rf)
        raw = (mu - rf) / np.diag(sigma)
        np.testing.assert_allclose(w, raw / raw.sum(), rtol=1e-12)

    def test_beats_random_sign_mixed_weights(self):
        rng = np.random.default_rng(13)
        m = random_moments(rng)
        rf = 0.005
        w = tangent_weights(m, rf)
        best = portfolio_stats(w, m, rf)["sharpe"]
        for _ in range(1000):
            v = rng.standard_normal(3)
            if abs(v.sum()) < 1e-8:
                continue
            v /= v.sum()
            assert portfolio_stats(v, m, rf)["sharpe"] <= best + 1e-10

    def test_scale_invariance(self):
        rng = np.random.default_rng(14)
        m = random_moments(rng)
        m2 = MomentEstimate(mu=m.mu, sigma=7.3 * m.sigma, model_tag="MM")
        np.testing.assert_allclose(
            tangent_weights(m, 0.01), tangent_weights(m2, 0.01), atol=1e-10
        )

    def test_zero_excess_rejected(self):
        m = MomentEstimate(mu=np.full(2, 0.01), sigma=np.eye(2), model_tag="MM")
        with pytest.raises(OptimizationError):
            tangent_weights(m, rf=0.01)


class TestFrontier:
    def test_min_variance_point(self):
        rng = np.random.default_rng(15)
        m = random_moments(rng)
        w_min = min_variance_weights(m)
        target = float(w_min @ m.mu)
        [pt] = efficient_frontier(m, [target])
        np.testing.assert_allclose(pt.weights, w_min, atol=1e-10)

    def test_discrete_convexity_of_variance(self):
        rng = np.random.default_rng(16)
        m = random_moments(rng, n=4)
        targets = np.linspace(m.mu.min(), m.mu.max(), 21)
        var = np.array([pt.sigma_p**2 for pt in efficient_frontier(m, targets)])
        second_diff = var[2:] - 2 * var[1:-1] + var[:-2]
        assert np.all(second_diff >= -1e-12)

    def test_beats_constrained_random_search(self):
        rng = np.random.default_rng(17)
        m = random_moments(rng)
        target = float(m.mu.mean())
        [pt] = efficient_frontier(m, [target])
        # random weights satisfying both constraints via 1-dof null space
        base = pt.weights
        ones = np.ones(3)
        null = np.cross(ones, m.mu)  # orthogonal to both constraint gradients
        for _ in range(1000):
            w = base + rng.standard_normal() * null
            assert w @ m.sigma @ w >= pt.sigma_p**2 - 1e-10

    def test_tangent_lies_on_frontier(self):
        rng = np.random.default_rng(18)
        m = random_moments(rng)
        rf = 0.004
        w = tangent_weights(m, rf)
        mu_p = float(w @ m.mu)
        [pt] = efficient_frontier(m, [mu_p])
        assert pt.sigma_p == pytest.approx(portfolio_stats(w, m)["sigma_p"], abs=1e-8)

    def test_collinear_mu_rejected(self):
        m = MomentEstimate(mu=np.full(3, 0.02), sigma=np.eye(3), model_tag="MM")
        with pytest.raises(OptimizationError, match="collinear"):
            efficient_frontier(m, [0.02])
