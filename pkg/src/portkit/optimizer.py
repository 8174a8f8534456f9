"""Mean-variance machinery: portfolio stats, min-variance/tangent weights, frontier.

Short positions are allowed throughout (the closed forms are unconstrained
apart from the budget constraint). All solves go through a condition-number
guarded symmetric factorization; ill-conditioning raises instead of silently
regularizing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .moments import MomentEstimate

COND_THRESHOLD = 1e12


class OptimizationError(ValueError):
    """Raised for singular or degenerate mean-variance problems."""


@dataclass(frozen=True)
class FrontierPoint:
    target_mu: float
    sigma_p: float
    weights: np.ndarray


def _solve_spd(sigma: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Cholesky solve with an explicit condition-number guard."""
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond > COND_THRESHOLD:
        raise OptimizationError(
            f"covariance ill-conditioned (condition number {cond:.3g} "
            f"> {COND_THRESHOLD:g})"
        )
    try:
        c, low = scipy.linalg.cho_factor(sigma)
    except scipy.linalg.LinAlgError as exc:
        raise OptimizationError(f"covariance not positive definite: {exc}") from None
    return scipy.linalg.cho_solve((c, low), rhs)


def portfolio_stats(w: np.ndarray, m: MomentEstimate, rf: float = 0.0) -> dict:
    """Portfolio mean, volatility and Sharpe ratio for weights summing to 1."""
    w = np.asarray(w, dtype=float)
    if w.shape != m.mu.shape:
        raise OptimizationError("weight vector dimension mismatch")
    mu_p = float(w @ m.mu)
    var_p = float(w @ m.sigma @ w)
    sigma_p = float(np.sqrt(max(var_p, 0.0)))
    if sigma_p == 0.0:
        sharpe = 0.0 if abs(mu_p - rf) < 1e-300 else float("nan")
    else:
        sharpe = (mu_p - rf) / sigma_p
    return {"mu_p": mu_p, "sigma_p": sigma_p, "sharpe": sharpe}


def min_variance_weights(m: MomentEstimate) -> np.ndarray:
    """Global minimum-variance weights w = Sigma^-1 1 / (1' Sigma^-1 1)."""
    ones = np.ones(m.n_assets)
    x = _solve_spd(m.sigma, ones)
    return x / (ones @ x)


def tangent_weights(m: MomentEstimate, rf: float = 0.0) -> np.ndarray:
    """Maximum-Sharpe weights w proportional to Sigma^-1 (mu - rf 1), sum 1."""
    excess = m.mu - rf
    if np.allclose(excess, 0.0):
        raise OptimizationError("expected excess returns are all zero")
    x = _solve_spd(m.sigma, excess)
    denom = x.sum()
    if abs(denom) < 1e-12 * np.abs(x).max():
        raise OptimizationError("tangency portfolio at infinity (weights sum to ~0)")
    return x / denom


def efficient_frontier(m: MomentEstimate, targets) -> list[FrontierPoint]:
    """Minimum-variance weights at each target mean (two-constraint closed form)."""
    ones = np.ones(m.n_assets)
    inv_ones = _solve_spd(m.sigma, ones)
    inv_mu = _solve_spd(m.sigma, m.mu)
    a = float(ones @ inv_ones)
    b = float(m.mu @ inv_ones)
    c = float(m.mu @ inv_mu)
    d = a * c - b * b
    if d <= 1e-16 * max(a * c, 1.0):
        raise OptimizationError("mu collinear with ones; frontier degenerate")
    points = []
    for target in np.asarray(targets, dtype=float):
        lam = (a * target - b) / d
        gam = (c - b * target) / d
        w = lam * inv_mu + gam * inv_ones
        var_p = float(w @ m.sigma @ w)
        points.append(
            FrontierPoint(
                target_mu=float(target),
                sigma_p=float(np.sqrt(max(var_p, 0.0))),
                weights=w,
            )
        )
    return points
