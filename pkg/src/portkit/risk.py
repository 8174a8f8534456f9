"""VaR / Expected Shortfall estimation and basic-bootstrap confidence intervals.

Loss convention: for a position of size S in an asset with per-period return
R, VaR(alpha) = -S * q(alpha) where q is the lower-tail return quantile, and
ES is the mean loss beyond that threshold. Four estimators are provided:
parametric location-scale Student-t, historical (order statistic), Gaussian,
and Cornish-Fisher ("modified") which adjusts the Gaussian quantile with
sample skewness and excess kurtosis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
from scipy.stats import norm, t as student_t

NU_CAP = 200.0


class RiskError(ValueError):
    """Raised for invalid risk-estimation inputs or failed fits."""


@dataclass(frozen=True)
class TFit:
    """Location-scale Student-t maximum-likelihood fit."""

    nu: float
    location: float
    scale: float

    def __post_init__(self):
        if not self.nu > 2:
            raise RiskError(f"degrees of freedom must exceed 2, got {self.nu}")
        if not self.scale > 0:
            raise RiskError("scale must be positive")


@dataclass(frozen=True)
class RiskEstimate:
    """Point VaR/ES at tail level alpha for a position of size S."""

    var: float
    es: float
    alpha: float
    position: float
    method: str

    def __post_init__(self):
        if not 0 < self.alpha <= 0.5:
            raise RiskError(f"alpha must be in (0, 0.5], got {self.alpha}")


@dataclass(frozen=True)
class BootstrapCI:
    """Basic bootstrap intervals for VaR and ES, deterministic given the seed."""

    point: RiskEstimate
    var_lower: float
    var_upper: float
    es_lower: float
    es_upper: float
    n_replicates: int
    seed: int
    method: str


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha <= 0.5:
        raise RiskError(f"alpha must be in (0, 0.5], got {alpha}")


def fit_student_t(returns: np.ndarray) -> TFit:
    """Maximum-likelihood location-scale t fit; nu is capped at 200 (~normal)."""
    x = np.asarray(returns, dtype=float)
    if x.size < 10:
        raise RiskError(f"need at least 10 observations, got {x.size}")
    s0 = x.std(ddof=1)
    if s0 <= 0:
        raise RiskError("degenerate data: zero variance")

    def negloglik(params):
        log_nu_m2, loc, log_scale = params
        nu = 2.0 + np.exp(log_nu_m2)
        scale = np.exp(log_scale)
        return -student_t.logpdf(x, df=nu, loc=loc, scale=scale).sum()

    res = scipy.optimize.minimize(
        negloglik,
        x0=np.array([np.log(4.0), x.mean(), np.log(s0 * 0.8)]),
        method="L-BFGS-B",
        options={"gtol": 1e-8, "maxiter": 2000},
    )
    if not res.success and np.linalg.norm(res.jac) > 1e-6 * max(abs(res.fun), 1.0):
        raise RiskError(f"t-fit did not converge: {res.message}")
    nu = min(2.0 + np.exp(res.x[0]), NU_CAP)
    return TFit(nu=float(nu), location=float(res.x[1]), scale=float(np.exp(res.x[2])))


def _t_tail_mean(nu: float, q: float, alpha: float) -> float:
    """E[X | X <= q] for a standard Student-t with q its alpha-quantile."""
    if nu <= 1:
        raise RiskError("expected shortfall undefined for nu <= 1")
    return -student_t.pdf(q, df=nu) * (nu + q * q) / ((nu - 1.0) * alpha)


def var_es_parametric_t(fit: TFit, position: float, alpha: float = 0.05) -> RiskEstimate:
    """Parametric VaR/ES from a fitted location-scale Student-t."""
    _check_alpha(alpha)
    q = student_t.ppf(alpha, df=fit.nu)
    var = -position * (fit.location + fit.scale * q)
    es = -position * (fit.location + fit.scale * _t_tail_mean(fit.nu, q, alpha))
    return RiskEstimate(var=var, es=es, alpha=alpha, position=position, method="parametric_t")


def var_es_historical(returns: np.ndarray, position: float, alpha: float = 0.05) -> RiskEstimate:
    """Historical VaR/ES: ceil(alpha*n)-th order statistic, tail indicator average."""
    _check_alpha(alpha)
    x = np.sort(np.asarray(returns, dtype=float))
    n = x.size
    if alpha * n < 1:
        raise RiskError(f"empty tail: alpha*n = {alpha * n:.3g} < 1")
    k = int(np.ceil(alpha * n))
    q = x[k - 1]
    tail = x[x <= q]
    return RiskEstimate(
        var=-position * q,
        es=-position * tail.mean(),
        alpha=alpha,
        position=position,
        method="historical",
    )


def var_es_gaussian(returns: np.ndarray, position: float, alpha: float = 0.05) -> RiskEstimate:
    """Gaussian VaR/ES from sample mean and standard deviation."""
    _check_alpha(alpha)
    x = np.asarray(returns, dtype=float)
    if x.size < 2:
        raise RiskError("need at least 2 observations")
    m = x.mean()
    s = x.std(ddof=1)
    if s == 0:
        return RiskEstimate(
            var=-position * m, es=-position * m, alpha=alpha,
            position=position, method="gaussian",
        )
    z = norm.ppf(alpha)
    return RiskEstimate(
        var=-position * (m + s * z),
        es=-position * (m - s * norm.pdf(z) / alpha),
        alpha=alpha,
        position=position,
        method="gaussian",
    )


def cornish_fisher_quantile(z: float, skew: float, exkurt: float) -> float:
    """Third-order Cornish-Fisher adjustment of a standard normal quantile."""
    return (
        z
        + (z * z - 1.0) * skew / 6.0
        + z * (z * z - 3.0) * exkurt / 24.0
        - z * (2.0 * z * z - 5.0) * skew * skew / 36.0
    )


def var_es_cornish_fisher(returns: np.ndarray, position: float, alpha: float = 0.05) -> RiskEstimate:
    """Modified VaR/ES: Gaussian formulas with the Cornish-Fisher quantile."""
    _check_alpha(alpha)
    x = np.asarray(returns, dtype=float)
    if x.size < 4:
        raise RiskError("need at least 4 observations")
    m = x.mean()
    s = x.std(ddof=1)
    if s == 0:
        return RiskEstimate(
            var=-position * m, es=-position * m, alpha=alpha,
            position=position, method="cornish_fisher",
        )
    centered = x - m
    m2 = (centered**2).mean()
    skew = (centered**3).mean() / m2**1.5
    exkurt = (centered**4).mean() / m2**2 - 3.0
    z = cornish_fisher_quantile(norm.ppf(alpha), skew, exkurt)
    return RiskEstimate(
        var=-position * (m + s * z),
        es=-position * (m - s * norm.pdf(z) / alpha),
        alpha=alpha,
        position=position,
        method="cornish_fisher",
    )


_METHODS = {
    "historical": var_es_historical,
    "gaussian": var_es_gaussian,
    "cornish_fisher": var_es_cornish_fisher,
}


def bootstrap_ci(
    returns: np.ndarray,
    position: float,
    alpha: float = 0.05,
    method: str = "historical",
    n_replicates: int = 500,
    seed: int = 0,
    max_retries: int = 10,
) -> BootstrapCI:
    """Basic bootstrap CI for VaR and ES.

    Draws `n_replicates` i.i.d.-with-replacement resamples, re-estimates
    VaR/ES on each by `method`, and forms the basic interval
    [2*theta_hat - q_0.975, 2*theta_hat - q_0.025] of the replicate values.
    Each replicate uses an indexed substream of the seed, so results are
    independent of evaluation order.
    """
    if n_replicates < 100:
        raise RiskError(f"need at least 100 bootstrap replicates, got {n_replicates}")
    if method not in _METHODS:
        raise RiskError(f"unknown bootstrap method {method!r}")
    estimator = _METHODS[method]
    x = np.asarray(returns, dtype=float)
    point = estimator(x, position, alpha)
    streams = np.random.SeedSequence(seed).spawn(n_replicates)
    var_reps = np.empty(n_replicates)
    es_reps = np.empty(n_replicates)
    for b, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        for attempt in range(max_retries):
            sample = rng.choice(x, size=x.size, replace=True)
            try:
                est = estimator(sample, position, alpha)
                break
            except RiskError:
                if attempt == max_retries - 1:
                    raise
        var_reps[b] = est.var
        es_reps[b] = est.es
    v_lo, v_hi = np.quantile(var_reps, [0.025, 0.975])
    e_lo, e_hi = np.quantile(es_reps, [0.025, 0.975])
    return BootstrapCI(
        point=point,
        var_lower=2 * point.var - v_hi,
        var_upper=2 * point.var - v_lo,
        es_lower=2 * point.es - e_hi,
        es_upper=2 * point.es - e_lo,
        n_replicates=n_replicates,
        seed=seed,
        method=method,
    )
