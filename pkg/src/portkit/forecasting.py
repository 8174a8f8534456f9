"""Return forecasting: factor regression, ACF/PACF, ARMA + GARCH(1,1) residuals.

The factor model is OLS with backward elimination on p-values; its residuals
are handed to a joint ARMA(p,q) mean + GARCH(1,1) variance model estimated by
Gaussian quasi-maximum likelihood. ARMA stationarity/invertibility and the
GARCH constraints (omega > 0, alpha, beta >= 0, alpha + beta < 1) are
enforced through an unconstrained reparameterization, so the optimizer can
never leave the admissible region.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from scipy.stats import t as student_t

from .market_data import FactorPanel


class ForecastError(ValueError):
    """Raised for degenerate inputs or failed forecasting fits."""


@dataclass
class FactorModelFit:
    intercept: float
    coefficients: dict[str, float]
    p_values: dict[str, float]
    residuals: np.ndarray
    r_squared: float
    adjusted_r_squared: float

    @property
    def retained(self) -> tuple[str, ...]:
        return tuple(self.coefficients)

    def predict(self, factor_row: dict[str, float]) -> float:
        missing = [k for k in self.coefficients if k not in factor_row]
        if missing:
            raise ForecastError(f"missing factor values: {missing}")
        return self.intercept + sum(
            c * factor_row[name] for name, c in self.coefficients.items()
        )

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coefficients": self.coefficients,
            "p_values": self.p_values,
            "r_squared": self.r_squared,
            "adjusted_r_squared": self.adjusted_r_squared,
        }


def _ols_with_stats(y: np.ndarray, design: np.ndarray):
    t, k = design.shape
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = t - k
    if dof <= 0:
        raise ForecastError("not enough observations for the candidate set")
    s2 = resid @ resid / dof
    xtx_inv = np.linalg.pinv(design.T @ design)
    se = np.sqrt(np.maximum(np.diag(xtx_inv) * s2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = coef / se
    pvals = 2.0 * student_t.sf(np.abs(tstat), dof)
    pvals = np.where(se == 0, 0.0, pvals)
    return coef, resid, pvals


def fit_factor_regression(
    y: np.ndarray,
    f: FactorPanel,
    candidates: list[str],
    selection_alpha: float = 0.05,
) -> FactorModelFit:
    """OLS with intercept and backward elimination at `selection_alpha`.

    Repeatedly drops the candidate with the largest p-value until all retained
    p-values are <= selection_alpha. The intercept is never eliminated.
    """
    y = np.asarray(y, dtype=float)
    t = y.size
    if f.values.shape[0] != t:
        raise ForecastError("factor panel not aligned with the response")
    if t <= len(candidates) + 2:
        raise ForecastError("too few observations for the candidate set")
    cols = {name: f.column(name) for name in candidates}
    design_full = np.column_stack([cols[name] for name in candidates]) if candidates else None
    if candidates:
        centered = design_full - design_full.mean(axis=0)
        cond = np.linalg.cond(centered / np.maximum(centered.std(axis=0), 1e-300))
        if cond > 1e8:
            corr = np.corrcoef(design_full, rowvar=False)
            np.fill_diagonal(np.atleast_2d(corr), 0.0)
            i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
            raise ForecastError(
                f"collinear candidates (condition number {cond:.3g}): "
                f"{candidates[i]} vs {candidates[j]}"
            )

    retained = list(candidates)
    while True:
        design = np.column_stack([np.ones(t)] + [cols[name] for name in retained])
        coef, resid, pvals = _ols_with_stats(y, design)
        if not retained:
            break
        factor_pvals = pvals[1:]
        worst = int(np.argmax(factor_pvals))
        if factor_pvals[worst] <= selection_alpha:
            break
        retained.pop(worst)

    tss = float(((y - y.mean()) ** 2).sum())
    rss = float(resid @ resid)
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    k = len(retained)
    adj = 1.0 - (1.0 - r2) * (t - 1) / (t - k - 1) if k else r2
    return FactorModelFit(
        intercept=float(coef[0]),
        coefficients={name: float(c) for name, c in zip(retained, coef[1:])},
        p_values={name: float(p) for name, p in zip(retained, pvals[1:])},
        residuals=resid,
        r_squared=r2,
        adjusted_r_squared=adj,
    )


def acf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags 0..max_lag (lag 0 is exactly 1)."""
    x = np.asarray(series, dtype=float)
    t = x.size
    if t <= max_lag + 1:
        raise ForecastError("series too short for requested max_lag")
    centered = x - x.mean()
    denom = centered @ centered
    if denom == 0:
        raise ForecastError("zero-variance series")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = centered[k:] @ centered[:-k] / denom
    return out


def pacf(series: np.ndarray, max_lag: int) -> np.ndarray:
    """Partial autocorrelations for lags 0..max_lag via Durbin-Levinson."""
    rho = acf(series, max_lag)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    phi_prev = np.empty(0)
    den = 1.0
    for k in range(1, max_lag + 1):
        num = rho[k] - (phi_prev @ rho[1:k][::-1] if k > 1 else 0.0)
        pk = num / den
        out[k] = pk
        phi = np.empty(k)
        phi[:-1] = phi_prev - pk * phi_prev[::-1]
        phi[-1] = pk
        den *= 1.0 - pk * pk
        phi_prev = phi
        if den <= 1e-12:
            out[k + 1 :] = 0.0
            break
    return out


def _pacf_to_coeffs(pacs: np.ndarray) -> np.ndarray:
    """Durbin-Levinson map from partial autocorrelations in (-1,1) to a
    stationary AR (or invertible MA) coefficient vector."""
    phi = np.empty(0)
    for pk in pacs:
        new = np.empty(phi.size + 1)
        new[:-1] = phi - pk * phi[::-1]
        new[-1] = pk
        phi = new
    return phi


@dataclass
class ArmaGarchFit:
    p: int
    q: int
    const: float
    ar: np.ndarray
    ma: np.ndarray
    omega: float
    alpha: float
    beta: float
    cond_variance: np.ndarray
    std_residuals: np.ndarray
    log_likelihood: float
    # state needed for one-step forecasting
    last_values: np.ndarray = field(default=None)  # last p observations, newest last
    last_innovations: np.ndarray = field(default=None)  # last q innovations

    def __post_init__(self):
        if not self.omega > 0 or self.alpha < 0 or self.beta < 0:
            raise ForecastError("GARCH parameters violate positivity")
        if not self.alpha + self.beta < 1:
            raise ForecastError("GARCH persistence alpha+beta must be < 1")

    def next_variance(self) -> float:
        e = self.std_residuals[-1] * np.sqrt(self.cond_variance[-1])
        return self.omega + self.alpha * e * e + self.beta * self.cond_variance[-1]

    def next_mean(self) -> float:
        mean = self.const
        if self.p:
            mean += self.ar @ self.last_values[::-1]
        if self.q:
            mean += self.ma @ self.last_innovations[::-1]
        return float(mean)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "const": self.const,
            "ar": self.ar.tolist(),
            "ma": self.ma.tolist(),
            "omega": self.omega,
            "alpha": self.alpha,
            "beta": self.beta,
            "log_likelihood": self.log_likelihood,
        }


def _arma_innovations(y, const, ar, ma, y_pre):
    """Conditional (CSS) innovations; presample y is the sample mean, e is 0."""
    t = y.size
    p, q = ar.size, ma.size
    if q == 0:
        e = y - const
        for i in range(1, p + 1):
            lagged = np.concatenate([np.full(i, y_pre), y[:-i]])
            e = e - ar[i - 1] * lagged
        return e
    e = np.empty(t)
    for k in range(t):
        acc = y[k] - const
        for i in range(1, p + 1):
            acc -= ar[i - 1] * (y[k - i] if k - i >= 0 else y_pre)
        for j in range(1, q + 1):
            if k - j >= 0:
                acc -= ma[j - 1] * e[k - j]
        e[k] = acc
    return e


def _garch_filter(e, omega, alpha, beta, h1):
    h = np.empty(e.size)
    h[0] = h1
    e2 = e * e
    for k in range(1, e.size):
        h[k] = omega + alpha * e2[k - 1] + beta * h[k - 1]
    return h


def _unpack(params, p, q, var_scale):
    const = params[0]
    ar = _pacf_to_coeffs(np.tanh(params[1 : 1 + p])) if p else np.empty(0)
    ma = _pacf_to_coeffs(np.tanh(params[1 + p : 1 + p + q])) if q else np.empty(0)
    g = params[1 + p + q :]
    omega = var_scale * np.exp(np.clip(g[0], -40, 40))
    persistence = (1.0 - 1e-8) / (1.0 + np.exp(-g[1]))
    frac = 1.0 / (1.0 + np.exp(-g[2]))
    alpha = persistence * frac
    beta = persistence * (1.0 - frac)
    return const, ar, ma, omega, alpha, beta


def fit_arma_garch(residuals: np.ndarray, p: int = 0, q: int = 0) -> ArmaGarchFit:
    """Joint ARMA(p,q) + GARCH(1,1) fit by Gaussian quasi-maximum likelihood.

    Orders are caller-supplied. The filter conditions on presample values
    (sample mean for observations, zero for innovations) and initializes the
    conditional variance at the sample variance of the input.
    """
    y = np.asarray(residuals, dtype=float)
    t = y.size
    if t < 50 * max(p, q, 1):
        raise ForecastError(f"need at least {50 * max(p, q, 1)} observations, got {t}")
    y_pre = y.mean()
    var0 = y.var()
    if var0 <= 0:
        raise ForecastError("degenerate input: zero variance")

    def negloglik(params):
        const, ar, ma, omega, alpha, beta = _unpack(params, p, q, var0)
        e = _arma_innovations(y, const, ar, ma, y_pre)
        h = _garch_filter(e, omega, alpha, beta, var0)
        return 0.5 * np.sum(np.log(2.0 * np.pi * h) + e * e / h)

    x0 = np.zeros(1 + p + q + 3)
    x0[0] = y_pre
    x0[-3] = np.log(0.05)  # omega ~ 5% of sample variance
    x0[-2] = 2.0  # persistence ~ 0.88
    x0[-1] = -2.0  # alpha fraction ~ 0.12
    res = scipy.optimize.minimize(
        negloglik,
        x0,
        method="L-BFGS-B",
        options={"ftol": 1e-12, "gtol": 1e-8, "maxiter": 3000, "maxfun": 20000},
    )
    if not np.isfinite(res.fun):
        raise ForecastError(f"ARMA+GARCH fit diverged: {res.message}")
    const, ar, ma, omega, alpha, beta = _unpack(res.x, p, q, var0)
    e = _arma_innovations(y, const, ar, ma, y_pre)
    h = _garch_filter(e, omega, alpha, beta, var0)
    return ArmaGarchFit(
        p=p,
        q=q,
        const=float(const),
        ar=ar,
        ma=ma,
        omega=float(omega),
        alpha=float(alpha),
        beta=float(beta),
        cond_variance=h,
        std_residuals=e / np.sqrt(h),
        log_likelihood=float(-res.fun),
        last_values=y[-p:] if p else np.empty(0),
        last_innovations=e[-q:] if q else np.empty(0),
    )


def one_step_forecast(
    fit: ArmaGarchFit,
    factor_fit: FactorModelFit,
    next_factors: dict[str, float],
) -> dict:
    """One-step-ahead mean and variance of the modeled return.

    Mean is the factor-model prediction at `next_factors` plus the ARMA
    one-step residual mean; variance is the GARCH recursion
    omega + alpha*e_T^2 + beta*h_T.
    """
    return {
        "mean": factor_fit.predict(next_factors) + fit.next_mean(),
        "variance": fit.next_variance(),
    }


def evaluate_forecasts(actual: np.ndarray, predicted: np.ndarray) -> dict:
    """RMSE, MAE and sign hit-rate of a forecast series."""
    a = np.asarray(actual, dtype=float)
    f = np.asarray(predicted, dtype=float)
    if a.size == 0 or a.shape != f.shape:
        raise ForecastError("actual and predicted must be equal-length, nonempty")
    err = f - a
    return {
        "rmse": float(np.sqrt((err**2).mean())),
        "mae": float(np.abs(err).mean()),
        "hit_rate": float((np.sign(a) == np.sign(f)).mean()),
    }
