"""Expected-return / covariance estimation under four models.

Models: sample moments (MM), constant correlation (CCM), single index (SIM)
and the Fama-French three-factor model (MFM). SIM/MFM covariances follow the
factor structure with residual variance added to the diagonal by default
(without it the matrix has rank <= #factors and tangent solves are singular);
pass ``exclude_residual_diag=True`` for the bare factor covariance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .market_data import FactorPanel, ReturnFrame


class EstimationError(ValueError):
    """Raised when a moment model cannot be fit on the given data."""


@dataclass(frozen=True)
class MomentEstimate:
    """Per-period expected returns and covariance with the producing model's tag."""

    mu: np.ndarray
    sigma: np.ndarray
    model_tag: str

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        n = mu.shape[0]
        if sigma.shape != (n, n):
            raise EstimationError("sigma shape does not match mu")
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(sigma)):
            raise EstimationError("non-finite moment estimate")
        if not np.allclose(sigma, sigma.T, atol=1e-12):
            raise EstimationError("sigma is not symmetric")
        eig = np.linalg.eigvalsh(sigma)
        if eig[0] < -1e-10 * max(eig[-1], 1e-300):
            raise EstimationError(f"sigma not numerically PSD (min eigenvalue {eig[0]:g})")

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]

    def to_dict(self) -> dict:
        return {
            "model_tag": self.model_tag,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }


@dataclass(frozen=True)
class IndexFit:
    """Per-asset OLS fit of returns on a single market index."""

    alpha: np.ndarray
    beta: np.ndarray
    residual_variance: np.ndarray
    market_variance: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "residual_variance": self.residual_variance.tolist(),
            "market_variance": self.market_variance,
        }


@dataclass(frozen=True)
class FfFit:
    """Per-asset OLS fit of excess returns on market/SMB/HML factors."""

    alpha: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray
    residual_variance: np.ndarray
    factor_variances: np.ndarray  # (var mkt excess, var smb, var hml)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta1": self.beta1.tolist(),
            "beta2": self.beta2.tolist(),
            "beta3": self.beta3.tolist(),
            "residual_variance": self.residual_variance.tolist(),
            "factor_variances": self.factor_variances.tolist(),
        }


def sample_moments(r: ReturnFrame) -> MomentEstimate:
    """Column means and the unbiased sample covariance (tag MM)."""
    x = r.returns
    if x.shape[0] < 2:
        raise EstimationError("need at least 2 return rows")
    mu = x.mean(axis=0)
    sigma = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    return MomentEstimate(mu=mu, sigma=sigma, model_tag="MM")


def constant_correlation_moments(r: ReturnFrame) -> MomentEstimate:
    """Replace every pairwise correlation with the average correlation (tag CCM)."""
    x = r.returns
    n = x.shape[1]
    if n < 2:
        raise EstimationError("constant-correlation model needs n >= 2 assets")
    sd = x.std(axis=0, ddof=1)
    if np.any(sd <= 0):
        bad = r.assets[int(np.argmin(sd))]
        raise EstimationError(f"zero-variance asset {bad!r}")
    corr = np.corrcoef(x, rowvar=False)
    iu = np.triu_indices(n, k=1)
    rho_bar = corr[iu].mean()
    sigma = rho_bar * np.outer(sd, sd)
    np.fill_diagonal(sigma, sd**2)
    return MomentEstimate(mu=x.mean(axis=0), sigma=sigma, model_tag="CCM")


def _ols(y: np.ndarray, design: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """OLS coefficients and residuals; design includes the intercept column."""
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef, y - design @ coef


def single_index_fit(r: ReturnFrame, market: np.ndarray) -> IndexFit:
    """Per-asset OLS of returns on the market series, with intercept."""
    market = np.asarray(market, dtype=float)
    x = r.returns
    t = x.shape[0]
    if market.shape != (t,):
        raise EstimationError("market series not aligned with returns")
    if market.std(ddof=1) <= 0:
        raise EstimationError("degenerate (constant) market series")
    design = np.column_stack([np.ones(t), market])
    coef, resid = _ols(x, design)
    dof = max(t - 2, 1)
    return IndexFit(
        alpha=coef[0],
        beta=coef[1],
        residual_variance=(resid**2).sum(axis=0) / dof,
        market_variance=float(market.var(ddof=1)),
    )


def single_index_moments(
    fit: IndexFit,
    mu_market: float,
    exclude_residual_diag: bool = False,
) -> MomentEstimate:
    """Index-model moments: mu = alpha + beta*mu_M, sigma = bb' sigma_M^2 (+ diag resid)."""
    mu = fit.alpha + fit.beta * mu_market
    sigma = np.outer(fit.beta, fit.beta) * fit.market_variance
    if not exclude_residual_diag:
        sigma = sigma + np.diag(fit.residual_variance)
    return MomentEstimate(mu=mu, sigma=sigma, model_tag="SIM")


def _check_factor_conditioning(design: np.ndarray, names: list[str]) -> None:
    cond = np.linalg.cond(design - design.mean(axis=0))
    if cond > 1e8:
        corr = np.corrcoef(design, rowvar=False)
        np.fill_diagonal(corr, 0.0)
        i, j = np.unravel_index(np.argmax(np.abs(corr)), corr.shape)
        raise EstimationError(
            f"collinear factor sample (condition number {cond:.3g}): "
            f"{names[i]} vs {names[j]}"
        )


def fama_french_moments(
    r: ReturnFrame,
    f: FactorPanel,
    exclude_residual_diag: bool = False,
) -> tuple[FfFit, MomentEstimate]:
    """Three-factor excess-return regressions and the induced moments (tag MFM).

    Covariance uses the orthogonal-factor structure
    sigma_ij = b_i1 b_j1 var(mkt excess) + b_i2 b_j2 var(smb) + b_i3 b_j3 var(hml),
    with residual variance on the diagonal unless excluded. Expected return is
    the mean risk-free rate plus the fitted expected excess return at the
    factor sample means.
    """
    needed = ("market_return", "risk_free", "smb", "hml")
    if not f.has(*needed):
        missing = [c for c in needed if c not in f.columns]
        raise EstimationError(f"factor panel missing columns: {missing}")
    if f.values.shape[0] != r.n_periods or f.dates != r.dates:
        raise EstimationError("factor panel not aligned with returns")
    rf = f.column("risk_free")
    mkt_excess = f.column("market_return") - rf
    smb = f.column("smb")
    hml = f.column("hml")
    t = r.n_periods
    factors = np.column_stack([mkt_excess, smb, hml])
    _check_factor_conditioning(factors, ["market_excess", "smb", "hml"])
    design = np.column_stack([np.ones(t), factors])
    excess = r.returns - rf[:, None]
    coef, resid = _ols(excess, design)
    dof = max(t - 4, 1)
    fit = FfFit(
        alpha=coef[0],
        beta1=coef[1],
        beta2=coef[2],
        beta3=coef[3],
        residual_variance=(resid**2).sum(axis=0) / dof,
        factor_variances=factors.var(axis=0, ddof=1),
    )
    betas = np.column_stack([fit.beta1, fit.beta2, fit.beta3])
    sigma = (betas * fit.factor_variances) @ betas.T
    if not exclude_residual_diag:
        sigma = sigma + np.diag(fit.residual_variance)
    mu = rf.mean() + fit.alpha + betas @ factors.mean(axis=0)
    return fit, MomentEstimate(mu=mu, sigma=sigma, model_tag="MFM")
