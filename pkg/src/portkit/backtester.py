"""Rolling-window tangent-portfolio backtests under the four moment models.

For each trading period past the warm-up window, moments are re-estimated on
the trailing window under the configured model and the tangent (maximum
Sharpe) portfolio is held for the period. Before the first full window, and
whenever an estimation or solve fails (e.g. singular covariance), the
previous weights are carried forward; warm-up weights are 1/n. Wealth starts
at 1 and compounds the realized weighted simple returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .market_data import FactorPanel, ReturnFrame
from .moments import (
    EstimationError,
    constant_correlation_moments,
    fama_french_moments,
    sample_moments,
    single_index_fit,
    single_index_moments,
)
from .optimizer import OptimizationError, tangent_weights
from .universal import wealth_of_schedule

MODEL_TAGS = ("MM", "CCM", "SIM", "MFM")


@dataclass(frozen=True)
class BacktestConfig:
    model_tag: str
    estimation_window: int = 250
    rf_constant: float | None = None  # overrides the factor panel's risk_free
    rebalance_every: int = 1
    # gross-exposure cap: unconstrained tangent solves on noisy daily moments
    # occasionally produce enormous long/short legs that would bankrupt the
    # path in one period; such dates are treated as solve failures
    max_leverage: float = 10.0

    def __post_init__(self):
        if self.model_tag not in MODEL_TAGS:
            raise ValueError(f"unknown model tag {self.model_tag!r}")
        if self.rebalance_every < 1:
            raise ValueError("rebalance_every must be >= 1")
        if self.max_leverage < 1:
            raise ValueError("max_leverage must be >= 1")


@dataclass
class BacktestResult:
    model_tag: str
    dates: tuple[str, ...]
    assets: tuple[str, ...]
    weights: np.ndarray  # one row per trading period
    wealth: np.ndarray  # length T, wealth[0] = 1
    portfolio_returns: np.ndarray
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def final_wealth(self) -> float:
        return float(self.wealth[-1])


def _estimate(model_tag: str, window_r: ReturnFrame, window_f: FactorPanel | None,
              rf: float):
    if model_tag == "MM":
        return sample_moments(window_r)
    if model_tag == "CCM":
        return constant_correlation_moments(window_r)
    if window_f is None:
        raise EstimationError(f"model {model_tag} requires a factor panel")
    if model_tag == "SIM":
        market = window_f.column("market_return")
        fit = single_index_fit(window_r, market)
        return single_index_moments(fit, float(market.mean()))
    fit, est = fama_french_moments(window_r, window_f)
    return est


def run_backtest(
    r: ReturnFrame,
    f: FactorPanel | None,
    cfg: BacktestConfig,
) -> BacktestResult:
    """Appendix-style rolling backtest: estimate, take tangent weights, compound."""
    if r.kind != "simple":
        raise ValueError("backtest requires simple returns")
    t, n = r.returns.shape
    window = cfg.estimation_window
    if window < n + 2:
        raise ValueError(f"estimation window must be >= n+2 = {n + 2}")
    if f is not None and f.dates != r.dates:
        raise ValueError("factor panel must be aligned with returns")

    weights = np.empty((t, n))
    failures: list[tuple[str, str]] = []
    current = np.full(n, 1.0 / n)
    for k in range(t):
        due = k >= window and (k - window) % cfg.rebalance_every == 0
        if due:
            window_r = ReturnFrame(
                dates=r.dates[k - window : k],
                assets=r.assets,
                returns=r.returns[k - window : k],
                kind=r.kind,
            )
            window_f = None
            if f is not None:
                window_f = FactorPanel(
                    dates=f.dates[k - window : k],
                    columns=f.columns,
                    values=f.values[k - window : k],
                )
            if cfg.rf_constant is not None:
                rf = cfg.rf_constant
            elif window_f is not None and window_f.has("risk_free"):
                rf = float(window_f.column("risk_free").mean())
            else:
                rf = 0.0
            try:
                est = _estimate(cfg.model_tag, window_r, window_f, rf)
                candidate = tangent_weights(est, rf)
                leverage = np.abs(candidate).sum()
                if leverage > cfg.max_leverage:
                    raise OptimizationError(
                        f"tangent leverage {leverage:.3g} exceeds cap {cfg.max_leverage:g}"
                    )
                current = candidate
            except (EstimationError, OptimizationError) as exc:
                failures.append((r.dates[k], str(exc)))
        weights[k] = current

    port_returns = np.sum(weights * r.returns, axis=1)
    wealth = wealth_of_schedule(weights, r)
    return BacktestResult(
        model_tag=cfg.model_tag,
        dates=r.dates,
        assets=r.assets,
        weights=weights,
        wealth=wealth,
        portfolio_returns=port_returns,
        failures=failures,
    )


def max_drawdown(wealth: np.ndarray) -> float:
    """Largest peak-to-trough fractional decline of a wealth path."""
    wealth = np.asarray(wealth, dtype=float)
    peaks = np.maximum.accumulate(wealth)
    return float(np.max(1.0 - wealth / peaks))


def compare_models(
    r: ReturnFrame,
    f: FactorPanel | None,
    cfgs: list[BacktestConfig],
    periods_per_year: int = 252,
) -> list[dict]:
    """One summary row per configuration; per-model errors reported inline."""
    rows = []
    for cfg in cfgs:
        try:
            result = run_backtest(r, f, cfg)
        except (ValueError, EstimationError, OptimizationError) as exc:
            rows.append({"model_tag": cfg.model_tag, "error": str(exc)})
            continue
        pr = result.portfolio_returns
        sd = pr.std(ddof=1)
        sharpe = float(np.sqrt(periods_per_year) * pr.mean() / sd) if sd > 0 else float("nan")
        rows.append(
            {
                "model_tag": cfg.model_tag,
                "final_wealth": result.final_wealth,
                "annualized_sharpe": sharpe,
                "max_drawdown": max_drawdown(result.wealth),
                "failures": len(result.failures),
            }
        )
    return rows
