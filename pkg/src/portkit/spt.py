"""Diversity-weighted portfolios over market weights, with grid search on p.

The portfolio family maps market weights mu to pi_i = mu_i^p / sum_j mu_j^p
for p in [-1, 1]: p=1 is the market portfolio, p=0 the equal-weight portfolio.
The exponent is chosen by grid search on one of two objectives, annualized
Sharpe ratio or final-wealth excess over the equal-weight benchmark.
"""

from __future__ import annotations

import numpy as np

from .market_data import PriceFrame, ReturnFrame
from .universal import wealth_of_schedule

ANNUALIZATION_PERIODS = 252


def market_weights_from_prices(pf: PriceFrame, shares: np.ndarray | None = None) -> np.ndarray:
    """Capitalization weights mu_i(t) = shares_i P_i(t) / sum_j shares_j P_j(t).

    Shares default to 1 (price-weighted proxy). Output rows sum to 1.
    """
    if shares is None:
        shares = np.ones(pf.n_assets)
    shares = np.asarray(shares, dtype=float)
    caps = pf.prices * shares
    return caps / caps.sum(axis=1, keepdims=True)


def dwp_weights(mu_row: np.ndarray, p: float) -> np.ndarray:
    """Diversity weights mu^p renormalized; p=0 gives 1/n, p=1 gives mu itself."""
    if not -1.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [-1, 1], got {p}")
    mu_row = np.asarray(mu_row, dtype=float)
    if p <= 0 and np.any(mu_row <= 0):
        raise ValueError("zero market weight with non-positive p")
    powered = mu_row**p
    return powered / powered.sum()


def dwp_schedule(market_weights: np.ndarray, p: float) -> np.ndarray:
    """Schedule for return periods 1..T-1; row k uses the weights at date k-1.

    `market_weights` has one row per price date (T rows); the output drops the
    final row, so each trading period is decided from its opening weights.
    """
    mw = np.asarray(market_weights, dtype=float)
    rows = mw[:-1]
    powered = rows**p if p > 0 else np.where(rows > 0, rows, np.nan) ** p
    if np.any(~np.isfinite(powered)):
        raise ValueError("zero market weight with non-positive p")
    return powered / powered.sum(axis=1, keepdims=True)


def annualized_sharpe(portfolio_returns: np.ndarray) -> float:
    """sqrt(252) * sample mean / sample sd of per-period returns."""
    x = np.asarray(portfolio_returns, dtype=float)
    sd = x.std(ddof=1)
    if sd <= 1e-12 * max(1.0, np.abs(x).max()):
        return float("nan")
    return float(np.sqrt(ANNUALIZATION_PERIODS) * x.mean() / sd)


def excess_return_vs_ewp(r: ReturnFrame, schedule: np.ndarray) -> float:
    """Final wealth of the schedule minus final wealth of per-period 1/n."""
    ewp = np.full_like(r.returns, 1.0 / r.n_assets)
    return float(wealth_of_schedule(schedule, r)[-1] - wealth_of_schedule(ewp, r)[-1])


def optimize_p(
    market_weights: np.ndarray,
    r: ReturnFrame,
    objective: str = "sharpe",
    grid_step: float = 0.05,
) -> dict:
    """Grid search over p in [-1, 1]; ties resolve to the smallest p.

    Returns the argmax, its objective value, and the full grid table with
    both objectives and final wealth at every p.
    """
    if not 0 < grid_step <= 1:
        raise ValueError("grid_step must lie in (0, 1]")
    if objective not in ("sharpe", "excess_return"):
        raise ValueError(f"unknown objective {objective!r}")
    n_steps = int(round(2.0 / grid_step))
    grid = -1.0 + grid_step * np.arange(n_steps + 1)
    table = []
    for p in grid:
        schedule = dwp_schedule(market_weights, float(p))
        port_returns = np.sum(schedule * r.returns, axis=1)
        wealth = wealth_of_schedule(schedule, r)
        table.append(
            {
                "p": float(p),
                "sharpe": annualized_sharpe(port_returns),
                "excess_return": excess_return_vs_ewp(r, schedule),
                "final_wealth": float(wealth[-1]),
            }
        )
    values = np.array([row[objective] for row in table])
    if np.all(np.isnan(values)):
        raise ValueError("objective undefined at every grid point")
    best = int(np.nanargmax(values))
    return {"p": table[best]["p"], "value": float(values[best]), "grid": table}
