"""Online portfolio selection: CRP, Cover's universal portfolio, WACRP and SCRP.

Schedules are (T-1) x n arrays of long-only weights; row k is decided using
only returns from periods strictly before k (causality). Wealth paths start
at 1 and compound the realized weighted gross returns.
"""

from __future__ import annotations

import numpy as np

from .market_data import ReturnFrame


class PortfolioRuinError(ValueError):
    """Portfolio gross return dropped to <= 0 (only possible with shorting)."""


class ConvergenceError(RuntimeError):
    """Best-CRP search failed to converge; carries the best value found."""

    def __init__(self, message, best_weights=None, best_value=None):
        super().__init__(message)
        self.best_weights = best_weights
        self.best_value = best_value


def wealth_of_schedule(schedule: np.ndarray, r: ReturnFrame) -> np.ndarray:
    """Cumulative wealth of a weight schedule over simple returns, starting at 1."""
    if r.kind != "simple":
        raise ValueError("wealth compounding requires simple returns")
    schedule = np.asarray(schedule, dtype=float)
    if schedule.shape != r.returns.shape:
        raise ValueError(
            f"schedule shape {schedule.shape} does not match returns {r.returns.shape}"
        )
    gross = 1.0 + np.sum(schedule * r.returns, axis=1)
    if np.any(gross <= 0):
        k = int(np.argmax(gross <= 0))
        raise PortfolioRuinError(f"portfolio gross return <= 0 at period {k}")
    wealth = np.empty(len(gross) + 1)
    wealth[0] = 1.0
    wealth[1:] = np.cumprod(gross)
    return wealth


def crp_schedule(n_periods: int, n_assets: int, w: np.ndarray | None = None) -> np.ndarray:
    """Constant rebalanced schedule repeating w every period (default 1/n)."""
    if w is None:
        w = np.full(n_assets, 1.0 / n_assets)
    w = np.asarray(w, dtype=float)
    if w.shape != (n_assets,):
        raise ValueError("weight vector has wrong length")
    if abs(w.sum() - 1.0) > 1e-10:
        raise ValueError("weights must sum to 1")
    return np.tile(w, (n_periods, 1))


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def best_crp(
    r: ReturnFrame | np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    w0: np.ndarray | None = None,
) -> np.ndarray:
    """Hindsight-optimal constant rebalanced portfolio on the long-only simplex.

    Maximizes the concave log-wealth sum_k log(1 + w . r_k) by projected
    gradient with backtracking; converges when the unit-step fixed-point
    residual falls below tol.
    """
    x = r.returns if isinstance(r, ReturnFrame) else np.asarray(r, dtype=float)
    t, n = x.shape
    if np.any(x <= -1):
        raise ValueError("best CRP requires simple returns > -1")
    w = np.full(n, 1.0 / n) if w0 is None else np.asarray(w0, dtype=float).copy()

    def value_grad(w):
        gross = 1.0 + x @ w
        return np.log(gross).sum(), (x / gross[:, None]).sum(axis=0)

    val, grad = value_grad(w)
    # normalize steps by problem scale so tol is meaningful across instances
    scale = 1.0 / max(t, 1)
    for _ in range(max_iter):
        residual = np.abs(w - _project_simplex(w + scale * grad)).max()
        if residual < tol:
            return w
        step = 1.0
        while True:
            w_new = _project_simplex(w + step * scale * grad)
            val_new, grad_new = value_grad(w_new)
            dw = w_new - w
            if val_new >= val + 1e-4 * grad @ dw or np.abs(dw).max() < 1e-16:
                break
            step *= 0.5
        if np.abs(w_new - w).max() < 1e-16 and residual >= tol:
            # stalled on the boundary; residual check next loop decides
            w, val, grad = w_new, val_new, grad_new
            break
        w, val, grad = w_new, val_new, grad_new
    residual = np.abs(w - _project_simplex(w + scale * grad)).max()
    if residual >= tol:
        raise ConvergenceError(
            f"best CRP search stalled at residual {residual:.3g}",
            best_weights=w,
            best_value=val,
        )
    return w


def cover_schedule(r: ReturnFrame, samples: int = 10_000, seed: int = 0) -> np.ndarray:
    """Cover universal portfolio via fixed Monte Carlo draws on the simplex.

    The wealth-weighted average over all CRPs is approximated with `samples`
    Dirichlet(1,...,1) draws fixed once from the seed and reused every period,
    keeping the schedule deterministic and causal.
    """
    if samples < 100:
        raise ValueError("need at least 100 Monte Carlo samples")
    x = r.returns
    t, n = x.shape
    rng = np.random.default_rng(seed)
    draws = rng.dirichlet(np.ones(n), size=samples)  # samples x n
    wealth = np.ones(samples)
    schedule = np.empty((t, n))
    for k in range(t):
        schedule[k] = (wealth @ draws) / wealth.sum()
        wealth *= 1.0 + draws @ x[k]
    return schedule


def scrp_schedule(r: ReturnFrame) -> np.ndarray:
    """Successively-best CRP: row k plays the hindsight-best CRP on periods < k."""
    x = r.returns
    t, n = x.shape
    schedule = np.empty((t, n))
    schedule[0] = 1.0 / n
    w = schedule[0]
    for k in range(1, t):
        w = best_crp(x[:k], w0=w)
        schedule[k] = w
    return schedule


def wacrp_schedule(r: ReturnFrame, weighting: str = "wealth") -> np.ndarray:
    """Weighted average of the historical best CRPs.

    Row k averages the best CRPs of prefixes 1..j for j < k, weighted by each
    best CRP's realized wealth over its own prefix ("wealth" mode) or equally
    ("uniform" mode). Row 1 is uniform.
    """
    if weighting not in ("wealth", "uniform"):
        raise ValueError(f"unknown weighting {weighting!r}")
    x = r.returns
    t, n = x.shape
    schedule = np.empty((t, n))
    schedule[0] = 1.0 / n
    bests = np.empty((t - 1, n)) if t > 1 else np.empty((0, n))
    realized = np.empty(t - 1) if t > 1 else np.empty(0)
    w = schedule[0]
    for j in range(1, t):
        w = best_crp(x[:j], w0=w)
        bests[j - 1] = w
        realized[j - 1] = np.prod(1.0 + x[:j] @ w)
        weights = realized[:j] if weighting == "wealth" else np.ones(j)
        schedule[j] = weights @ bests[:j] / weights.sum()
    return schedule
