"""Seeded synthetic price panels from constant-coefficient Ito dynamics.

Each asset follows dX_i = X_i (r_i dt + sum_v sigma_iv dW_v) with constant
coefficients, simulated by the exact log scheme (no discretization bias):

    ln X_i(t+dt) = ln X_i(t) + (r_i - 0.5 sum_v sigma_iv^2) dt
                   + sum_v sigma_iv sqrt(dt) Z_v

RNG convention: numpy's default_rng (PCG64), seeded from a 64-bit integer.
Independent replicate streams must be derived via
``np.random.SeedSequence(seed).spawn(k)`` so results are reproducible and
schedule-independent across platforms.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .market_data import FactorPanel, PriceFrame


@dataclass(frozen=True)
class GbmSpec:
    """Constant-coefficient geometric dynamics for n assets driven by d noises."""

    n: int
    growth_rates: np.ndarray  # per-period drift, length n
    vol_matrix: np.ndarray  # n x d loadings, per sqrt(period)
    x0: np.ndarray  # initial capitalizations, > 0
    steps: int
    seed: int

    def __post_init__(self):
        r = np.broadcast_to(np.asarray(self.growth_rates, dtype=float), (self.n,))
        sigma = np.atleast_2d(np.asarray(self.vol_matrix, dtype=float))
        x0 = np.broadcast_to(np.asarray(self.x0, dtype=float), (self.n,))
        object.__setattr__(self, "growth_rates", r)
        object.__setattr__(self, "vol_matrix", sigma)
        object.__setattr__(self, "x0", x0)
        if sigma.shape[0] != self.n:
            raise ValueError(f"vol_matrix must have {self.n} rows, got {sigma.shape}")
        if sigma.shape[1] < 1:
            raise ValueError("need at least one driving noise")
        if not np.all(np.isfinite(sigma)):
            raise ValueError("vol_matrix must be finite")
        if np.any(x0 <= 0):
            raise ValueError("initial capitalizations must be positive")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    @property
    def d(self) -> int:
        return self.vol_matrix.shape[1]


def _date_labels(count: int, start: str = "2000-01-01") -> tuple[str, ...]:
    d0 = _dt.date.fromisoformat(start)
    return tuple((d0 + _dt.timedelta(days=k)).isoformat() for k in range(count))


def simulate(spec: GbmSpec, dt: float = 1.0) -> PriceFrame:
    """Simulate the exact log scheme; same spec+seed gives bit-identical output."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.steps, spec.d))
    drift = (spec.growth_rates - 0.5 * (spec.vol_matrix**2).sum(axis=1)) * dt
    shocks = z @ (spec.vol_matrix.T * np.sqrt(dt))
    log_x = np.empty((spec.steps + 1, spec.n))
    log_x[0] = np.log(spec.x0)
    log_x[1:] = log_x[0] + np.cumsum(drift + shocks, axis=0)
    assets = tuple(f"A{i+1}" for i in range(spec.n))
    return PriceFrame(
        dates=_date_labels(spec.steps + 1),
        assets=assets,
        prices=np.exp(log_x),
    )


def make_demo_market(
    n_assets: int = 8,
    steps: int = 600,
    seed: int = 20240613,
) -> tuple[PriceFrame, FactorPanel]:
    """Bundled synthetic fixture: a correlated price panel plus a factor panel.

    Deterministic given the seed; the shipped fixture CSVs are produced by
    exactly this call with its defaults.
    """
    root = np.random.SeedSequence(seed)
    price_seed, factor_seed = root.spawn(2)
    n = n_assets
    rng = np.random.default_rng(price_seed)
    # one common loading plus an idiosyncratic one -> roughly 0.3 correlation
    common = np.full((n, 1), 0.011)
    idio = np.diag(0.004 + 0.012 * rng.random(n))
    vol = np.hstack([common, idio])
    spec = GbmSpec(
        n=n,
        growth_rates=0.0001 + 0.0004 * rng.random(n),
        vol_matrix=vol,
        x0=20.0 + 180.0 * rng.random(n),
        steps=steps,
        seed=int(rng.integers(2**63)),
    )
    prices = simulate(spec, dt=1.0)

    frng = np.random.default_rng(factor_seed)
    simple = prices.prices[1:] / prices.prices[:-1] - 1.0
    t = simple.shape[0]
    market = simple.mean(axis=1) + 0.002 * frng.standard_normal(t)
    values = np.column_stack(
        [
            market,
            np.full(t, 1e-4),
            0.004 * frng.standard_normal(t),
            0.004 * frng.standard_normal(t),
            1e6 * (1.0 + 0.2 * frng.random(t)),
            0.00008 + 0.00002 * frng.standard_normal(t),
            0.0001 + 0.00005 * frng.standard_normal(t),
            0.00008 + 0.00002 * frng.standard_normal(t),
            0.04 + 0.002 * frng.standard_normal(t),
        ]
    )
    factors = FactorPanel(
        dates=prices.dates[1:],
        columns=(
            "market_return",
            "risk_free",
            "smb",
            "hml",
            "volume",
            "inflation",
            "gdp",
            "cpi",
            "unemployment",
        ),
        values=values,
    )
    return prices, factors
