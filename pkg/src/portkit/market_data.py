"""Price/factor panel loading, validation, return computation and summary stats.

Dates are treated as opaque ordered ISO-8601 labels; no calendar arithmetic
is performed anywhere. Rows with any missing price are dropped whole (never
interpolated) so cross-sectional alignment stays exact.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

FACTOR_COLUMNS = (
    "market_return",
    "risk_free",
    "smb",
    "hml",
    "volume",
    "inflation",
    "gdp",
    "cpi",
    "unemployment",
)


class MarketDataError(ValueError):
    """Raised on malformed or inconsistent market data."""


@dataclass(frozen=True)
class PriceFrame:
    """Date-indexed panel of strictly positive asset prices (T x n)."""

    dates: tuple[str, ...]
    assets: tuple[str, ...]
    prices: np.ndarray
    dropped_rows: int = 0

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2:
            raise MarketDataError("prices must be a 2-D array")
        t, n = prices.shape
        if n < 1 or t < 2:
            raise MarketDataError(f"need T >= 2 and n >= 1, got T={t}, n={n}")
        if len(self.dates) != t or len(self.assets) != n:
            raise MarketDataError("dates/assets lengths do not match prices shape")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            bad = np.argwhere(~(np.isfinite(prices) & (prices > 0)))[0]
            raise MarketDataError(
                f"non-positive or non-finite price at row {self.dates[bad[0]]}, "
                f"column {self.assets[bad[1]]}"
            )
        _check_dates_increasing(self.dates)

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    def to_csv(self, path) -> None:
        df = pd.DataFrame(self.prices, columns=list(self.assets))
        df.insert(0, "date", list(self.dates))
        df.to_csv(path, index=False)


@dataclass(frozen=True)
class ReturnFrame:
    """Per-period simple or log returns aligned across assets (T-1 x n)."""

    dates: tuple[str, ...]
    assets: tuple[str, ...]
    returns: np.ndarray
    kind: str = "simple"

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "returns", returns)
        if returns.ndim != 2:
            raise MarketDataError("returns must be a 2-D array")
        if self.kind not in ("simple", "log"):
            raise MarketDataError(f"unknown return kind {self.kind!r}")
        if len(self.dates) != returns.shape[0] or len(self.assets) != returns.shape[1]:
            raise MarketDataError("dates/assets lengths do not match returns shape")
        if not np.all(np.isfinite(returns)):
            raise MarketDataError("returns contain non-finite values")
        if self.kind == "simple" and np.any(returns <= -1):
            raise MarketDataError("simple returns must be > -1")

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]


@dataclass(frozen=True)
class FactorPanel:
    """Date-indexed panel of per-period factor observations."""

    dates: tuple[str, ...]
    columns: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.columns)):
            raise MarketDataError("values shape does not match dates/columns")
        unknown = set(self.columns) - set(FACTOR_COLUMNS)
        if unknown:
            raise MarketDataError(f"unknown factor columns: {sorted(unknown)}")
        _check_dates_increasing(self.dates)

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise MarketDataError(f"factor panel has no column {name!r}")
        return self.values[:, self.columns.index(name)]

    def has(self, *names: str) -> bool:
        return all(name in self.columns for name in names)


def _check_dates_increasing(dates) -> None:
    parsed = []
    for d in dates:
        try:
            parsed.append(_dt.date.fromisoformat(str(d)))
        except ValueError as exc:
            raise MarketDataError(f"unparsable date {d!r}") from exc
    for a, b in zip(parsed, parsed[1:]):
        if b <= a:
            raise MarketDataError(f"dates not strictly increasing at {b.isoformat()}")


def load_prices(path, date_column: str = "date") -> PriceFrame:
    """Load a price CSV, dropping (and counting) rows with any missing cell.

    The CSV must have a header row, one date column and numeric price columns.
    A non-positive price is a hard error naming the offending row and column.
    """
    try:
        df = pd.read_csv(path, dtype={date_column: str})
    except FileNotFoundError:
        raise MarketDataError(f"price file not found: {path}") from None
    if date_column not in df.columns:
        raise MarketDataError(f"date column {date_column!r} not in {list(df.columns)}")
    assets = [c for c in df.columns if c != date_column]
    values = df[assets].apply(pd.to_numeric, errors="coerce")
    # Explicit positivity check before dropping, so a zero price is an error,
    # not a silent drop.
    bad = (values <= 0).to_numpy()
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise MarketDataError(
            f"non-positive price at row {df[date_column].iloc[r]}, column {assets[c]}"
        )
    keep = values.notna().all(axis=1)
    dropped = int((~keep).sum())
    df = df[keep]
    values = values[keep]
    return PriceFrame(
        dates=tuple(df[date_column].astype(str)),
        assets=tuple(assets),
        prices=values.to_numpy(dtype=float),
        dropped_rows=dropped,
    )


def load_factors(path, date_column: str = "date") -> FactorPanel:
    """Load a factor CSV with columns drawn from FACTOR_COLUMNS."""
    try:
        df = pd.read_csv(path, dtype={date_column: str})
    except FileNotFoundError:
        raise MarketDataError(f"factor file not found: {path}") from None
    if date_column not in df.columns:
        raise MarketDataError(f"date column {date_column!r} not in {list(df.columns)}")
    cols = [c for c in df.columns if c != date_column]
    return FactorPanel(
        dates=tuple(df[date_column].astype(str)),
        columns=tuple(cols),
        values=df[cols].to_numpy(dtype=float),
    )


def compute_returns(p: PriceFrame, kind: str = "simple") -> ReturnFrame:
    """Per-period returns: simple r_t = P_t/P_{t-1} - 1 or log r_t = ln(P_t/P_{t-1})."""
    ratio = p.prices[1:] / p.prices[:-1]
    if kind == "simple":
        r = ratio - 1.0
    elif kind == "log":
        r = np.log(ratio)
    else:
        raise MarketDataError(f"unknown return kind {kind!r}")
    return ReturnFrame(dates=p.dates[1:], assets=p.assets, returns=r, kind=kind)


def align(r: ReturnFrame, f: FactorPanel) -> tuple[ReturnFrame, FactorPanel]:
    """Restrict both inputs to their common dates, preserving order."""
    common = sorted(set(r.dates) & set(f.dates))
    if not common:
        raise MarketDataError("return and factor dates are disjoint")
    r_idx = [r.dates.index(d) for d in common]
    f_idx = [f.dates.index(d) for d in common]
    r2 = ReturnFrame(
        dates=tuple(common),
        assets=r.assets,
        returns=r.returns[r_idx],
        kind=r.kind,
    )
    f2 = FactorPanel(dates=tuple(common), columns=f.columns, values=f.values[f_idx])
    return r2, f2


def summary_stats(r: ReturnFrame) -> dict:
    """Per-asset mean/sd/skew/excess-kurtosis plus the sample correlation matrix.

    Variance is unbiased (ddof=1); skew and kurtosis are the standard biased
    moment ratios. Correlation entries involving a zero-variance asset are NaN.
    """
    x = r.returns
    t = x.shape[0]
    if t < 4:
        raise MarketDataError(f"need at least 4 return rows, got {t}")
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    centered = x - mean
    m2 = (centered**2).mean(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = (centered**3).mean(axis=0) / m2**1.5
        exkurt = (centered**4).mean(axis=0) / m2**2 - 3.0
        corr = np.corrcoef(x, rowvar=False)
    corr = np.atleast_2d(corr)
    np.fill_diagonal(corr, np.where(sd > 0, 1.0, np.nan))
    return {
        "assets": r.assets,
        "mean": mean,
        "sd": sd,
        "skewness": skew,
        "excess_kurtosis": exkurt,
        "correlation": corr,
    }
