import datetime as dt

import numpy as np
import pytest

from portkit.market_data import PriceFrame, ReturnFrame, compute_returns
from portkit.synthetic import make_demo_market


def iso_dates(count, start="2000-01-01"):
    d0 = dt.date.fromisoformat(start)
    return tuple((d0 + dt.timedelta(days=k)).isoformat() for k in range(count))


def make_price_frame(prices, dates=None, assets=None):
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    t, n = prices.shape
    dates = dates or iso_dates(t)
    assets = assets or tuple(f"A{i+1}" for i in range(n))
    return PriceFrame(dates=tuple(dates), assets=tuple(assets), prices=prices)


def make_return_frame(returns, kind="simple"):
    returns = np.atleast_2d(np.asarray(returns, dtype=float))
    t, n = returns.shape
    assets = tuple(f"A{i+1}" for i in range(n))
    return ReturnFrame(dates=iso_dates(t), assets=assets, returns=returns, kind=kind)


@pytest.fixture(scope="session")
def demo_market():
    return make_demo_market()


@pytest.fixture(scope="session")
def demo_returns(demo_market):
    prices, _ = demo_market
    return compute_returns(prices, kind="simple")
