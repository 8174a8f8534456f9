import numpy as np
import pytest

from portkit.market_data import (
    FactorPanel,
    MarketDataError,
    align,
    compute_returns,
    load_prices,
    summary_stats,
)

from conftest import iso_dates, make_price_frame, make_return_frame


def write_csv(tmp_path, text, name="prices.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadPrices:
    def test_identity_load(self, tmp_path):
        path = write_csv(
            tmp_path,
            "date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,11,21\n2020-01-03,12,22\n",
        )
        pf = load_prices(path)
        assert pf.n_periods == 3
        assert pf.n_assets == 2
        assert pf.dropped_rows == 0
        assert pf.assets == ("AAA", "BBB")
        np.testing.assert_allclose(pf.prices[:, 0], [10, 11, 12])

    def test_missing_cell_drops_row(self, tmp_path):
        path = write_csv(
            tmp_path,
            "date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,,21\n2020-01-03,12,22\n",
        )
        pf = load_prices(path)
        assert pf.n_periods == 2
        assert pf.dropped_rows == 1

    def test_zero_price_names_cell(self, tmp_path):
        path = write_csv(
            tmp_path,
            "date,AAA,BBB\n2020-01-01,10,20\n2020-01-02,0.0,21\n2020-01-03,12,22\n",
        )
        with pytest.raises(MarketDataError, match="2020-01-02.*AAA"):
            load_prices(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(MarketDataError, match="not found"):
            load_prices(tmp_path / "nope.csv")

    def test_unparsable_date(self, tmp_path):
        path = write_csv(tmp_path, "date,AAA\nJan 1st,10\nJan 2nd,11\n")
        with pytest.raises(MarketDataError, match="unparsable date"):
            load_prices(path)


class TestComputeReturns:
    def test_simple(self):
        pf = make_price_frame([[100.0], [110.0]])
        rf = compute_returns(pf, "simple")
        np.testing.assert_allclose(rf.returns, [[0.10]])
        assert rf.kind == "simple"

    def test_log(self):
        pf = make_price_frame([[100.0], [110.0]])
        rf = compute_returns(pf, "log")
        np.testing.assert_allclose(rf.returns, [[np.log(1.1)]])

    def test_constant_prices_zero_returns(self):
        pf = make_price_frame([[5.0, 7.0]] * 4)
        for kind in ("simple", "log"):
            assert np.all(compute_returns(pf, kind).returns == 0)

    def test_roundtrip_reconstruction(self):
        rng = np.random.default_rng(7)
        prices = 100 * np.exp(np.cumsum(0.02 * rng.standard_normal((50, 3)), axis=0))
        pf = make_price_frame(prices)
        rf = compute_returns(pf, "simple")
        rebuilt = prices[0] * np.cumprod(1 + rf.returns, axis=0)
        np.testing.assert_allclose(rebuilt, prices[1:], rtol=1e-12)

    def test_log_simple_first_order_agreement(self):
        rng = np.random.default_rng(8)
        prices = 100 * np.exp(np.cumsum(0.05 * rng.standard_normal((200, 2)), axis=0))
        pf = make_price_frame(prices)
        simple = compute_returns(pf, "simple").returns
        log = compute_returns(pf, "log").returns
        mask = np.abs(simple) < 0.5
        bound = simple**2 / 2 * (1 + np.abs(simple))
        assert np.all(np.abs(log - simple)[mask] <= bound[mask] + 1e-15)


class TestAlign:
    def make_factors(self, dates):
        return FactorPanel(
            dates=tuple(dates),
            columns=("market_return",),
            values=np.arange(len(dates), dtype=float)[:, None],
        )

    def test_identical_dates_unchanged(self):
        rf = make_return_frame([[0.01], [0.02], [0.03]])
        f = self.make_factors(rf.dates)
        r2, f2 = align(rf, f)
        np.testing.assert_array_equal(r2.returns, rf.returns)
        np.testing.assert_array_equal(f2.values, f.values)

    def test_truncation_to_common(self):
        rf = make_return_frame([[0.01], [0.02], [0.03]])
        f = self.make_factors(rf.dates[:-1])
        r2, f2 = align(rf, f)
        assert r2.dates == rf.dates[:-1]
        assert f2.dates == rf.dates[:-1]

    def test_disjoint_dates_error(self):
        rf = make_return_frame([[0.01], [0.02]])
        f = self.make_factors(iso_dates(2, start="1990-01-01"))
        with pytest.raises(MarketDataError, match="disjoint"):
            align(rf, f)


class TestSummaryStats:
    def test_hand_mean_sd(self):
        rf = make_return_frame([[0.01, 0.0], [0.03, 0.0], [0.02, 0.01], [0.02, -0.01]])
        stats = summary_stats(rf)
        assert stats["mean"][0] == pytest.approx(0.02)
        # first asset restricted to hand pair via direct computation
        rf2 = make_return_frame([[0.01], [0.03], [0.01], [0.03]])
        stats2 = summary_stats(rf2)
        assert stats2["sd"][0] == pytest.approx(np.sqrt(2e-4 * 2 / 3))

    def test_unbiased_sd_on_pair(self):
        x = np.array([0.01, 0.03])
        assert x.std(ddof=1) == pytest.approx(0.014142, abs=1e-6)

    def test_identical_columns_correlation_one(self):
        col = np.array([0.01, -0.02, 0.03, 0.0, 0.015])
        rf = make_return_frame(np.column_stack([col, col]))
        stats = summary_stats(rf)
        assert stats["correlation"][0, 1] == pytest.approx(1.0)

    def test_gaussian_excess_kurtosis_near_zero(self):
        rng = np.random.default_rng(42)
        rf = make_return_frame(0.01 * rng.standard_normal((10000, 2)))
        stats = summary_stats(rf)
        assert np.all(np.abs(stats["excess_kurtosis"]) < 0.2)

    def test_correlation_matrix_properties(self, demo_returns):
        corr = summary_stats(demo_returns)["correlation"]
        np.testing.assert_allclose(corr, corr.T, atol=1e-12)
        np.testing.assert_allclose(np.diag(corr), 1.0)
        assert np.all(corr >= -1 - 1e-12) and np.all(corr <= 1 + 1e-12)

    def test_zero_variance_marked_undefined(self):
        rf = make_return_frame(
            np.column_stack([[0.01, -0.01, 0.02, 0.0], np.zeros(4)])
        )
        corr = summary_stats(rf)["correlation"]
        assert np.isnan(corr[0, 1]) and np.isnan(corr[1, 1])
        assert corr[0, 0] == 1.0
