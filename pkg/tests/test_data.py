import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from volspill import (
    DataError,
    EventWindowConfig,
    PricePanel,
    ReturnSeries,
    describe,
    log_returns,
    read_price_csv,
    split_event,
)
from volspill.data import jarque_bera_stat, stats_to_csv

from helpers import make_price_panel, write_price_csv


def _panel(prices, markets=("A",), start=dt.date(2020, 1, 1)):
    prices = np.asarray(prices, dtype=float)
    if prices.ndim == 1:
        prices = prices[:, None]
    dates = tuple(start + dt.timedelta(days=i) for i in range(prices.shape[0]))
    return PricePanel(tuple(markets), dates, prices)


def _series(values, start=dt.date(2020, 1, 1)):
    dates = tuple(start + dt.timedelta(days=i) for i in range(len(values)))
    return ReturnSeries("X", dates, np.asarray(values, dtype=float))


# ---------------------------------------------------------------------------
# log_returns
# ---------------------------------------------------------------------------


def test_log_returns_constant_prices():
    (rs,) = log_returns(_panel([100.0, 100.0, 100.0]))
    np.testing.assert_array_equal(rs.values, [0.0, 0.0])


def test_log_returns_hand_value():
    (rs,) = log_returns(_panel([100.0, 110.0]))
    assert rs.values[0] == pytest.approx(0.09531017980432486, abs=1e-15)


def test_log_returns_round_trip_cancels():
    (rs,) = log_returns(_panel([100.0, 50.0, 100.0]))
    np.testing.assert_allclose(rs.values, [-math.log(2), math.log(2)])
    assert rs.values.sum() == pytest.approx(0.0, abs=1e-15)


def test_log_returns_dates_shift_to_later_observation():
    panel = _panel([1.0, 2.0, 3.0])
    (rs,) = log_returns(panel)
    assert rs.dates == panel.dates[1:]


def test_log_returns_scale():
    (rs,) = log_returns(_panel([100.0, 110.0]), scale=100.0)
    assert rs.values[0] == pytest.approx(100 * math.log(1.1))
    with pytest.raises(DataError):
        log_returns(_panel([100.0, 110.0]), scale=0.0)


def test_non_positive_price_rejected_with_market_and_date():
    with pytest.raises(DataError) as exc:
        _panel([100.0, -1.0], markets=("QQ",))
    assert "QQ" in str(exc.value)
    assert "2020-01-02" in str(exc.value)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.floats(min_value=-0.2, max_value=0.2, allow_nan=False), min_size=2, max_size=40
    )
)
def test_log_returns_reconstruct_prices(rets):
    prices = 50.0 * np.exp(np.concatenate([[0.0], np.cumsum(rets)]))
    panel = _panel(prices)
    (rs,) = log_returns(panel)
    rebuilt = np.log(prices[0]) + np.concatenate([[0.0], np.cumsum(rs.values)])
    np.testing.assert_allclose(rebuilt, np.log(prices), rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# describe
# ---------------------------------------------------------------------------


def test_describe_gaussian_moment_case_gives_zero_jb():
    # symmetric two-spike sample: S = 0 and K = n/2 = 3 exactly
    s = describe(_series([-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]))
    assert s.skewness == pytest.approx(0.0, abs=1e-15)
    assert s.kurtosis == pytest.approx(3.0, abs=1e-12)
    assert s.jarque_bera == pytest.approx(0.0, abs=1e-12)
    assert s.jb_p_value == pytest.approx(1.0)


def test_describe_matches_scipy_conventions():
    x = np.random.default_rng(42).standard_normal(500)
    s = describe(_series(x))
    assert s.skewness == pytest.approx(sps.skew(x, bias=True), abs=1e-12)
    assert s.kurtosis == pytest.approx(sps.kurtosis(x, fisher=False, bias=True), abs=1e-12)
    jb_ref, p_ref = sps.jarque_bera(x)
    assert s.jarque_bera == pytest.approx(jb_ref, rel=1e-10)
    assert s.jb_p_value == pytest.approx(p_ref, rel=1e-8)
    assert s.std_dev == pytest.approx(np.std(x, ddof=1), rel=1e-12)
    assert s.n == 500


@pytest.mark.parametrize(
    "skew,kurt,printed",
    [(0.244617, 4.225992, 31.07290), (-0.400171, 5.448237, 118.3137)],
)
def test_describe_jb_formula_reproduces_tabulated_values(skew, kurt, printed):
    assert jarque_bera_stat(skew, kurt, 428) == pytest.approx(printed, rel=0.005)


def test_describe_errors():
    with pytest.raises(DataError):
        describe(_series([0.1, 0.2, 0.3]))  # n < 4
    with pytest.raises(DataError):
        describe(_series([0.5] * 10))  # zero variance


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
def test_describe_shift_invariance(c):
    x = np.random.default_rng(7).standard_normal(64)
    base = describe(_series(x))
    shifted = describe(_series(x + c))
    assert shifted.mean == pytest.approx(base.mean + c, abs=1e-10)
    assert shifted.median == pytest.approx(base.median + c, abs=1e-10)
    assert shifted.maximum == pytest.approx(base.maximum + c, abs=1e-10)
    assert shifted.minimum == pytest.approx(base.minimum + c, abs=1e-10)
    assert shifted.skewness == pytest.approx(base.skewness, abs=1e-10)
    assert shifted.kurtosis == pytest.approx(base.kurtosis, abs=1e-10)
    assert shifted.jarque_bera == pytest.approx(base.jarque_bera, abs=1e-10)


def test_stats_table_row_order():
    s = describe(_series(np.random.default_rng(0).standard_normal(50)))
    text = stats_to_csv({"A": s})
    rows = [line.split(",")[0] for line in text.strip().splitlines()]
    assert rows == [
        "stat",
        "Mean",
        "Median",
        "Maximum",
        "Minimum",
        "Std. Dev.",
        "Skewness",
        "Kurtosis",
        "Jarque-Bera",
        "Probability",
    ]


# ---------------------------------------------------------------------------
# split_event
# ---------------------------------------------------------------------------


def test_split_event_exact_halves():
    # 10 observations with the event day itself unobserved: obs 1-5 before,
    # obs 6-10 after
    d0 = dt.date(2020, 1, 1)
    days = [0, 1, 2, 3, 4, 6, 7, 8, 9, 10]
    dates = tuple(d0 + dt.timedelta(days=k) for k in days)
    series = ReturnSeries("X", dates, np.arange(10.0))
    cfg = EventWindowConfig(
        event_date=d0 + dt.timedelta(days=5),
        pre_start=d0,
        pre_end=d0 + dt.timedelta(days=4),
        post_start=d0 + dt.timedelta(days=6),
        post_end=d0 + dt.timedelta(days=10),
        require_equal_length=True,
    )
    pre, post = split_event(series, cfg)
    np.testing.assert_array_equal(pre.values, np.arange(5.0))
    np.testing.assert_array_equal(post.values, np.arange(5.0, 10.0))


def test_split_event_empty_window_errors():
    series = _series(np.arange(10.0), start=dt.date(2020, 6, 1))
    cfg = EventWindowConfig(
        event_date=dt.date(2020, 5, 20),
        pre_start=dt.date(2020, 5, 1),
        pre_end=dt.date(2020, 5, 10),
        post_start=dt.date(2020, 6, 1),
        post_end=dt.date(2020, 6, 5),
    )
    with pytest.raises(DataError):
        split_event(series, cfg)


def test_split_event_excludes_event_date_from_both():
    d0 = dt.date(2020, 1, 1)
    series = _series(np.arange(9.0), start=d0)
    ev = d0 + dt.timedelta(days=4)
    cfg = EventWindowConfig(
        event_date=ev,
        pre_start=d0,
        pre_end=ev - dt.timedelta(days=1),
        post_start=ev,  # post window nominally starts on the event date
        post_end=d0 + dt.timedelta(days=8),
    )
    pre, post = split_event(series, cfg)
    assert ev not in pre.dates
    assert ev not in post.dates
    assert max(pre.dates) < ev
    assert set(pre.dates).isdisjoint(post.dates)
    assert set(pre.dates) | set(post.dates) <= set(series.dates)


def test_split_event_unequal_lengths_reports_both_counts():
    d0 = dt.date(2020, 1, 1)
    series = _series(np.arange(10.0), start=d0)
    cfg = EventWindowConfig(
        event_date=d0 + dt.timedelta(days=5),
        pre_start=d0,
        pre_end=d0 + dt.timedelta(days=4),
        post_start=d0 + dt.timedelta(days=6),
        post_end=d0 + dt.timedelta(days=9),
        require_equal_length=True,
    )
    with pytest.raises(DataError) as exc:
        split_event(series, cfg)
    assert "5" in str(exc.value) and "4" in str(exc.value)


def test_split_event_paper_calendar_yields_428_observations_per_window():
    # daily calendar: prices one day before the pre window so returns start
    # exactly on the first window day
    start = dt.date(2016, 4, 2)
    end = dt.date(2018, 8, 7)
    n_days = (end - start).days + 1
    prices = 100.0 * np.exp(0.001 * np.arange(n_days))
    dates = tuple(start + dt.timedelta(days=i) for i in range(n_days))
    panel = PricePanel(("QA",), dates, prices[:, None])
    (rs,) = log_returns(panel)
    cfg = EventWindowConfig(
        event_date=dt.date(2017, 6, 5),
        pre_start=dt.date(2016, 4, 3),
        pre_end=dt.date(2017, 6, 4),
        post_start=dt.date(2017, 6, 6),
        post_end=dt.date(2018, 8, 7),
        require_equal_length=True,
    )
    pre, post = split_event(rs, cfg)
    assert len(pre) == 428
    assert len(post) == 428


def test_event_window_config_ordering_enforced():
    with pytest.raises(DataError):
        EventWindowConfig(
            event_date=dt.date(2020, 1, 5),
            pre_start=dt.date(2020, 1, 10),
            pre_end=dt.date(2020, 1, 2),
            post_start=dt.date(2020, 1, 6),
            post_end=dt.date(2020, 1, 9),
        )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


def test_read_price_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    panel = make_price_panel(0.01 * rng.standard_normal((20, 2)), markets=("AA", "BB"))
    path = write_price_csv(tmp_path / "p.csv", panel)
    loaded = read_price_csv(path)
    assert loaded.markets == panel.markets
    assert loaded.dates == panel.dates
    np.testing.assert_allclose(loaded.prices, panel.prices, rtol=1e-15)


def test_read_price_csv_drops_incomplete_rows_panel_wide(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text(
        "date,A,B\n"
        "2020-01-01,100,200\n"
        "2020-01-02,,201\n"
        "2020-01-03,102,202\n"
    )
    panel = read_price_csv(path)
    assert len(panel.dates) == 2
    assert panel.dates == (dt.date(2020, 1, 1), dt.date(2020, 1, 3))


def test_read_price_csv_names_bad_cell(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,A,B\n2020-01-01,100,200\n2020-01-02,-5,201\n")
    with pytest.raises(DataError) as exc:
        read_price_csv(path)
    msg = str(exc.value)
    assert "A" in msg and "2020-01-02" in msg and ":3" in msg


def test_read_price_csv_market_subset_and_order(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("date,A,B,C\n2020-01-01,1,2,3\n2020-01-02,4,5,6\n")
    panel = read_price_csv(path, markets=["C", "A"])
    assert panel.markets == ("C", "A")
    np.testing.assert_array_equal(panel.prices, [[3, 1], [6, 4]])
    with pytest.raises(DataError):
        read_price_csv(path, markets=["Z"])


def test_read_price_csv_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("time,A\n2020-01-01,1\n")
    with pytest.raises(DataError):
        read_price_csv(path)
