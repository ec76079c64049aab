import datetime as dt
import filecmp
import json

import numpy as np
import pytest

from volspill import (
    DataError,
    EventWindowConfig,
    Family,
    GarchSpec,
    NumericalError,
    PricePanel,
)
from volspill.event import VarConfig, run_event_analysis, write_report

from helpers import garch_returns, make_price_panel

CANDS = [GarchSpec(Family.GARCH)]
VAR_CFG = VarConfig(max_lag=2, horizon=1)


def _mirror_panel(n_markets=3, w=400, seed=0):
    """Panel whose post window replays the pre-window price block, so both
    windows see bit-identical return values (the jump back to the starting
    price falls on the excluded event date)."""
    from helpers import prices_from_returns

    rets = np.column_stack(
        [garch_returns(0.9, w, seed=seed + j, alpha=0.2) for j in range(n_markets)]
    )
    block = prices_from_returns(rets)  # P0..Pw
    prices = np.vstack([block, block])
    start = dt.date(2015, 1, 1)
    dates = tuple(start + dt.timedelta(days=i) for i in range(prices.shape[0]))
    panel = PricePanel(
        tuple(f"M{j + 1}" for j in range(n_markets)), dates, prices
    )
    cfg = EventWindowConfig(
        event_date=dates[1 + w],
        pre_start=dates[1],
        pre_end=dates[w],
        post_start=dates[2 + w],
        post_end=dates[1 + 2 * w],
        require_equal_length=True,
    )
    return panel, cfg


def test_identical_windows_give_zero_deltas():
    panel, cfg = _mirror_panel()
    report = run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    assert report.failures == {}
    for m in report.markets:
        assert report.persistence_delta[m] == 0.0
        assert report.net_delta[m] == 0.0
    assert report.total_index_delta == 0.0
    np.testing.assert_array_equal(
        report.pre.spillover.matrix, report.post.spillover.matrix
    )


def test_deltas_arithmetically_consistent():
    panel, cfg = _mirror_panel(seed=5)
    report = run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    for m in report.markets:
        assert report.persistence_delta[m] == pytest.approx(
            report.post.fits[m].persistence - report.pre.fits[m].persistence, abs=1e-12
        )
    assert report.total_index_delta == pytest.approx(
        report.post.spillover.total_index - report.pre.spillover.total_index, abs=1e-12
    )


def _panel_with_constant_post_market(w=300, seed=2):
    good1 = garch_returns(0.9, 2 * w + 1, seed=seed, alpha=0.2)
    good2 = garch_returns(0.9, 2 * w + 1, seed=seed + 50, alpha=0.2)
    bad = np.concatenate([garch_returns(0.9, w, seed=seed + 99, alpha=0.2), np.zeros(w + 1)])
    panel = make_price_panel(np.column_stack([good1, good2, bad]))
    dates = panel.dates
    cfg = EventWindowConfig(
        event_date=dates[1 + w],
        pre_start=dates[1],
        pre_end=dates[w],
        post_start=dates[2 + w],
        post_end=dates[1 + 2 * w],
    )
    return panel, cfg


def test_failed_market_excluded_symmetrically():
    panel, cfg = _panel_with_constant_post_market()
    report = run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    assert set(report.failures) == {"M3"}
    assert "post" in report.failures["M3"]
    assert report.markets == ("M1", "M2")
    # excluded from BOTH windows' spillover panels, not just the failing one
    assert report.pre.spillover.markets == ("M1", "M2")
    assert report.post.spillover.markets == ("M1", "M2")
    assert "M3" not in report.pre.stats
    assert "M3" not in report.persistence_delta


def test_too_few_markets_errors():
    rets = garch_returns(0.9, 401, seed=1, alpha=0.2)[:, None]
    panel = make_price_panel(rets)
    dates = panel.dates
    cfg = EventWindowConfig(
        event_date=dates[201],
        pre_start=dates[1],
        pre_end=dates[200],
        post_start=dates[202],
        post_end=dates[401],
    )
    with pytest.raises(DataError):
        run_event_analysis(panel, cfg, CANDS, VAR_CFG)


def test_all_but_one_market_failing_errors():
    w = 300
    good = garch_returns(0.9, 2 * w + 1, seed=3, alpha=0.2)
    bad = np.concatenate([garch_returns(0.9, w, seed=4, alpha=0.2), np.zeros(w + 1)])
    panel = make_price_panel(np.column_stack([good, bad]))
    dates = panel.dates
    cfg = EventWindowConfig(
        event_date=dates[1 + w],
        pre_start=dates[1],
        pre_end=dates[w],
        post_start=dates[2 + w],
        post_end=dates[1 + 2 * w],
    )
    with pytest.raises(NumericalError) as exc:
        run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    assert "M2" in str(exc.value)


def test_window_too_short_for_var_errors():
    # windows long enough to fit GARCH (>= 50 obs) but too short for a
    # VAR(6) on 8 markets
    panel, cfg = _mirror_panel(n_markets=8, w=60)
    with pytest.raises(DataError) as exc:
        run_event_analysis(panel, cfg, CANDS, VarConfig(max_lag=6, horizon=1))
    assert "VAR" in str(exc.value)


def test_report_written_byte_identically(tmp_path):
    panel, cfg = _mirror_panel(seed=9)
    report1 = run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    report2 = run_event_analysis(panel, cfg, CANDS, VAR_CFG)
    d1 = write_report(report1, tmp_path / "a", seed=0)
    d2 = write_report(report2, tmp_path / "b", seed=0)
    names = sorted(p.name for p in d1.iterdir())
    assert names == sorted(p.name for p in d2.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(d1, d2, names, shallow=False)
    assert mismatch == [] and errors == []
    report = json.loads((d1 / "report.json").read_text())
    assert report["markets"] == ["M1", "M2", "M3"]
    assert report["config"]["seed"] == 0


def test_paper_shaped_run_full_family_list():
    # five markets, equal 428-observation calendar windows, all nine families
    start = dt.date(2016, 4, 2)
    end = dt.date(2018, 8, 7)
    n_days = (end - start).days + 1
    # strong ARCH effects so no window is close to homoskedastic
    rng_rets = np.column_stack(
        [
            garch_returns(0.93, n_days - 1, seed=700 + j, alpha=0.25, target_var=4e-4)
            for j in range(5)
        ]
    )
    markets = ("QATAR", "SAUDI", "UAE", "BAHRAIN", "EGYPT")
    panel = make_price_panel(rng_rets, markets=markets, start=start)
    cfg = EventWindowConfig(
        event_date=dt.date(2017, 6, 5),
        pre_start=dt.date(2016, 4, 3),
        pre_end=dt.date(2017, 6, 4),
        post_start=dt.date(2017, 6, 6),
        post_end=dt.date(2018, 8, 7),
        require_equal_length=True,
    )
    candidates = [GarchSpec(f) for f in Family]
    report = run_event_analysis(panel, cfg, candidates, VarConfig(max_lag=3, horizon=1))
    assert report.markets == markets
    for m in markets:
        assert report.pre.stats[m].n == 428
        assert report.post.stats[m].n == 428
        assert report.pre.fits[m].converged
    assert report.pre.spillover.matrix.shape == (5, 5)
    np.testing.assert_allclose(report.pre.spillover.matrix.sum(axis=1), 100.0, atol=1e-8)
