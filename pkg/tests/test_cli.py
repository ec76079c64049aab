import datetime as dt
import filecmp
import json

import numpy as np
import pytest
from click.testing import CliRunner

from volspill.cli import main

from helpers import garch_returns, make_price_panel, write_price_csv


@pytest.fixture(scope="module")
def two_market_csv(tmp_path_factory):
    rets = np.column_stack(
        [garch_returns(0.9, 900, seed=s, alpha=0.2) for s in (31, 32)]
    )
    panel = make_price_panel(rets, markets=("AA", "BB"))
    return str(write_price_csv(tmp_path_factory.mktemp("data") / "panel.csv", panel))


@pytest.fixture(scope="module")
def five_market_csv(tmp_path_factory):
    rets = np.column_stack(
        [garch_returns(0.9, 700, seed=40 + s, alpha=0.2) for s in range(5)]
    )
    panel = make_price_panel(rets)
    return str(write_price_csv(tmp_path_factory.mktemp("data5") / "panel.csv", panel))


def _run(*args):
    return CliRunner().invoke(main, list(args))


def test_describe_success_and_table(two_market_csv):
    res = _run("describe", "--input", two_market_csv)
    assert res.exit_code == 0
    lines = res.output.strip().splitlines()
    assert lines[0] == "stat,AA,BB"
    assert lines[1].startswith("Mean,")


def test_describe_missing_file_exits_2(tmp_path):
    res = _run("describe", "--input", str(tmp_path / "nope.csv"))
    assert res.exit_code == 2


def test_describe_bad_price_exits_2_naming_cell(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("date,A\n2020-01-01,100\n2020-01-02,-3\n")
    res = _run("describe", "--input", str(path))
    assert res.exit_code == 2
    assert "A" in res.output and "2020-01-02" in res.output


def test_describe_json_output(two_market_csv, tmp_path):
    res = _run(
        "describe", "--input", two_market_csv, "--format", "json",
        "--out", str(tmp_path / "o"),
    )
    assert res.exit_code == 0
    data = json.loads((tmp_path / "o" / "stats.json").read_text())
    assert set(data) == {"AA", "BB"}
    assert "Jarque-Bera" in data["AA"]


def test_fit_selects_family(two_market_csv):
    res = _run("fit", "--input", two_market_csv, "--families", "GARCH,TGARCH")
    assert res.exit_code == 0
    header = res.output.splitlines()[0]
    assert header.startswith("market,family")
    rows = res.output.strip().splitlines()[1:3]
    assert all(r.split(",")[1] in ("GARCH", "TGARCH") for r in rows)


def test_fit_empty_family_list_exits_2(two_market_csv):
    res = _run("fit", "--input", two_market_csv, "--families", ",")
    assert res.exit_code == 2


def test_fit_unknown_family_exits_2(two_market_csv):
    res = _run("fit", "--input", two_market_csv, "--families", "NOPE")
    assert res.exit_code == 2


def test_fit_constant_series_exits_3(tmp_path):
    lines = ["date,A"] + [
        f"{dt.date(2020, 1, 1) + dt.timedelta(days=i)},100.0" for i in range(400)
    ]
    path = tmp_path / "const.csv"
    path.write_text("\n".join(lines) + "\n")
    res = _run("fit", "--input", str(path), "--families", "GARCH")
    assert res.exit_code == 3


def test_spillover_single_market_exits_2(two_market_csv):
    res = _run("spillover", "--input", two_market_csv, "--markets", "AA")
    assert res.exit_code == 2


def test_spillover_independent_pair_small_index(two_market_csv):
    res = _run(
        "spillover", "--input", two_market_csv, "--families", "GARCH",
        "--max-var-lag", "2",
    )
    assert res.exit_code == 0
    total = float(res.output.strip().splitlines()[-1].split(":")[1].rstrip("%"))
    assert total < 5.0


def test_spillover_five_markets_rows_sum_100(five_market_csv):
    res = _run(
        "spillover", "--input", five_market_csv, "--families", "GARCH",
        "--max-var-lag", "2",
    )
    assert res.exit_code == 0
    lines = res.output.splitlines()
    for row in lines[1:6]:
        cells = row.split(",")
        assert sum(float(c) for c in cells[1:6]) == pytest.approx(100.0, abs=1e-8)


def _event_args(csv_path, out, extra=()):
    return [
        "event", "--input", csv_path, "--families", "GARCH",
        "--event-date", "2016-03-25",
        "--pre", "2015-01-02:2016-03-24",
        "--post", "2016-03-26:2017-06-16",
        "--equal-windows", "--max-var-lag", "2", "--out", out, *extra,
    ]


def test_event_writes_report_and_is_idempotent(two_market_csv, tmp_path):
    res1 = CliRunner().invoke(main, _event_args(two_market_csv, str(tmp_path / "r1")))
    assert res1.exit_code == 0, res1.output
    res2 = CliRunner().invoke(main, _event_args(two_market_csv, str(tmp_path / "r2")))
    assert res2.exit_code == 0
    names = sorted(p.name for p in (tmp_path / "r1").iterdir())
    assert "report.json" in names and "deltas.csv" in names
    match, mismatch, errors = filecmp.cmpfiles(
        tmp_path / "r1", tmp_path / "r2", names, shallow=False
    )
    assert mismatch == [] and errors == []


def test_event_unequal_windows_exit_2_with_counts(two_market_csv, tmp_path):
    args = [
        "event", "--input", two_market_csv, "--families", "GARCH",
        "--event-date", "2016-03-25",
        "--pre", "2015-01-02:2016-03-24",
        "--post", "2016-03-26:2017-06-10",
        "--equal-windows", "--out", str(tmp_path / "r"),
    ]
    res = CliRunner().invoke(main, args)
    assert res.exit_code == 2
    assert "448" in res.output and "442" in res.output


def test_event_plot_toggle(two_market_csv, tmp_path):
    out = tmp_path / "rp"
    res = CliRunner().invoke(
        main, _event_args(two_market_csv, str(out), extra=["--plots"])
    )
    assert res.exit_code == 0, res.output
    svgs = sorted(p.name for p in out.glob("*.svg"))
    assert svgs == [
        "cond_variance_AA.svg",
        "cond_variance_BB.svg",
        "net_spillover_post.svg",
        "net_spillover_pre.svg",
    ]
    out2 = tmp_path / "rq"
    res2 = CliRunner().invoke(main, _event_args(two_market_csv, str(out2)))
    assert res2.exit_code == 0
    assert list(out2.glob("*.svg")) == []


def test_event_requires_out(two_market_csv):
    res = _run(
        "event", "--input", two_market_csv, "--event-date", "2016-03-25",
        "--pre", "2015-01-02:2016-03-24", "--post", "2016-03-26:2017-06-16",
    )
    assert res.exit_code == 2


def test_bad_window_format_exits_2(two_market_csv, tmp_path):
    res = _run(
        "event", "--input", two_market_csv, "--event-date", "2016-03-25",
        "--pre", "2015-01-02", "--post", "2016-03-26:2017-06-16",
        "--out", str(tmp_path / "x"),
    )
    assert res.exit_code == 2
