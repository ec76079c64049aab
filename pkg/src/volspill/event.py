"""Event-window orchestration: split, describe, fit-and-select, spillover.

Runs the full pipeline once per window (pre/post) and pairs the results.
Markets for which every candidate model fails in either window are dropped
from both windows symmetrically and reported in the failure list instead of
aborting the run.  Per-market fits dispatch to a bounded thread pool; the
report assembly is a single-threaded join, so identical inputs produce
byte-identical serialised reports.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    DescriptiveStats,
    EventWindowConfig,
    PricePanel,
    ReturnSeries,
    describe,
    log_returns,
    split_event,
    stats_to_csv,
)
from .exceptions import DataError, NumericalError, VolspillError
from .garch import GarchFit, GarchSpec, select_model
from .spillover import SpilloverTable, VolatilityPanel, select_var_lag, spillover_table

__all__ = ["VarConfig", "WindowResult", "EventReport", "run_event_analysis", "write_report"]

WINDOW_NAMES = ("pre", "post")


@dataclass(frozen=True)
class VarConfig:
    """Spillover-stage settings."""

    max_lag: int = 6
    horizon: int = 1
    log_variance: bool = True


@dataclass(frozen=True)
class WindowResult:
    """Everything computed on one side of the event."""

    name: str
    stats: dict[str, DescriptiveStats]
    fits: dict[str, GarchFit]
    var_lag: int
    spillover: SpilloverTable


@dataclass(frozen=True)
class EventReport:
    """Paired before/after analyses plus their differences."""

    config: EventWindowConfig
    var_config: VarConfig
    markets: tuple[str, ...]
    pre: WindowResult
    post: WindowResult
    persistence_delta: dict[str, float]
    net_delta: dict[str, float]
    total_index_delta: float
    failures: dict[str, str] = field(default_factory=dict)


def _wrapped_select(args):
    market, window, series, candidates = args
    try:
        return select_model(candidates, series, market=market)
    except VolspillError as exc:
        return exc


def run_event_analysis(
    panel: PricePanel,
    cfg: EventWindowConfig,
    candidates: list[GarchSpec],
    var_cfg: VarConfig | None = None,
    scale: float = 1.0,
    max_workers: int | None = None,
) -> EventReport:
    """Deterministic composition of the whole pipeline around an event date."""
    var_cfg = var_cfg or VarConfig()
    if len(panel.markets) < 2:
        raise DataError("spillover analysis needs at least 2 markets")
    if not candidates:
        raise DataError("candidate model list is empty")

    returns = log_returns(panel, scale=scale)
    windows: dict[str, dict[str, ReturnSeries]] = {w: {} for w in WINDOW_NAMES}
    for series in returns:
        pre, post = split_event(series, cfg)
        windows["pre"][series.market] = pre
        windows["post"][series.market] = post

    tasks = [
        (market, w, windows[w][market], candidates)
        for market in panel.markets
        for w in WINDOW_NAMES
    ]
    fits: dict[str, dict[str, GarchFit]] = {w: {} for w in WINDOW_NAMES}
    failures: dict[str, str] = {}
    workers = max_workers or min(8, len(tasks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for (market, w, *_), outcome in zip(
            tasks, pool.map(_wrapped_select, tasks)
        ):
            if isinstance(outcome, VolspillError):
                reason = f"{w}: {outcome}"
                failures[market] = (
                    f"{failures[market]}; {reason}" if market in failures else reason
                )
            else:
                fits[w][market] = outcome

    markets = tuple(m for m in panel.markets if m not in failures)
    if len(markets) < 2:
        raise NumericalError(
            "fewer than 2 markets with usable fits in both windows; failures: "
            + "; ".join(f"{m} ({r})" for m, r in failures.items())
        )

    results: dict[str, WindowResult] = {}
    for w in WINDOW_NAMES:
        stats = {m: describe(windows[w][m]) for m in markets}
        wfits = {m: fits[w][m] for m in markets}
        vol_dates = windows[w][markets[0]].dates[1:]
        values = np.column_stack([wfits[m].cond_variance for m in markets])
        if var_cfg.log_variance:
            values = np.log(values)
        vol_panel = VolatilityPanel(
            markets, vol_dates, values, log_transformed=var_cfg.log_variance
        )
        lag = select_var_lag(vol_panel, var_cfg.max_lag)
        table = spillover_table(vol_panel, lag, var_cfg.horizon)
        results[w] = WindowResult(
            name=w, stats=stats, fits=wfits, var_lag=lag, spillover=table
        )

    pre, post = results["pre"], results["post"]
    pers_delta = {
        m: post.fits[m].persistence - pre.fits[m].persistence for m in markets
    }
    net_pre = dict(zip(pre.spillover.markets, pre.spillover.net))
    net_post = dict(zip(post.spillover.markets, post.spillover.net))
    net_delta = {m: float(net_post[m] - net_pre[m]) for m in markets}

    return EventReport(
        config=cfg,
        var_config=var_cfg,
        markets=markets,
        pre=pre,
        post=post,
        persistence_delta=pers_delta,
        net_delta=net_delta,
        total_index_delta=float(post.spillover.total_index - pre.spillover.total_index),
        failures=failures,
    )


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _net_csv(table: SpilloverTable) -> str:
    lines = ["market,from_others,to_others,net"]
    for i, m in enumerate(table.markets):
        lines.append(
            f"{m},{float(table.from_others[i])!r},"
            f"{float(table.to_others[i])!r},{float(table.net[i])!r}"
        )
    return "\n".join(lines) + "\n"


def _deltas_csv(report: EventReport) -> str:
    lines = [
        "market,persistence_pre,persistence_post,persistence_delta,"
        "net_pre,net_post,net_delta"
    ]
    net_pre = dict(zip(report.pre.spillover.markets, report.pre.spillover.net))
    net_post = dict(zip(report.post.spillover.markets, report.post.spillover.net))
    for m in report.markets:
        lines.append(
            ",".join(
                [
                    m,
                    repr(float(report.pre.fits[m].persistence)),
                    repr(float(report.post.fits[m].persistence)),
                    repr(float(report.persistence_delta[m])),
                    repr(float(net_pre[m])),
                    repr(float(net_post[m])),
                    repr(float(report.net_delta[m])),
                ]
            )
        )
    lines.append(
        "TOTAL_INDEX,"
        + repr(float(report.pre.spillover.total_index))
        + ","
        + repr(float(report.post.spillover.total_index))
        + ","
        + repr(float(report.total_index_delta))
        + ",,,"
    )
    return "\n".join(lines) + "\n"


def report_json_dict(report: EventReport, seed: int | None = None) -> dict:
    cfg = report.config
    d = {
        "config": {
            "event_date": cfg.event_date.isoformat(),
            "pre_start": cfg.pre_start.isoformat(),
            "pre_end": cfg.pre_end.isoformat(),
            "post_start": cfg.post_start.isoformat(),
            "post_end": cfg.post_end.isoformat(),
            "require_equal_length": cfg.require_equal_length,
            "max_var_lag": report.var_config.max_lag,
            "horizon": report.var_config.horizon,
            "log_variance": report.var_config.log_variance,
        },
        "markets": list(report.markets),
        "failures": dict(report.failures),
        "windows": {},
        "deltas": {
            "persistence": {m: report.persistence_delta[m] for m in report.markets},
            "net": {m: report.net_delta[m] for m in report.markets},
            "total_index": report.total_index_delta,
        },
    }
    if seed is not None:
        d["config"]["seed"] = seed
    for w, res in (("pre", report.pre), ("post", report.post)):
        d["windows"][w] = {
            "var_lag": res.var_lag,
            "n_obs": {m: res.stats[m].n for m in report.markets},
            "stats": {m: res.stats[m].as_dict() for m in report.markets},
            "fits": {m: res.fits[m].to_json_dict() for m in report.markets},
            "spillover": res.spillover.to_json_dict(),
        }
    return d


def write_report(report: EventReport, outdir, seed: int | None = None) -> Path:
    """Write the report directory; file contents carry no timestamps, so two
    runs with identical inputs produce byte-identical trees."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for w, res in (("pre", report.pre), ("post", report.post)):
        _write(out / f"stats_{w}.csv", stats_to_csv(res.stats))
        _write(
            out / f"fits_{w}.json",
            json.dumps({m: res.fits[m].to_json_dict() for m in report.markets}, indent=2)
            + "\n",
        )
        _write(out / f"spillover_{w}.csv", res.spillover.to_csv())
        _write(out / f"net_{w}.csv", _net_csv(res.spillover))
    _write(out / "deltas.csv", _deltas_csv(report))
    _write(
        out / "report.json",
        json.dumps(report_json_dict(report, seed=seed), indent=2) + "\n",
    )
    return out
