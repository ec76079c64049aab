"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
Commands re-run byte-identically for identical configuration: no output
file embeds a timestamp.
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data import (
    EventWindowConfig,
    describe,
    log_returns,
    read_price_csv,
    stats_to_csv,
    stats_to_json,
)
from .event import VarConfig, run_event_analysis, write_report
from .exceptions import DataError, NumericalError
from .garch import Family, GarchSpec, fit_table_csv, select_model
from .spillover import VolatilityPanel, select_var_lag, spillover_table

DEFAULT_FAMILIES = ",".join(f.value for f in Family)


def exit_code_guard(fn):
    """Map package exceptions onto the CLI exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DataError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _parse_markets(_ctx, _param, value):
    if value is None:
        return None
    return [m.strip() for m in value.split(",") if m.strip()]


def _parse_families(_ctx, _param, value):
    names = [f.strip().upper() for f in value.split(",") if f.strip()]
    if not names:
        raise click.UsageError("candidate family list is empty")
    specs = []
    for name in names:
        try:
            specs.append(GarchSpec(Family(name)))
        except ValueError:
            raise click.UsageError(
                f"unknown family {name!r}; choose from {DEFAULT_FAMILIES}"
            ) from None
    return specs


def _parse_date(_ctx, param, value):
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        raise click.UsageError(f"--{param.name}: bad date {value!r}") from None


def _parse_window(_ctx, param, value):
    if value is None:
        return None
    try:
        a, b = value.split(":")
        return dt.date.fromisoformat(a), dt.date.fromisoformat(b)
    except ValueError:
        raise click.UsageError(
            f"--{param.name}: expected START:END ISO dates, got {value!r}"
        ) from None


def input_options(fn):
    fn = click.option(
        "--input", "input_path", required=True,
        type=click.Path(exists=True, dir_okay=False),
        help="price CSV with a date,<market>,... header",
    )(fn)
    fn = click.option(
        "--markets", callback=_parse_markets, default=None,
        help="comma-separated subset (and order) of market columns",
    )(fn)
    fn = click.option(
        "--scale", type=float, default=1.0, show_default=True,
        help="multiply log returns by this factor",
    )(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)(fn)
    fn = click.option(
        "--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
        show_default=True,
    )(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    return fn


def model_options(fn):
    fn = click.option(
        "--families", callback=_parse_families, default=DEFAULT_FAMILIES,
        show_default=True, help="comma-separated candidate families",
    )(fn)
    fn = click.option("--max-var-lag", type=int, default=6, show_default=True)(fn)
    fn = click.option("--horizon", type=int, default=1, show_default=True)(fn)
    fn = click.option(
        "--log-variance/--raw-variance", default=True, show_default=True,
        help="run the VAR on log conditional variances",
    )(fn)
    return fn


def _load_returns(input_path, markets, scale):
    panel = read_price_csv(input_path, markets=markets)
    return panel, log_returns(panel, scale=scale)


def _write_out(out_dir, name, text):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        fh.write(text)


@click.group()
@click.version_option(package_name="volspill")
def main():
    """Volatility modelling and spillover analysis."""


@main.command("describe")
@input_options
@exit_code_guard
def cmd_describe(input_path, markets, scale, out_dir, fmt, seed):
    """Descriptive statistics per market."""
    _, returns = _load_returns(input_path, markets, scale)
    stats = {s.market: describe(s) for s in returns}
    text = stats_to_csv(stats) if fmt == "csv" else stats_to_json(stats) + "\n"
    click.echo(text, nl=False)
    if out_dir:
        _write_out(out_dir, f"stats.{fmt}", text)


@main.command("fit")
@input_options
@model_options
@exit_code_guard
def cmd_fit(input_path, markets, scale, out_dir, fmt, seed, families, max_var_lag,
            horizon, log_variance):
    """Fit candidate models per market and select by AIC."""
    _, returns = _load_returns(input_path, markets, scale)
    fits, failures = {}, {}
    for series in returns:
        try:
            fits[series.market] = select_model(families, series, market=series.market)
        except NumericalError as exc:
            failures[series.market] = str(exc)
    if fits:
        if fmt == "csv":
            text = fit_table_csv(fits)
        else:
            text = json.dumps({m: f.to_json_dict() for m, f in fits.items()}, indent=2) + "\n"
        click.echo(text, nl=False)
        if out_dir:
            _write_out(out_dir, f"fits.{fmt}", text)
    if failures:
        for market, reason in failures.items():
            click.echo(f"error: {market}: {reason}", err=True)
        sys.exit(3)


@main.command("spillover")
@input_options
@model_options
@exit_code_guard
def cmd_spillover(input_path, markets, scale, out_dir, fmt, seed, families,
                  max_var_lag, horizon, log_variance):
    """Volatility-spillover table across all markets."""
    panel, returns = _load_returns(input_path, markets, scale)
    if len(panel.markets) < 2:
        raise DataError("spillover analysis needs at least 2 markets")
    if horizon < 1:
        raise DataError(f"horizon must be >= 1, got {horizon}")
    fits = {
        s.market: select_model(families, s, market=s.market) for s in returns
    }
    values = np.column_stack([fits[m].cond_variance for m in panel.markets])
    if log_variance:
        values = np.log(values)
    # conditional variances align with the residuals: one fewer than returns
    vol_panel = VolatilityPanel(
        panel.markets, returns[0].dates[1:], values, log_transformed=log_variance
    )
    lag = select_var_lag(vol_panel, max_var_lag)
    table = spillover_table(vol_panel, lag, horizon)
    text = (
        table.to_csv()
        if fmt == "csv"
        else json.dumps(table.to_json_dict(), indent=2) + "\n"
    )
    click.echo(text, nl=False)
    click.echo(f"VAR lag (AIC): {lag}")
    click.echo(f"Total spillover index: {table.total_index:.4f}%")
    if out_dir:
        _write_out(out_dir, f"spillover.{fmt}", text)


@main.command("event")
@input_options
@model_options
@click.option("--event-date", callback=_parse_date, required=True)
@click.option("--pre", callback=_parse_window, required=True, help="pre window START:END")
@click.option("--post", callback=_parse_window, required=True, help="post window START:END")
@click.option("--equal-windows", is_flag=True, default=False,
              help="require equal observation counts in both windows")
@click.option("--plots/--no-plots", default=False, show_default=True,
              help="emit SVG conditional-variance and net-spillover charts")
@exit_code_guard
def cmd_event(input_path, markets, scale, out_dir, fmt, seed, families, max_var_lag,
              horizon, log_variance, event_date, pre, post, equal_windows, plots):
    """Full before/after event analysis; writes a report directory."""
    if out_dir is None:
        raise click.UsageError("--out is required for the event command")
    panel = read_price_csv(input_path, markets=markets)
    cfg = EventWindowConfig(
        event_date=event_date,
        pre_start=pre[0],
        pre_end=pre[1],
        post_start=post[0],
        post_end=post[1],
        require_equal_length=equal_windows,
    )
    var_cfg = VarConfig(max_lag=max_var_lag, horizon=horizon, log_variance=log_variance)
    report = run_event_analysis(panel, cfg, families, var_cfg, scale=scale)
    write_report(report, out_dir, seed=seed)
    if plots:
        from .plots import write_plots

        write_plots(report, out_dir)
    for market, reason in report.failures.items():
        click.echo(f"warning: {market} excluded: {reason}", err=True)
    click.echo(f"report written to {out_dir}")
    click.echo(
        "total spillover index: pre "
        f"{report.pre.spillover.total_index:.4f}% -> post "
        f"{report.post.spillover.total_index:.4f}%"
    )


if __name__ == "__main__":
    main()
