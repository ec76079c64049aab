"""Price panels, log returns, descriptive statistics and event-window splits.

Input is a CSV with a ``date,<market>,...`` header, ISO-8601 dates and one
price column per market.  Rows with any missing price are dropped panel-wide
so that every market stays aligned on the same dates (the later VAR stage
needs a balanced panel).
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .exceptions import DataError

__all__ = [
    "PricePanel",
    "ReturnSeries",
    "DescriptiveStats",
    "EventWindowConfig",
    "read_price_csv",
    "log_returns",
    "describe",
    "jarque_bera_stat",
    "split_event",
    "stats_to_csv",
    "stats_to_json",
]

# Row order of the descriptive-statistics table.
STAT_ROWS = (
    ("Mean", "mean"),
    ("Median", "median"),
    ("Maximum", "maximum"),
    ("Minimum", "minimum"),
    ("Std. Dev.", "std_dev"),
    ("Skewness", "skewness"),
    ("Kurtosis", "kurtosis"),
    ("Jarque-Bera", "jarque_bera"),
    ("Probability", "jb_p_value"),
)


@dataclass(frozen=True)
class PricePanel:
    """Aligned price levels for several markets."""

    markets: tuple[str, ...]
    dates: tuple[dt.date, ...]
    prices: np.ndarray  # shape (T, N), strictly positive

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2:
            raise DataError("prices must be a 2-d matrix (dates x markets)")
        if prices.shape != (len(self.dates), len(self.markets)):
            raise DataError(
                f"price matrix shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.markets)} markets"
            )
        if len(self.markets) != len(set(self.markets)):
            raise DataError("duplicate market identifiers")
        for a, b in zip(self.dates, self.dates[1:]):
            if not a < b:
                raise DataError(f"dates not strictly increasing at {a} -> {b}")
        bad = np.argwhere(~(prices > 0) | ~np.isfinite(prices))
        if bad.size:
            t, j = bad[0]
            raise DataError(
                f"non-positive price for market {self.markets[j]!r} "
                f"on {self.dates[t]}: {prices[t, j]}"
            )

    @property
    def n_obs(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnSeries:
    """Dated log returns for one market."""

    market: str
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) != len(self.dates):
            raise DataError(
                f"return series {self.market!r}: {len(values)} values "
                f"for {len(self.dates)} dates"
            )
        if values.size and not np.all(np.isfinite(values)):
            raise DataError(f"non-finite return in series {self.market!r}")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class DescriptiveStats:
    """Moment-based summary of a return series.

    Skewness and kurtosis use divide-by-n central moments and kurtosis is
    non-excess, so jarque_bera = n/6 * (S^2 + (K-3)^2 / 4) reproduces the
    usual tabulated statistic; the p-value is chi-square with 2 dof.
    """

    mean: float
    median: float
    maximum: float
    minimum: float
    std_dev: float
    skewness: float
    kurtosis: float
    jarque_bera: float
    jb_p_value: float
    n: int

    def as_dict(self) -> dict:
        d = {label: getattr(self, attr) for label, attr in STAT_ROWS}
        d["Observations"] = self.n
        return d


@dataclass(frozen=True)
class EventWindowConfig:
    """Pre/post comparison windows around an event date.

    The observation falling on ``event_date`` itself belongs to neither
    window.
    """

    event_date: dt.date
    pre_start: dt.date
    pre_end: dt.date
    post_start: dt.date
    post_end: dt.date
    require_equal_length: bool = False

    def __post_init__(self):
        ordered = (
            self.pre_start < self.pre_end < self.event_date
            and self.event_date <= self.post_start < self.post_end
        )
        if not ordered:
            raise DataError(
                "event windows must satisfy pre_start < pre_end < event_date "
                f"<= post_start < post_end, got pre={self.pre_start}..{self.pre_end}, "
                f"event={self.event_date}, post={self.post_start}..{self.post_end}"
            )


def read_price_csv(path, markets: list[str] | None = None) -> PricePanel:
    """Load a ``date,<market>,...`` CSV into a PricePanel.

    ``markets`` restricts (and orders) the columns; rows with any missing or
    unparseable price are dropped panel-wide.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(header) < 2 or header[0].strip().lower() != "date":
            raise DataError(f"{path}: header must be 'date,<market>,...', got {header!r}")
        all_markets = [h.strip() for h in header[1:]]
        if markets is None:
            selected = all_markets
        else:
            missing = [m for m in markets if m not in all_markets]
            if missing:
                raise DataError(f"{path}: unknown market column(s) {missing}")
            selected = list(markets)
        cols = [all_markets.index(m) + 1 for m in selected]

        dates: list[dt.date] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad date {row[0]!r}") from None
            vals = []
            skip = False
            for j, c in zip(cols, selected):
                cell = row[j].strip()
                if cell in ("", "NA", "NaN", "nan", "null"):
                    skip = True  # market holiday: drop the row panel-wide
                    break
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: bad price {cell!r} for market {c!r}") from None
                if not (math.isfinite(v) and v > 0):
                    raise DataError(
                        f"{path}:{lineno}: non-positive price {v} for market {c!r} on {date}"
                    )
                vals.append(v)
            if skip:
                continue
            dates.append(date)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no complete observation rows")
    return PricePanel(tuple(selected), tuple(dates), np.array(rows))


def log_returns(panel: PricePanel, scale: float = 1.0) -> list[ReturnSeries]:
    """Log-difference each market's prices; dates shift to the later observation."""
    if not scale > 0:
        raise DataError(f"scale must be positive, got {scale}")
    if panel.n_obs < 2:
        raise DataError("need at least 2 price observations to form returns")
    logp = np.log(panel.prices)
    rets = scale * np.diff(logp, axis=0)
    dates = panel.dates[1:]
    return [
        ReturnSeries(market, dates, rets[:, j])
        for j, market in enumerate(panel.markets)
    ]


def jarque_bera_stat(skewness: float, kurtosis: float, n: int) -> float:
    """Jarque-Bera statistic from moment-based skewness and non-excess
    kurtosis: n/6 * (S^2 + (K - 3)^2 / 4)."""
    return n / 6.0 * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)


def describe(series: ReturnSeries | np.ndarray) -> DescriptiveStats:
    """Descriptive statistics; requires n >= 4 and non-constant values."""
    x = np.asarray(series.values if isinstance(series, ReturnSeries) else series, dtype=float)
    n = x.size
    if n < 4:
        raise DataError(f"need at least 4 observations for kurtosis, got {n}")
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    if m2 <= 0.0:
        raise DataError("zero variance: skewness and kurtosis undefined")
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    jb = jarque_bera_stat(skew, kurt, n)
    p = float(sps.chi2.sf(jb, df=2))
    return DescriptiveStats(
        mean=mean,
        median=float(np.median(x)),
        maximum=float(np.max(x)),
        minimum=float(np.min(x)),
        std_dev=float(np.std(x, ddof=1)),
        skewness=skew,
        kurtosis=kurt,
        jarque_bera=jb,
        jb_p_value=p,
        n=n,
    )


def split_event(
    series: ReturnSeries, cfg: EventWindowConfig
) -> tuple[ReturnSeries, ReturnSeries]:
    """Slice the series into its pre-event and post-event windows.

    The event-date observation is excluded from both windows.
    """
    dates = np.array([d.toordinal() for d in series.dates])
    ev = cfg.event_date.toordinal()
    pre_mask = (dates >= cfg.pre_start.toordinal()) & (dates <= cfg.pre_end.toordinal())
    post_mask = (
        (dates >= cfg.post_start.toordinal())
        & (dates <= cfg.post_end.toordinal())
        & (dates != ev)
    )
    pre_idx = np.flatnonzero(pre_mask)
    post_idx = np.flatnonzero(post_mask)
    if pre_idx.size == 0:
        raise DataError(
            f"{series.market!r}: pre window {cfg.pre_start}..{cfg.pre_end} "
            "contains no observations"
        )
    if post_idx.size == 0:
        raise DataError(
            f"{series.market!r}: post window {cfg.post_start}..{cfg.post_end} "
            "contains no observations"
        )
    if cfg.require_equal_length and pre_idx.size != post_idx.size:
        raise DataError(
            f"{series.market!r}: unequal event windows "
            f"(pre has {pre_idx.size} observations, post has {post_idx.size})"
        )
    pre = ReturnSeries(
        series.market,
        tuple(series.dates[i] for i in pre_idx),
        series.values[pre_idx],
    )
    post = ReturnSeries(
        series.market,
        tuple(series.dates[i] for i in post_idx),
        series.values[post_idx],
    )
    return pre, post


def stats_to_csv(stats: dict[str, DescriptiveStats]) -> str:
    """Render one stats table, markets as columns, rows in the fixed order."""
    markets = list(stats)
    lines = ["stat," + ",".join(markets)]
    for label, attr in STAT_ROWS:
        cells = [repr(getattr(stats[m], attr)) for m in markets]
        lines.append(f"{label}," + ",".join(cells))
    return "\n".join(lines) + "\n"


def stats_to_json(stats: dict[str, DescriptiveStats]) -> str:
    return json.dumps({m: s.as_dict() for m, s in stats.items()}, indent=2)
