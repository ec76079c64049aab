"""Static vector-graphic output for event reports.

SVG files are written without timestamps and with a fixed hash salt so that
repeated runs are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "volspill"

import matplotlib.pyplot as plt

from .event import EventReport

__all__ = ["write_plots"]

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def _save(fig, path: Path) -> None:
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def _slug(market: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in market)


def write_plots(report: EventReport, outdir) -> list[Path]:
    """Per-market conditional-variance lines (pre/post) and one net-spillover
    bar chart per window."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for market in report.markets:
        fig, axes = plt.subplots(1, 2, figsize=(9, 3), sharey=True)
        for ax, res in zip(axes, (report.pre, report.post)):
            sig2 = res.fits[market].cond_variance
            ax.plot(range(len(sig2)), sig2, lw=0.8, color="tab:blue")
            ax.set_title(f"{market} ({res.name})")
            ax.set_xlabel("observation")
        axes[0].set_ylabel("conditional variance")
        fig.tight_layout()
        path = out / f"cond_variance_{_slug(market)}.svg"
        _save(fig, path)
        written.append(path)

    for res in (report.pre, report.post):
        table = res.spillover
        fig, ax = plt.subplots(figsize=(6, 3.5))
        colors = ["tab:green" if v >= 0 else "tab:red" for v in table.net]
        ax.bar(table.markets, table.net, color=colors)
        ax.axhline(0.0, color="black", lw=0.8)
        ax.set_ylabel("net spillover (%)")
        ax.set_title(f"Net directional spillovers ({res.name})")
        fig.tight_layout()
        path = out / f"net_spillover_{res.name}.svg"
        _save(fig, path)
        written.append(path)
    return written
