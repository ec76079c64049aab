"""Shared simulation helpers for the test suite.

These are intentionally written against raw numpy (not the package's VAR or
spillover code paths) so that tests using them act as independent oracles.
"""

import datetime as dt
from pathlib import Path

import numpy as np

from volspill import EventWindowConfig, PricePanel, kernels


def simulate_var(phi_list, sigma, n, seed, burn=200):
    """Direct VAR simulation by iterating the defining recursion."""
    phi_list = [np.asarray(p, dtype=float) for p in phi_list]
    sigma = np.asarray(sigma, dtype=float)
    n_vars = sigma.shape[0]
    p = len(phi_list)
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(sigma)
    eps = rng.standard_normal((n + burn, n_vars)) @ chol.T
    x = np.zeros((n + burn, n_vars))
    for t in range(p, n + burn):
        acc = eps[t].copy()
        for k in range(p):
            acc += phi_list[k] @ x[t - 1 - k]
        x[t] = acc
    return x[burn:]


def random_stable_var(n_vars, p, seed, radius=0.7):
    """Random VAR coefficient matrices rescaled to a target spectral radius."""
    rng = np.random.default_rng(seed)
    coeffs = rng.normal(scale=0.5, size=(p, n_vars, n_vars))
    comp = np.zeros((n_vars * p, n_vars * p))
    comp[:n_vars] = np.concatenate(list(coeffs), axis=1)
    if p > 1:
        comp[n_vars:, :-n_vars] = np.eye(n_vars * (p - 1))
    rho = np.max(np.abs(np.linalg.eigvals(comp)))
    if rho > 0:
        for k in range(p):
            coeffs[k] *= (radius / rho) ** (k + 1)
    a = rng.normal(size=(n_vars, n_vars))
    sigma = a @ a.T + n_vars * np.eye(n_vars)
    return coeffs, sigma


def garch_returns(ab, n, seed, alpha=0.08, target_var=1e-4, z=None):
    """One GARCH(1,1) return path with persistence ``ab`` and the given
    unconditional variance; optionally driven by supplied shocks ``z``."""
    beta = ab - alpha
    omega = target_var * (1.0 - ab)
    if z is None:
        z = np.random.default_rng(seed).standard_normal(n)
    r, _, _ = kernels.simulate_garch(
        z, target_var, 0.0, 0.0, 0.0, 0.0, omega, np.array([alpha]), np.array([beta])
    )
    return r


def correlated_garch_returns(n, n_markets, ab, common, seed, target_var=1e-4):
    """Market shocks share a common factor with weight ``common``."""
    rng = np.random.default_rng(seed)
    factor = rng.standard_normal(n)
    cols = []
    for _ in range(n_markets):
        own = rng.standard_normal(n)
        z = np.sqrt(1.0 - common) * own + np.sqrt(common) * factor
        cols.append(garch_returns(ab, n, seed=None, target_var=target_var, z=z))
    return np.column_stack(cols)


def prices_from_returns(returns_matrix, start_price=100.0):
    """Invert the log-return transform; adds the initial price row."""
    returns_matrix = np.atleast_2d(returns_matrix)
    logp = np.vstack(
        [np.zeros((1, returns_matrix.shape[1])), np.cumsum(returns_matrix, axis=0)]
    )
    return start_price * np.exp(logp)


def make_price_panel(returns_matrix, markets=None, start=dt.date(2015, 1, 1)):
    prices = prices_from_returns(returns_matrix)
    t, n = prices.shape
    if markets is None:
        markets = tuple(f"M{j + 1}" for j in range(n))
    dates = tuple(start + dt.timedelta(days=i) for i in range(t))
    return PricePanel(tuple(markets), dates, prices)


def write_price_csv(path, panel):
    lines = ["date," + ",".join(panel.markets)]
    for i, d in enumerate(panel.dates):
        cells = ",".join(repr(float(v)) for v in panel.prices[i])
        lines.append(f"{d.isoformat()},{cells}")
    Path(path).write_text("\n".join(lines) + "\n")
    return path


def regime_shift_panel(
    seed,
    n_window=2500,
    n_markets=5,
    ab_pre=0.78,
    ab_post=0.92,
    common_pre=0.05,
    common_post=0.5,
):
    """Synthetic panel whose post-event window has higher persistence and a
    stronger common shock factor, plus the matching window config."""
    pre = correlated_garch_returns(n_window, n_markets, ab_pre, common_pre, seed)
    post = correlated_garch_returns(
        n_window, n_markets, ab_post, common_post, seed + 7919
    )
    rets = np.vstack([pre, np.zeros((1, n_markets)), post])
    panel = make_price_panel(rets)
    dates = panel.dates
    cfg = EventWindowConfig(
        event_date=dates[1 + n_window],
        pre_start=dates[1],
        pre_end=dates[n_window],
        post_start=dates[2 + n_window],
        post_end=dates[1 + 2 * n_window],
        require_equal_length=True,
    )
    return panel, cfg
