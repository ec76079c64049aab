"""Volatility-transmission measurement via a generalized VAR decomposition.

Pipeline: equation-by-equation least-squares VAR on the (optionally
log-transformed) conditional-variance panel, moving-average representation,
then the generalized forecast-error variance decomposition

    theta_ij(H) = [ sigma_jj^-1 sum_{h<H} (e_i' A_h S e_j)^2 ]
                  / [ sum_{h<H} e_i' A_h S A_h' e_i ]

with S the residual covariance.  Generalized rows need not sum to one, so
each row is normalised and expressed in percent; the decomposition is then
invariant to variable ordering.  Directional aggregates follow the usual
connectedness conventions: "from others" is the off-diagonal row sum,
"to others" the off-diagonal column sum, net their difference, and the total
index the grand off-diagonal sum divided by the number of markets.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NumericalError

__all__ = [
    "VolatilityPanel",
    "VarModel",
    "SpilloverTable",
    "fit_var",
    "select_var_lag",
    "ma_coefficients",
    "generalized_fevd",
    "spillover_table",
    "net_directional",
]


@dataclass(frozen=True)
class VolatilityPanel:
    """Aligned conditional-variance series (or their logs) for N markets."""

    markets: tuple[str, ...]
    dates: tuple[dt.date, ...]
    values: np.ndarray  # (T, N)
    log_transformed: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape != (len(self.dates), len(self.markets)):
            raise DataError(
                f"volatility panel shape {values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.markets)} markets"
            )
        if not np.all(np.isfinite(values)):
            raise DataError("volatility panel contains non-finite values")
        if not self.log_transformed and not np.all(values > 0):
            raise DataError("untransformed conditional variances must be positive")

    @classmethod
    def from_values(cls, values, markets=None, log_transformed=False) -> "VolatilityPanel":
        values = np.asarray(values, dtype=float)
        t, n = values.shape
        if markets is None:
            markets = tuple(f"m{i + 1}" for i in range(n))
        start = dt.date(2000, 1, 1)
        dates = tuple(start + dt.timedelta(days=i) for i in range(t))
        return cls(tuple(markets), dates, values, log_transformed)


@dataclass(frozen=True)
class VarModel:
    """Least-squares VAR(P) estimate."""

    markets: tuple[str, ...]
    lag_order: int
    intercepts: np.ndarray  # (N,)
    coeffs: np.ndarray  # (P, N, N); coeffs[k][i, j] multiplies x_{j, t-k-1} in equation i
    sigma: np.ndarray  # (N, N) residual covariance, df-adjusted
    aic: float
    n_obs: int
    spectral_radius: float

    @property
    def n_vars(self) -> int:
        return len(self.markets)


def _lagged_design(values: np.ndarray, p: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    t, n = values.shape
    rows = t - start
    x = np.ones((rows, 1 + n * p))
    for k in range(1, p + 1):
        x[:, 1 + n * (k - 1) : 1 + n * k] = values[start - k : t - k]
    return x, values[start:]


def _companion_radius(coeffs: np.ndarray) -> float:
    p, n, _ = coeffs.shape
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.concatenate(list(coeffs), axis=1)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def _ols_var(values: np.ndarray, markets, p: int, start: int | None = None):
    t, n = values.shape
    start = p if start is None else start
    if start < p:
        raise DataError(f"conditioning sample start {start} < lag order {p}")
    rows = t - start
    if rows <= n * p + 10:
        raise DataError(
            f"VAR({p}) on {n} variables needs more than {n * p + 10} usable "
            f"observations, got {rows}"
        )
    x, y = _lagged_design(values, p, start)
    ncols = x.shape[1]
    rank = np.linalg.matrix_rank(x)
    if rank < ncols:
        # name the collinear regressors via column-pivoted QR
        from scipy.linalg import qr

        _, _, piv = qr(x, mode="economic", pivoting=True)
        labels = ["const"]
        for k in range(1, p + 1):
            labels += [f"{m} lag {k}" for m in markets]
        bad = sorted(labels[i] for i in piv[rank:])
        raise DataError(f"rank-deficient VAR regressors; collinear columns: {bad}")
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    dof = rows - n * p - 1
    if dof <= 0:
        raise DataError(f"no residual degrees of freedom for VAR({p})")
    sigma = resid.T @ resid / dof
    sigma_mle = resid.T @ resid / rows
    sign, logdet = np.linalg.slogdet(sigma_mle)
    if sign <= 0:
        raise NumericalError(f"VAR({p}): residual covariance is singular")
    aic = float(logdet + 2.0 * (n * n * p + n) / rows)
    intercepts = coef[0]
    coeffs = np.empty((p, n, n))
    for k in range(p):
        coeffs[k] = coef[1 + n * k : 1 + n * (k + 1)].T
    return intercepts, coeffs, sigma, aic, rows


def fit_var(panel: VolatilityPanel, p: int) -> VarModel:
    """Estimate a VAR(P) by equation-by-equation least squares.

    The residual covariance uses the degrees-of-freedom divisor
    (T - N P - 1); a companion spectral radius >= 1 triggers a warning, not
    an error.
    """
    if p < 1:
        raise DataError(f"lag order must be >= 1, got {p}")
    intercepts, coeffs, sigma, aic_val, rows = _ols_var(panel.values, panel.markets, p)
    radius = _companion_radius(coeffs)
    if radius >= 1.0:
        warnings.warn(
            f"VAR({p}) companion spectral radius {radius:.4f} >= 1: "
            "the estimated system is not covariance stationary",
            RuntimeWarning,
            stacklevel=2,
        )
    return VarModel(
        markets=panel.markets,
        lag_order=p,
        intercepts=intercepts,
        coeffs=coeffs,
        sigma=sigma,
        aic=aic_val,
        n_obs=rows,
        spectral_radius=radius,
    )


def select_var_lag(panel: VolatilityPanel, max_p: int) -> int:
    """Pick the lag order minimising the multivariate AIC
    ln det(Sigma_mle) + 2 (N^2 P + N) / T on a common estimation sample
    conditioned on ``max_p`` initial observations."""
    if max_p < 1:
        raise DataError(f"max_p must be >= 1, got {max_p}")
    best_p, best_aic = 1, np.inf
    for p in range(1, max_p + 1):
        *_, aic_val, _rows = _ols_var(panel.values, panel.markets, p, start=max_p)
        if aic_val < best_aic:
            best_p, best_aic = p, aic_val
    return best_p


def ma_coefficients(model: VarModel, horizon: int) -> np.ndarray:
    """Moving-average matrices A_0..A_{H-1}; A_0 = I and
    A_h = sum_k Phi_k A_{h-k}."""
    if horizon < 1:
        raise DataError(f"horizon must be >= 1, got {horizon}")
    n = model.n_vars
    p = model.lag_order
    out = np.zeros((horizon, n, n))
    out[0] = np.eye(n)
    for h in range(1, horizon):
        acc = np.zeros((n, n))
        for k in range(1, min(h, p) + 1):
            acc += model.coeffs[k - 1] @ out[h - k]
        out[h] = acc
    return out


@dataclass(frozen=True)
class SpilloverTable:
    """Row-normalised generalized FEVD in percent, with the connectedness
    aggregates."""

    markets: tuple[str, ...]
    matrix: np.ndarray  # (N, N); matrix[i, j] = % of i's FEV due to shocks in j
    from_others: np.ndarray
    to_others: np.ndarray
    net: np.ndarray
    includes_own: np.ndarray
    total_index: float
    horizon: int
    raw_row_sums: np.ndarray  # pre-normalisation theta row sums (diagnostic)

    def to_csv(self) -> str:
        """Input-output layout: N x N block, a "from others" column, then
        "to others" / "including own" rows.  The corner of the "to others"
        row is the grand off-diagonal sum; the corner of the "including own"
        row is the total spillover index."""
        n = len(self.markets)
        lines = ["market," + ",".join(self.markets) + ",Contribution from others"]
        for i, m in enumerate(self.markets):
            cells = [repr(float(v)) for v in self.matrix[i]]
            lines.append(f"{m}," + ",".join(cells) + f",{float(self.from_others[i])!r}")
        to_cells = [repr(float(v)) for v in self.to_others]
        grand = float(self.to_others.sum())
        lines.append("Contribution to others," + ",".join(to_cells) + f",{grand!r}")
        own_cells = [repr(float(v)) for v in self.includes_own]
        lines.append(
            "Contribution including own,"
            + ",".join(own_cells)
            + f",{float(self.total_index)!r}"
        )
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "markets": list(self.markets),
            "horizon": self.horizon,
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "from_others": [float(v) for v in self.from_others],
            "to_others": [float(v) for v in self.to_others],
            "net": [float(v) for v in self.net],
            "includes_own": [float(v) for v in self.includes_own],
            "total_index": float(self.total_index),
            "raw_row_sums": [float(v) for v in self.raw_row_sums],
        }


def _aggregate(markets, dpct: np.ndarray, horizon: int, raw_rows: np.ndarray) -> SpilloverTable:
    diag = np.diag(dpct)
    from_others = dpct.sum(axis=1) - diag
    to_others = dpct.sum(axis=0) - diag
    n = len(markets)
    total = float(from_others.sum() / n)
    return SpilloverTable(
        markets=tuple(markets),
        matrix=dpct,
        from_others=from_others,
        to_others=to_others,
        net=to_others - from_others,
        includes_own=to_others + diag,
        total_index=total,
        horizon=horizon,
        raw_row_sums=raw_rows,
    )


def generalized_fevd(model: VarModel, horizon: int) -> SpilloverTable:
    """Generalized (ordering-invariant) forecast-error variance decomposition,
    row-normalised to percent."""
    sigma = model.sigma
    sdiag = np.diag(sigma)
    if np.any(sdiag <= 0):
        raise NumericalError("residual covariance has a non-positive diagonal entry")
    a = ma_coefficients(model, horizon)
    n = model.n_vars
    num = np.zeros((n, n))
    den = np.zeros(n)
    for h in range(horizon):
        asig = a[h] @ sigma
        num += asig**2 / sdiag[None, :]
        den += np.einsum("ij,ij->i", asig, a[h])
    if np.any(den <= 0):
        raise NumericalError("zero forecast-error variance in decomposition")
    theta = num / den[:, None]
    raw_rows = theta.sum(axis=1)
    dpct = 100.0 * theta / raw_rows[:, None]
    return _aggregate(model.markets, dpct, horizon, raw_rows)


def spillover_table(panel: VolatilityPanel, p: int, horizon: int) -> SpilloverTable:
    """fit_var -> ma_coefficients -> generalized_fevd, with aggregates."""
    return generalized_fevd(fit_var(panel, p), horizon)


def net_directional(table: SpilloverTable) -> np.ndarray:
    """Per-market net spillover: contribution to others minus from others."""
    return table.to_others - table.from_others
