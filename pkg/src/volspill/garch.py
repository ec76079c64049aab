"""GARCH-family models: definition, simulation, quasi-maximum likelihood.

Nine conditional-variance recursions share one estimation pipeline:

* mean equation ``r_t = c + rho * r_{t-1} (+ lam * sigma2_t)`` defines the
  residuals; the first observation only provides the lag, so the likelihood
  runs over ``t = 2..n``;
* Gaussian quasi-likelihood, maximised by BFGS in transformed coordinates
  that keep every trial point admissible (exp for positive parameters,
  softmax-style maps for stationarity simplexes, tanh for bounded ones);
* standard errors from the inverse numerical Hessian of the negative
  log-likelihood in the original coordinates, p-values from the asymptotic
  normal.

The pre-sample variance anchor is the residual variance of an OLS pass of
the mean equation and stays fixed during optimisation.
"""

from __future__ import annotations

import datetime as dt
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy import stats as sps
from scipy.special import expit, logit

from . import kernels
from .data import ReturnSeries
from .exceptions import DataError, NumericalError, VolspillError

__all__ = [
    "Family",
    "MeanParams",
    "GarchSpec",
    "GarchParams",
    "GarchFit",
    "validate_params",
    "variance_recursion",
    "log_likelihood",
    "loglik_gradient",
    "free_param_names",
    "params_to_vector",
    "params_from_vector",
    "fit",
    "aic",
    "select_model",
    "persistence",
    "leverage",
    "asymmetry_degree",
    "simulate",
    "fit_table_csv",
]

_RHO_MAX = 0.999
_GRAD_STEP = 1e-6


class Family(enum.Enum):
    """Model menu; enum order is the selection tie-break order."""

    GARCH = "GARCH"
    EGARCH = "EGARCH"
    TGARCH = "TGARCH"
    IGARCH = "IGARCH"
    PGARCH = "PGARCH"
    APGARCH = "APGARCH"
    GARCHM = "GARCHM"
    CGARCH = "CGARCH"
    CMTGARCH = "CMTGARCH"


_FAMILY_ORDER = {fam: i for i, fam in enumerate(Family)}
_GAMMA_FAMILIES = {Family.EGARCH, Family.TGARCH, Family.APGARCH, Family.CMTGARCH}
_POWER_FAMILIES = {Family.PGARCH, Family.APGARCH}
_COMPONENT_FAMILIES = {Family.CGARCH}
_ONE_ONE_ONLY = {Family.CGARCH, Family.CMTGARCH}


@dataclass(frozen=True)
class MeanParams:
    """Mean-equation parameters: constant, AR(1) coefficient and, for the
    in-mean family only, the variance-in-mean loading."""

    c: float = 0.0
    rho: float = 0.0
    lam: float | None = None


@dataclass(frozen=True)
class GarchSpec:
    family: Family
    p: int = 1
    q: int = 1
    mean: MeanParams = field(default_factory=MeanParams)

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise DataError(f"orders must satisfy p >= 1 and q >= 1, got p={self.p}, q={self.q}")
        if self.family in _ONE_ONE_ONLY and (self.p, self.q) != (1, 1):
            raise DataError(f"{self.family.value} is only defined for p = q = 1")
        if self.family is Family.GARCHM:
            if self.mean.lam is None:
                object.__setattr__(self, "mean", replace(self.mean, lam=0.0))
        elif self.mean.lam is not None:
            raise DataError("lam is only meaningful for the GARCHM family")


@dataclass(frozen=True)
class GarchParams:
    """Variance-equation parameters; unused fields stay None/empty."""

    omega: float = 0.0
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    gamma: tuple[float, ...] | None = None
    phi: float | None = None
    rho_c: float | None = None
    sigma_bar: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.gamma is not None:
            object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "gamma": None if self.gamma is None else list(self.gamma),
            "phi": self.phi,
            "rho_c": self.rho_c,
            "sigma_bar": self.sigma_bar,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GarchParams":
        return cls(
            omega=d["omega"],
            alpha=tuple(d["alpha"]),
            beta=tuple(d["beta"]),
            gamma=None if d.get("gamma") is None else tuple(d["gamma"]),
            phi=d.get("phi"),
            rho_c=d.get("rho_c"),
            sigma_bar=d.get("sigma_bar"),
        )


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------


def _finite(*vals) -> bool:
    return all(v is not None and math.isfinite(v) for v in vals)


def validate_params(spec: GarchSpec, params: GarchParams) -> None:
    """Raise DataError unless ``params`` is admissible for ``spec``.

    Admissibility guarantees a strictly positive variance path for any
    finite residual series.
    """
    fam = spec.family
    a = np.asarray(params.alpha, dtype=float)
    b = np.asarray(params.beta, dtype=float)
    if len(a) != spec.q or len(b) != spec.p:
        raise DataError(
            f"{fam.value}: expected {spec.q} alpha and {spec.p} beta coefficients, "
            f"got {len(a)} and {len(b)}"
        )
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DataError(f"{fam.value}: non-finite coefficients")
    g = None
    if fam in _GAMMA_FAMILIES:
        if params.gamma is None or len(params.gamma) != spec.q:
            raise DataError(f"{fam.value}: needs {spec.q} gamma coefficient(s)")
        g = np.asarray(params.gamma, dtype=float)
        if not np.all(np.isfinite(g)):
            raise DataError(f"{fam.value}: non-finite gamma")
    elif params.gamma is not None:
        raise DataError(f"{fam.value}: gamma is not part of this family")
    if fam in _POWER_FAMILIES:
        if not _finite(params.phi) or params.phi <= 0:
            raise DataError(f"{fam.value}: power exponent must be positive, got {params.phi}")
    elif params.phi is not None:
        raise DataError(f"{fam.value}: phi is not part of this family")
    if fam in _COMPONENT_FAMILIES:
        if not _finite(params.rho_c, params.sigma_bar):
            raise DataError(f"{fam.value}: needs finite rho_c and sigma_bar")
    elif params.rho_c is not None or params.sigma_bar is not None:
        raise DataError(f"{fam.value}: rho_c/sigma_bar are not part of this family")

    if fam is Family.EGARCH:
        if not _finite(params.omega):
            raise DataError("EGARCH: non-finite omega")
        if np.sum(np.abs(b)) >= 1.0:
            raise DataError(f"EGARCH: sum |beta| = {np.sum(np.abs(b)):.6g} must be < 1")
        return

    if fam is Family.CGARCH:
        if params.sigma_bar <= 0:
            raise DataError(f"CGARCH: sigma_bar must be positive, got {params.sigma_bar}")
        if not (0.0 < params.rho_c < 1.0):
            raise DataError(f"CGARCH: rho_c must lie in (0, 1), got {params.rho_c}")
        if np.any(a < 0) or np.any(b < 0):
            raise DataError("CGARCH: alpha and beta must be non-negative")
        if a.sum() + b.sum() >= params.rho_c:
            raise DataError(
                "CGARCH: transitory persistence alpha + beta = "
                f"{a.sum() + b.sum():.6g} must stay below rho_c = {params.rho_c:.6g}"
            )
        return

    # remaining families share omega > 0 and non-negative alpha/beta
    if not _finite(params.omega) or params.omega <= 0:
        raise DataError(f"{fam.value}: omega must be positive, got {params.omega}")
    if np.any(a < 0):
        raise DataError(f"{fam.value}: alpha coefficients must be non-negative")
    if np.any(b < 0):
        raise DataError(f"{fam.value}: beta coefficients must be non-negative")

    if fam is Family.IGARCH:
        total = a.sum() + b.sum()
        if abs(total - 1.0) > 1e-8:
            raise DataError(f"IGARCH: alpha + beta must sum to 1, got {total:.10g}")
        return
    if fam in (Family.TGARCH, Family.CMTGARCH):
        if np.any(a + g < 0):
            raise DataError(f"{fam.value}: alpha_i + gamma_i must be non-negative")
        pers = a.sum() + b.sum() + 0.5 * g.sum()
        if pers >= 1.0:
            raise DataError(
                f"{fam.value}: persistence alpha + beta + 0.5 gamma = {pers:.6g} must be < 1"
            )
        return
    if fam is Family.APGARCH and np.any(np.abs(g) >= 1.0):
        raise DataError("APGARCH: |gamma_i| must be < 1")
    # GARCH, GARCHM, PGARCH, APGARCH stationarity
    total = a.sum() + b.sum()
    if total >= 1.0:
        raise DataError(f"{fam.value}: alpha + beta = {total:.6g} must be < 1 (stationarity)")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _params_of(obj) -> GarchParams:
    return obj.params if isinstance(obj, GarchFit) else obj


def persistence(fit_or_params) -> float:
    """Shock-persistence metric sum(alpha) + sum(beta) + 0.5 * sum(gamma)."""
    params = _params_of(fit_or_params)
    g = 0.0 if params.gamma is None else sum(params.gamma)
    return float(sum(params.alpha) + sum(params.beta) + 0.5 * g)


def leverage(fit_or_params) -> float | None:
    """First-lag asymmetry coefficient, absent for symmetric families."""
    params = _params_of(fit_or_params)
    if params.gamma is None:
        return None
    return float(params.gamma[0])


def asymmetry_degree(fit_or_params) -> float | None:
    """(alpha_1 + gamma_1) / alpha_1; absent without gamma or when alpha_1 = 0."""
    params = _params_of(fit_or_params)
    if params.gamma is None or not params.alpha or params.alpha[0] == 0.0:
        return None
    return float((params.alpha[0] + params.gamma[0]) / params.alpha[0])


# ---------------------------------------------------------------------------
# variance recursion and likelihood
# ---------------------------------------------------------------------------


def _as_values(returns) -> np.ndarray:
    if isinstance(returns, ReturnSeries):
        return returns.values
    return np.asarray(returns, dtype=float)


def _run_filter(spec: GarchSpec, params: GarchParams, eps: np.ndarray, presample: float):
    fam = spec.family
    a = np.asarray(params.alpha, dtype=float)
    b = np.asarray(params.beta, dtype=float)
    if fam in (Family.GARCH, Family.GARCHM, Family.IGARCH):
        sig2, status = kernels.garch_filter(eps, presample, params.omega, a, b)
    elif fam is Family.TGARCH:
        g = np.asarray(params.gamma, dtype=float)
        sig2, status = kernels.tgarch_filter(eps, presample, params.omega, a, g, b)
    elif fam is Family.EGARCH:
        g = np.asarray(params.gamma, dtype=float)
        sig2, status = kernels.egarch_filter(eps, math.log(presample), params.omega, a, g, b)
    elif fam in (Family.PGARCH, Family.APGARCH):
        g = (
            np.zeros_like(a)
            if fam is Family.PGARCH
            else np.asarray(params.gamma, dtype=float)
        )
        sig2, status = kernels.apgarch_filter(eps, presample, params.omega, a, g, b, params.phi)
    elif fam is Family.CGARCH:
        sig2, status = kernels.cgarch_filter(
            eps, presample, a[0], b[0], params.rho_c, params.sigma_bar
        )
    elif fam is Family.CMTGARCH:
        g = np.asarray(params.gamma, dtype=float)
        sig2, status = kernels.cmt_filter(eps, presample, params.omega, a[0], g[0], b[0])
    else:  # pragma: no cover
        raise NumericalError(f"no filter for family {fam}")
    if status >= 0:
        raise NumericalError(
            f"{fam.value}: log-variance recursion left the representable "
            f"range at index {status}"
        )
    return sig2


def variance_recursion(
    spec: GarchSpec,
    params: GarchParams,
    residuals,
    presample: float | None = None,
) -> np.ndarray:
    """Run the family's variance recursion over a residual series.

    ``presample`` anchors sigma2[0] and any lag reaching before the sample;
    it defaults to the mean squared residual.
    """
    validate_params(spec, params)
    eps = np.asarray(residuals, dtype=float)
    if eps.ndim != 1 or eps.size < 1:
        raise DataError("residuals must be a non-empty 1-d array")
    if not np.all(np.isfinite(eps)):
        raise DataError("residuals must be finite")
    if presample is None:
        presample = float(np.mean(eps**2))
    if not presample > 0:
        raise DataError(f"pre-sample variance must be positive, got {presample}")
    return _run_filter(spec, params, eps, presample)


def _ols_presample(r: np.ndarray) -> float:
    """Residual variance of the OLS pass r_t ~ [1, r_{t-1}]."""
    y = r[1:]
    x = np.column_stack([np.ones(y.size), r[:-1]])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    return float(np.mean(resid**2))


def _loglik_core(
    spec: GarchSpec, params: GarchParams, r: np.ndarray, presample: float
) -> tuple[float, np.ndarray, np.ndarray]:
    mean = spec.mean
    if spec.family is Family.GARCHM:
        eps, sig2, status = kernels.garchm_filter(
            r,
            presample,
            mean.c,
            mean.rho,
            mean.lam,
            params.omega,
            np.asarray(params.alpha, dtype=float),
            np.asarray(params.beta, dtype=float),
        )
        if status >= 0:  # pragma: no cover - garch recursion cannot overflow
            raise NumericalError(f"GARCHM recursion failed at index {status}")
    else:
        eps = r[1:] - mean.c - mean.rho * r[:-1]
        sig2 = _run_filter(spec, params, eps, presample)
    if not np.all(sig2 > 0):
        raise NumericalError("non-positive conditional variance in likelihood")
    # extreme trial points overflow to inf/nan; the finiteness check below
    # turns that into the documented error
    with np.errstate(over="ignore", invalid="ignore"):
        ll = -0.5 * float(np.sum(np.log(2.0 * math.pi * sig2) + eps**2 / sig2))
    if not math.isfinite(ll):
        raise NumericalError("non-finite log-likelihood")
    return ll, eps, sig2


def log_likelihood(spec: GarchSpec, params: GarchParams, returns) -> tuple[float, np.ndarray]:
    """Gaussian quasi log-likelihood and the conditional-variance path."""
    validate_params(spec, params)
    r = _as_values(returns)
    if r.size < 3:
        raise DataError(f"need at least 3 observations, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise DataError("returns must be finite")
    presample = _ols_presample(r)
    if not presample > 0:
        raise DataError("zero residual variance: likelihood undefined")
    ll, _, sig2 = _loglik_core(spec, params, r, presample)
    return ll, sig2


# ---------------------------------------------------------------------------
# free-parameter vector (reporting coordinates)
# ---------------------------------------------------------------------------


def _coef_names(base: str, k: int) -> list[str]:
    if k == 1:
        return [base]
    return [f"{base}{i + 1}" for i in range(k)]


def free_param_names(spec: GarchSpec) -> list[str]:
    """Names of the freely estimated parameters, in vector order."""
    names = ["c", "rho"]
    if spec.family is Family.GARCHM:
        names.append("lam")
    fam = spec.family
    q, p = spec.q, spec.p
    if fam in (Family.GARCH, Family.GARCHM):
        names += ["omega"] + _coef_names("alpha", q) + _coef_names("beta", p)
    elif fam is Family.IGARCH:
        names += ["omega"] + _coef_names("alpha", q) + _coef_names("beta", p)[:-1]
    elif fam in (Family.TGARCH, Family.EGARCH, Family.CMTGARCH):
        names += (
            ["omega"]
            + _coef_names("alpha", q)
            + _coef_names("gamma", q)
            + _coef_names("beta", p)
        )
    elif fam is Family.PGARCH:
        names += ["omega"] + _coef_names("alpha", q) + _coef_names("beta", p) + ["phi"]
    elif fam is Family.APGARCH:
        names += (
            ["omega"]
            + _coef_names("alpha", q)
            + _coef_names("gamma", q)
            + _coef_names("beta", p)
            + ["phi"]
        )
    elif fam is Family.CGARCH:
        names += ["sigma_bar", "rho_c", "alpha", "beta"]
    return names


def n_free_params(spec: GarchSpec) -> int:
    return len(free_param_names(spec))


def params_to_vector(spec: GarchSpec, params: GarchParams) -> np.ndarray:
    """Flatten mean and variance parameters into the free vector."""
    mean = spec.mean
    vec = [mean.c, mean.rho]
    if spec.family is Family.GARCHM:
        vec.append(mean.lam)
    fam = spec.family
    if fam in (Family.GARCH, Family.GARCHM):
        vec += [params.omega, *params.alpha, *params.beta]
    elif fam is Family.IGARCH:
        vec += [params.omega, *params.alpha, *params.beta[:-1]]
    elif fam in (Family.TGARCH, Family.EGARCH, Family.CMTGARCH):
        vec += [params.omega, *params.alpha, *params.gamma, *params.beta]
    elif fam is Family.PGARCH:
        vec += [params.omega, *params.alpha, *params.beta, params.phi]
    elif fam is Family.APGARCH:
        vec += [params.omega, *params.alpha, *params.gamma, *params.beta, params.phi]
    elif fam is Family.CGARCH:
        vec += [params.sigma_bar, params.rho_c, params.alpha[0], params.beta[0]]
    return np.asarray(vec, dtype=float)


def params_from_vector(spec: GarchSpec, vec) -> tuple[GarchSpec, GarchParams]:
    """Inverse of params_to_vector; rebuilds the derived IGARCH beta."""
    vec = np.asarray(vec, dtype=float)
    fam, q, p = spec.family, spec.q, spec.p
    i = 2
    mean = MeanParams(c=float(vec[0]), rho=float(vec[1]))
    if fam is Family.GARCHM:
        mean = replace(mean, lam=float(vec[2]))
        i = 3
    v = vec[i:]
    if fam in (Family.GARCH, Family.GARCHM):
        params = GarchParams(omega=v[0], alpha=v[1 : 1 + q], beta=v[1 + q : 1 + q + p])
    elif fam is Family.IGARCH:
        alpha = v[1 : 1 + q]
        beta_free = v[1 + q : 1 + q + p - 1]
        last = 1.0 - alpha.sum() - beta_free.sum()
        params = GarchParams(omega=v[0], alpha=alpha, beta=(*beta_free, last))
    elif fam in (Family.TGARCH, Family.EGARCH, Family.CMTGARCH):
        params = GarchParams(
            omega=v[0],
            alpha=v[1 : 1 + q],
            gamma=v[1 + q : 1 + 2 * q],
            beta=v[1 + 2 * q : 1 + 2 * q + p],
        )
    elif fam is Family.PGARCH:
        params = GarchParams(
            omega=v[0], alpha=v[1 : 1 + q], beta=v[1 + q : 1 + q + p], phi=float(v[-1])
        )
    elif fam is Family.APGARCH:
        params = GarchParams(
            omega=v[0],
            alpha=v[1 : 1 + q],
            gamma=v[1 + q : 1 + 2 * q],
            beta=v[1 + 2 * q : 1 + 2 * q + p],
            phi=float(v[-1]),
        )
    elif fam is Family.CGARCH:
        params = GarchParams(
            alpha=(float(v[2]),),
            beta=(float(v[3]),),
            sigma_bar=float(v[0]),
            rho_c=float(v[1]),
            omega=float(v[0]) * (1.0 - float(v[1])),
        )
    else:  # pragma: no cover
        raise NumericalError(f"unhandled family {fam}")
    return replace(spec, mean=mean), params


# ---------------------------------------------------------------------------
# optimisation coordinates
# ---------------------------------------------------------------------------


def _softmax_slack(u: np.ndarray) -> np.ndarray:
    """Map R^m onto positive weights with sum < 1 (one implicit slack)."""
    m = max(0.0, float(np.max(u)))
    e = np.exp(u - m)
    return e / (math.exp(-m) + e.sum())


def _softmax_slack_inv(w: np.ndarray) -> np.ndarray:
    s = w.sum()
    if s >= 1.0 or np.any(w <= 0):
        raise DataError("weights must be positive with sum < 1 to start optimisation")
    return np.log(w / (1.0 - s))


def _softmax_unit(u: np.ndarray) -> np.ndarray:
    """Map R^(m-1) onto m positive weights summing exactly to 1."""
    full = np.concatenate([u, [0.0]])
    full -= full.max()
    e = np.exp(full)
    return e / e.sum()


def _softmax_unit_inv(w: np.ndarray) -> np.ndarray:
    if np.any(w <= 0):
        raise DataError("unit-simplex weights must be positive")
    return np.log(w[:-1] / w[-1])


def _pack(spec: GarchSpec, params: GarchParams) -> np.ndarray:
    """Admissible parameters -> unconstrained optimisation coordinates."""
    mean = spec.mean
    u = [mean.c, np.arctanh(np.clip(mean.rho / _RHO_MAX, -1 + 1e-12, 1 - 1e-12))]
    if spec.family is Family.GARCHM:
        u.append(mean.lam)
    fam, q, p = spec.family, spec.q, spec.p
    a = np.asarray(params.alpha, dtype=float)
    b = np.asarray(params.beta, dtype=float)
    if fam in (Family.GARCH, Family.GARCHM):
        u += [math.log(params.omega), *_softmax_slack_inv(np.concatenate([a, b]))]
    elif fam is Family.IGARCH:
        u += [math.log(params.omega), *_softmax_unit_inv(np.concatenate([a, b]))]
    elif fam in (Family.TGARCH, Family.CMTGARCH):
        g = np.asarray(params.gamma, dtype=float)
        w = np.concatenate([a / 2.0, (a + g) / 2.0, b])
        u += [math.log(params.omega), *_softmax_slack_inv(w)]
    elif fam is Family.EGARCH:
        g = np.asarray(params.gamma, dtype=float)
        u += [params.omega, *a, *g, *np.arctanh(np.clip(b * p, -1 + 1e-12, 1 - 1e-12))]
    elif fam is Family.PGARCH:
        u += [
            math.log(params.omega),
            *_softmax_slack_inv(np.concatenate([a, b])),
            math.log(params.phi),
        ]
    elif fam is Family.APGARCH:
        g = np.asarray(params.gamma, dtype=float)
        u += [
            math.log(params.omega),
            *_softmax_slack_inv(np.concatenate([a, b])),
            *np.arctanh(np.clip(g, -1 + 1e-12, 1 - 1e-12)),
            math.log(params.phi),
        ]
    elif fam is Family.CGARCH:
        w = np.array([a[0], b[0]]) / params.rho_c
        u += [
            math.log(params.sigma_bar),
            float(logit(params.rho_c)),
            *_softmax_slack_inv(w),
        ]
    return np.asarray(u, dtype=float)


def _unpack(spec: GarchSpec, u: np.ndarray) -> tuple[GarchSpec, GarchParams]:
    """Unconstrained coordinates -> admissible parameters (total map)."""
    mean = MeanParams(c=float(u[0]), rho=_RHO_MAX * math.tanh(u[1]))
    i = 2
    if spec.family is Family.GARCHM:
        mean = replace(mean, lam=float(u[2]))
        i = 3
    v = u[i:]
    fam, q, p = spec.family, spec.q, spec.p
    if fam in (Family.GARCH, Family.GARCHM):
        w = _softmax_slack(v[1:])
        params = GarchParams(omega=math.exp(v[0]), alpha=w[:q], beta=w[q:])
    elif fam is Family.IGARCH:
        w = _softmax_unit(v[1:])
        params = GarchParams(omega=math.exp(v[0]), alpha=w[:q], beta=w[q:])
    elif fam in (Family.TGARCH, Family.CMTGARCH):
        w = _softmax_slack(v[1:])
        m, d, b = w[:q], w[q : 2 * q], w[2 * q :]
        params = GarchParams(
            omega=math.exp(v[0]), alpha=2.0 * m, gamma=2.0 * (d - m), beta=b
        )
    elif fam is Family.EGARCH:
        params = GarchParams(
            omega=float(v[0]),
            alpha=v[1 : 1 + q],
            gamma=v[1 + q : 1 + 2 * q],
            beta=np.tanh(v[1 + 2 * q : 1 + 2 * q + p]) / p,
        )
    elif fam is Family.PGARCH:
        w = _softmax_slack(v[1:-1])
        params = GarchParams(
            omega=math.exp(v[0]), alpha=w[:q], beta=w[q:], phi=math.exp(v[-1])
        )
    elif fam is Family.APGARCH:
        w = _softmax_slack(v[1 : 1 + q + p])
        params = GarchParams(
            omega=math.exp(v[0]),
            alpha=w[:q],
            beta=w[q:],
            gamma=np.tanh(v[1 + q + p : 1 + 2 * q + p]),
            phi=math.exp(v[-1]),
        )
    elif fam is Family.CGARCH:
        rho_c = float(expit(v[1]))
        w = _softmax_slack(v[2:4])
        sigma_bar = math.exp(v[0])
        params = GarchParams(
            alpha=(rho_c * w[0],),
            beta=(rho_c * w[1],),
            rho_c=rho_c,
            sigma_bar=sigma_bar,
            omega=sigma_bar * (1.0 - rho_c),
        )
    else:  # pragma: no cover
        raise NumericalError(f"unhandled family {fam}")
    return replace(spec, mean=mean), params


# ---------------------------------------------------------------------------
# finite differences (shared by the optimiser, the Hessian and gradient checks)
# ---------------------------------------------------------------------------


def _central_diff_grad(f, x: np.ndarray, step: float = _GRAD_STEP) -> np.ndarray:
    """Central-difference gradient with per-coordinate step scaled by |x|."""
    g = np.empty_like(x)
    for i in range(x.size):
        h = step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _hessian(f, x: np.ndarray, rel: float = 1e-4) -> np.ndarray:
    h = rel * np.maximum(np.abs(x), 1e-2)
    k = x.size
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            xpp = x.copy()
            xpm = x.copy()
            xmp = x.copy()
            xmm = x.copy()
            xpp[i] += h[i]
            xpp[j] += h[j]
            xpm[i] += h[i]
            xpm[j] -= h[j]
            xmp[i] -= h[i]
            xmp[j] += h[j]
            xmm[i] -= h[i]
            xmm[j] -= h[j]
            val = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def loglik_gradient(spec: GarchSpec, params: GarchParams, returns) -> np.ndarray:
    """Finite-difference gradient of the log-likelihood with respect to the
    free parameter vector (same differencing machinery the fitter uses)."""
    r = _as_values(returns)
    x0 = params_to_vector(spec, params)

    def f(vec):
        s2, p2 = params_from_vector(spec, vec)
        return log_likelihood(s2, p2, r)[0]

    return _central_diff_grad(f, x0)


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GarchFit:
    """Result of one quasi-maximum-likelihood fit."""

    spec: GarchSpec
    params: GarchParams
    cond_variance: np.ndarray
    residuals: np.ndarray
    std_residuals: np.ndarray
    log_likelihood: float
    aic: float
    persistence: float
    leverage: float | None
    asymmetry_degree: float | None
    std_errors: dict[str, float]
    p_values: dict[str, float]
    converged: bool
    n_obs: int
    n_params: int
    n_iter: int
    message: str
    market: str = ""

    def to_json_dict(self) -> dict:
        mean = self.spec.mean
        return {
            "market": self.market,
            "family": self.spec.family.value,
            "p": self.spec.p,
            "q": self.spec.q,
            "mean": {"c": mean.c, "rho": mean.rho, "lam": mean.lam},
            "params": self.params.as_dict(),
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "persistence": self.persistence,
            "leverage": self.leverage,
            "asymmetry_degree": self.asymmetry_degree,
            "std_errors": self.std_errors,
            "p_values": self.p_values,
            "converged": self.converged,
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "n_iter": self.n_iter,
            "message": self.message,
        }


def spec_params_from_json(d: dict) -> tuple[GarchSpec, GarchParams]:
    """Rebuild the (spec, params) pair from a serialised fit."""
    mean = MeanParams(c=d["mean"]["c"], rho=d["mean"]["rho"], lam=d["mean"]["lam"])
    spec = GarchSpec(Family(d["family"]), p=d["p"], q=d["q"], mean=mean)
    return spec, GarchParams.from_dict(d["params"])


def _initial_guess(spec: GarchSpec, r: np.ndarray, v: float) -> tuple[GarchSpec, GarchParams]:
    """Variance-targeting start values around a stable GARCH basin."""
    c0 = float(np.mean(r))
    x = r[:-1] - np.mean(r[:-1])
    y = r[1:] - np.mean(r[1:])
    denom = float(np.sum(x * x))
    rho0 = float(np.clip(np.sum(x * y) / denom, -0.9, 0.9)) if denom > 0 else 0.0
    mean = MeanParams(c=c0, rho=rho0, lam=0.0 if spec.family is Family.GARCHM else None)
    fam, q, p = spec.family, spec.q, spec.p
    a = np.full(q, 0.05 / q)
    b = np.full(p, 0.85 / p)
    if fam in (Family.GARCH, Family.GARCHM):
        params = GarchParams(omega=0.10 * v, alpha=a, beta=b)
    elif fam is Family.IGARCH:
        a = np.full(q, 0.05 / q)
        b = np.full(p, 0.95 / p)
        params = GarchParams(omega=0.01 * v, alpha=a, beta=b)
    elif fam in (Family.TGARCH, Family.CMTGARCH):
        params = GarchParams(omega=0.10 * v, alpha=a, gamma=np.zeros(q), beta=b)
    elif fam is Family.EGARCH:
        params = GarchParams(
            omega=0.15 * math.log(v), alpha=np.full(q, 0.05 / q),
            gamma=np.full(q, 0.1 / q), beta=np.full(p, 0.85 / p),
        )
    elif fam is Family.PGARCH:
        params = GarchParams(omega=0.10 * v, alpha=a, beta=b, phi=2.0)
    elif fam is Family.APGARCH:
        params = GarchParams(omega=0.10 * v, alpha=a, gamma=np.zeros(q), beta=b, phi=2.0)
    elif fam is Family.CGARCH:
        params = GarchParams(
            alpha=(0.05,), beta=(0.80,), rho_c=0.95, sigma_bar=v, omega=v * 0.05
        )
    else:  # pragma: no cover
        raise NumericalError(f"unhandled family {fam}")
    return replace(spec, mean=mean), params


def fit(spec: GarchSpec, returns, market: str | None = None) -> GarchFit:
    """Maximise the Gaussian quasi-likelihood for one series and family.

    A stalled line search is reported through ``converged=False`` rather
    than an exception; genuinely bad input (too short, constant, non-finite)
    raises.
    """
    r = _as_values(returns)
    name = market if market is not None else getattr(returns, "market", "")
    if not np.all(np.isfinite(r)):
        raise DataError("returns must be finite")
    k = n_free_params(spec)
    if r.size < 10 * k:
        raise DataError(
            f"{spec.family.value}: need at least {10 * k} observations "
            f"for {k} parameters, got {r.size}"
        )
    v = _ols_presample(r)
    if not v > 1e-300:
        raise NumericalError("constant return series: variance has no interior optimum")

    spec0, params0 = _initial_guess(spec, r, v)
    u0 = _pack(spec0, params0)

    def objective(u: np.ndarray) -> float:
        try:
            s2, p2 = _unpack(spec, u)
            validate_params(s2, p2)
            ll, _, _ = _loglik_core(s2, p2, r, v)
        except VolspillError:
            return 1e300
        except (OverflowError, FloatingPointError):  # pragma: no cover
            return 1e300
        return -ll

    f_hist: list[float] = []

    def callback(u):
        f_hist.append(objective(u))

    with np.errstate(all="ignore"):
        res = optimize.minimize(
            objective,
            u0,
            method="BFGS",
            jac=lambda u: _central_diff_grad(objective, u),
            callback=callback,
            options={"gtol": 1e-6, "maxiter": 500, "norm": np.inf},
        )

    spec_hat, params_hat = _unpack(spec, res.x)
    validate_params(spec_hat, params_hat)
    ll, eps, sig2 = _loglik_core(spec_hat, params_hat, r, v)

    converged = bool(res.success)
    if not converged and res.jac is not None and np.all(np.isfinite(res.jac)):
        converged = float(np.max(np.abs(res.jac))) < 1e-6
    if not converged and len(f_hist) >= 2 and math.isfinite(f_hist[-1]):
        rel = abs(f_hist[-1] - f_hist[-2]) / (abs(f_hist[-2]) + 1e-12)
        converged = rel < 1e-8

    names = free_param_names(spec)
    theta = params_to_vector(spec_hat, params_hat)

    def neg_ll_theta(vec: np.ndarray) -> float:
        try:
            s2, p2 = params_from_vector(spec, vec)
            validate_params(s2, p2)
            return -_loglik_core(s2, p2, r, v)[0]
        except VolspillError:
            return 1e300

    se = {n: float("nan") for n in names}
    cov = None
    try:
        with np.errstate(all="ignore"):
            hess = _hessian(neg_ll_theta, theta)
            cov = np.linalg.inv(hess)
        diag = np.diag(cov)
        for i, n in enumerate(names):
            if np.isfinite(diag[i]) and diag[i] > 0:
                se[n] = float(math.sqrt(diag[i]))
    except np.linalg.LinAlgError:
        cov = None

    if spec.family is Family.IGARCH and cov is not None:
        # derived last beta = 1 - sum(free simplex coefficients)
        grad = np.zeros(len(names))
        for i, n in enumerate(names):
            if n.startswith("alpha") or n.startswith("beta"):
                grad[i] = -1.0
        var = float(grad @ cov @ grad)
        last_name = _coef_names("beta", spec.p)[-1]
        se[last_name] = math.sqrt(var) if var > 0 else float("nan")

    estimates = dict(zip(names, theta))
    if spec.family is Family.IGARCH:
        estimates[_coef_names("beta", spec.p)[-1]] = params_hat.beta[-1]
    p_values = {}
    for n, est in estimates.items():
        s = se.get(n, float("nan"))
        if math.isfinite(s) and s > 0:
            p_values[n] = float(2.0 * sps.norm.sf(abs(est) / s))
        else:
            p_values[n] = float("nan")

    return GarchFit(
        spec=spec_hat,
        params=params_hat,
        cond_variance=sig2,
        residuals=eps,
        std_residuals=eps / np.sqrt(sig2),
        log_likelihood=ll,
        aic=2.0 * k - 2.0 * ll,
        persistence=persistence(params_hat),
        leverage=leverage(params_hat),
        asymmetry_degree=asymmetry_degree(params_hat),
        std_errors=se,
        p_values=p_values,
        converged=converged,
        n_obs=int(r.size),
        n_params=k,
        n_iter=int(res.nit),
        message=str(res.message),
        market=name,
    )


def aic(fit_result: GarchFit) -> float:
    """Akaike information criterion 2k - 2 log L."""
    return 2.0 * fit_result.n_params - 2.0 * fit_result.log_likelihood


def select_model(candidates, returns, market: str | None = None) -> GarchFit:
    """Fit every candidate spec and return the converged fit with minimal AIC.

    Ties break on fewer parameters, then on family enumeration order.
    """
    candidates = list(candidates)
    if not candidates:
        raise DataError("candidate list is empty")
    fits: list[GarchFit] = []
    failures: list[str] = []
    for spec in candidates:
        try:
            f = fit(spec, returns, market=market)
        except VolspillError as exc:
            failures.append(f"{spec.family.value}: {exc}")
            continue
        if f.converged:
            fits.append(f)
        else:
            failures.append(f"{spec.family.value}: did not converge ({f.message})")
    if not fits:
        raise NumericalError(
            "all candidate fits failed:\n  " + "\n  ".join(failures)
        )
    return min(
        fits, key=lambda f: (f.aic, f.n_params, _FAMILY_ORDER[f.spec.family])
    )


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _unconditional_variance(spec: GarchSpec, params: GarchParams) -> float:
    """Long-run variance anchor used to start simulations."""
    fam = spec.family
    a, b = sum(params.alpha), sum(params.beta)
    if fam is Family.IGARCH:
        return params.omega / 0.01
    if fam in (Family.GARCH, Family.GARCHM):
        denom = 1.0 - a - b
    elif fam is Family.TGARCH:
        denom = 1.0 - a - b - 0.5 * sum(params.gamma)
    elif fam is Family.EGARCH:
        denom = 1.0 - b
        if denom <= 0:
            raise NumericalError("EGARCH: |beta| >= 1, no stationary anchor")
        return math.exp(params.omega / denom)
    elif fam in (Family.PGARCH, Family.APGARCH):
        denom = 1.0 - a - b
        if denom <= 0:
            raise NumericalError(
                f"{fam.value}: persistence >= 1, no finite unconditional variance"
            )
        return (params.omega / denom) ** (2.0 / params.phi)
    elif fam is Family.CGARCH:
        return params.sigma_bar
    elif fam is Family.CMTGARCH:
        g = params.gamma[0]
        al, be = params.alpha[0], params.beta[0]
        denom = 1.0 - al - be * (al + 0.5 * g) - be * be
        if denom <= 0:
            raise NumericalError(
                "CMTGARCH: persistence >= 1, no finite unconditional variance"
            )
        return params.omega * (1.0 + be) / denom
    else:  # pragma: no cover
        raise NumericalError(f"unhandled family {fam}")
    if denom <= 0:
        raise NumericalError(
            f"{fam.value}: persistence >= 1, no finite unconditional variance"
        )
    return params.omega / denom


def simulate(
    spec: GarchSpec,
    params: GarchParams,
    n: int,
    seed: int,
    market: str = "SIM",
) -> ReturnSeries:
    """Draw a reproducible return path from the model.

    The recursion starts at the family's unconditional variance (IGARCH,
    which has none, starts at omega / 0.01) and the mean at its stationary
    level.
    """
    validate_params(spec, params)
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    mean = spec.mean
    if abs(mean.rho) >= 1.0:
        raise DataError(f"|rho| must be < 1 to simulate, got {mean.rho}")
    sigma0 = _unconditional_variance(spec, params)
    lam = mean.lam if mean.lam is not None else 0.0
    r0 = (mean.c + lam * sigma0) / (1.0 - mean.rho)
    z = np.random.default_rng(seed).standard_normal(n)
    a = np.asarray(params.alpha, dtype=float)
    b = np.asarray(params.beta, dtype=float)
    fam = spec.family
    if fam in (Family.GARCH, Family.GARCHM, Family.IGARCH):
        r, _, _ = kernels.simulate_garch(z, sigma0, r0, mean.c, mean.rho, lam, params.omega, a, b)
    elif fam is Family.TGARCH:
        g = np.asarray(params.gamma, dtype=float)
        r, _, _ = kernels.simulate_tgarch(z, sigma0, r0, mean.c, mean.rho, params.omega, a, g, b)
    elif fam is Family.EGARCH:
        g = np.asarray(params.gamma, dtype=float)
        r, _, _ = kernels.simulate_egarch(
            z, math.log(sigma0), r0, mean.c, mean.rho, params.omega, a, g, b
        )
    elif fam in (Family.PGARCH, Family.APGARCH):
        g = np.zeros_like(a) if fam is Family.PGARCH else np.asarray(params.gamma, dtype=float)
        r, _, _ = kernels.simulate_apgarch(
            z, sigma0, r0, mean.c, mean.rho, params.omega, a, g, b, params.phi
        )
    elif fam is Family.CGARCH:
        r, _, _ = kernels.simulate_cgarch(
            z, sigma0, r0, mean.c, mean.rho, a[0], b[0], params.rho_c, params.sigma_bar
        )
    elif fam is Family.CMTGARCH:
        g = np.asarray(params.gamma, dtype=float)
        r, _, _ = kernels.simulate_cmt(
            z, sigma0, r0, mean.c, mean.rho, params.omega, a[0], g[0], b[0]
        )
    else:  # pragma: no cover
        raise NumericalError(f"unhandled family {fam}")
    start = dt.date(2000, 1, 1)
    dates = tuple(start + dt.timedelta(days=i) for i in range(n))
    return ReturnSeries(market, dates, r)


# ---------------------------------------------------------------------------
# tabular output
# ---------------------------------------------------------------------------

_TABLE_FIELDS = ("c", "rho", "omega", "alpha", "beta", "gamma")
_TABLE_LABELS = {
    "c": "C",
    "rho": "lagged_returns",
    "omega": "omega",
    "alpha": "alpha",
    "beta": "beta",
    "gamma": "gamma",
}


def fit_table_csv(fits: dict[str, GarchFit]) -> str:
    """One CSV row per market in the volatility-parameter table layout:
    coefficient columns with companion p-value columns, then persistence
    and leverage."""
    header = ["market", "family"]
    for f_ in _TABLE_FIELDS:
        header += [_TABLE_LABELS[f_], f"{_TABLE_LABELS[f_]}_pvalue"]
    header += ["persistence", "leverage", "aic", "log_likelihood", "converged"]
    lines = [",".join(header)]
    for mkt, f in fits.items():
        est = {
            "c": f.spec.mean.c,
            "rho": f.spec.mean.rho,
            "omega": f.params.omega,
            "alpha": f.params.alpha[0] if f.params.alpha else None,
            "beta": f.params.beta[0] if f.params.beta else None,
            "gamma": f.params.gamma[0] if f.params.gamma else None,
        }
        pv = {
            "c": f.p_values.get("c"),
            "rho": f.p_values.get("rho"),
            "omega": f.p_values.get("omega"),
            "alpha": f.p_values.get("alpha"),
            "beta": f.p_values.get("beta"),
            "gamma": f.p_values.get("gamma"),
        }
        cells = [mkt, f.spec.family.value]
        for f_ in _TABLE_FIELDS:
            cells.append("" if est[f_] is None else repr(float(est[f_])))
            p = pv[f_]
            cells.append("" if p is None or not math.isfinite(p) else repr(float(p)))
        cells += [
            repr(float(f.persistence)),
            "" if f.leverage is None else repr(float(f.leverage)),
            repr(float(f.aic)),
            repr(float(f.log_likelihood)),
            str(f.converged),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
