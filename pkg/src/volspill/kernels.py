"""Conditional-variance recursion kernels.

Every filter below is a sequential recursion over time: sigma2[t] depends on
sigma2[t-1], so none of them vectorise.  They dominate the runtime of
likelihood maximisation (a single fit evaluates a filter thousands of times),
which is why they are compiled with numba when it is available.  Setting the
environment variable ``VOLSPILL_NUMBA=0`` selects the plain-Python fallbacks
instead; results are identical, only slower.  ``benchmarks/bench_kernels.py``
compares the two paths.

Conventions shared by all filters:

* ``eps`` is the residual series, one entry per likelihood observation.
* ``sigma0`` is the pre-sample variance anchor; lags that reach before the
  start of the sample are backcast with it (squared shocks with ``sigma0``,
  negative-shock indicators with their expectation 0.5).
* Filters return ``(sigma2, status)`` where ``status`` is -1 on success or
  the first offending time index when the log-variance recursion overflows.
  Kernels cannot raise formatted exceptions, so callers translate the index.

Simulation kernels mirror the filters: given standard-normal draws ``z`` they
run the same recursion forward and build returns through the mean equation
``r[t] = c + rho * r[t-1] (+ lam * sigma2[t]) + sigma[t] * z[t]``.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["NUMBA_ENABLED", "LOG_VAR_MAX"]

# exp() overflow guard for log-variance recursions
LOG_VAR_MAX = 690.0

_flag = os.environ.get("VOLSPILL_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _flag not in ("0", "false", "no", "off")
if NUMBA_ENABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def _jit(fn):
    """Compile ``fn`` with numba unless the fallback path is selected.

    nogil lets the event-study worker pool overlap fits across threads.
    """
    if NUMBA_ENABLED:
        return _njit(cache=True, nogil=True, fastmath=False)(fn)
    return fn


# ---------------------------------------------------------------------------
# filters: residuals -> conditional variance
# ---------------------------------------------------------------------------


def garch_filter_py(eps, sigma0, omega, alpha, beta):
    """sigma2[t] = omega + sum_i alpha_i eps[t-i]^2 + sum_j beta_j sigma2[t-j]."""
    n = eps.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    sig2 = np.empty(n)
    sig2[0] = sigma0
    for t in range(1, n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                v += alpha[i] * eps[k] * eps[k]
            else:
                v += alpha[i] * sigma0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * sig2[k]
            else:
                v += beta[j] * sigma0
        sig2[t] = v
    return sig2, -1


def tgarch_filter_py(eps, sigma0, omega, alpha, gamma, beta):
    """Threshold variant: the gamma_i term activates on eps[t-i] < 0."""
    n = eps.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    sig2 = np.empty(n)
    sig2[0] = sigma0
    for t in range(1, n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                coef = alpha[i]
                if eps[k] < 0.0:
                    coef += gamma[i]
                v += coef * eps[k] * eps[k]
            else:
                v += (alpha[i] + 0.5 * gamma[i]) * sigma0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * sig2[k]
            else:
                v += beta[j] * sigma0
        sig2[t] = v
    return sig2, -1


def egarch_filter_py(eps, log_sigma0, omega, alpha, gamma, beta):
    """log sigma2[t] = omega + sum_i (alpha_i z + gamma_i (|z| - sqrt(2/pi)))
    + sum_j beta_j log sigma2[t-j], with z = eps / sigma."""
    n = eps.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    c = math.sqrt(2.0 / math.pi)
    ls = np.empty(n)
    ls[0] = log_sigma0
    for t in range(1, n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                z = eps[k] / math.exp(0.5 * ls[k])
                v += alpha[i] * z + gamma[i] * (abs(z) - c)
            # pre-sample z terms have expectation zero / centering cancels
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * ls[k]
            else:
                v += beta[j] * log_sigma0
        if abs(v) > LOG_VAR_MAX or not np.isfinite(v):
            return ls, t
        ls[t] = v
    return np.exp(ls), -1


def apgarch_filter_py(eps, sigma0, omega, alpha, gamma, beta, power):
    """Power recursion sigma^phi[t] = omega + sum_i alpha_i (|eps| - gamma_i eps)^phi
    + sum_j beta_j sigma^phi[t-j].  gamma = 0 gives the plain power model."""
    n = eps.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    s0 = sigma0 ** (0.5 * power)
    s = np.empty(n)
    s[0] = s0
    for t in range(1, n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                a = abs(eps[k]) - gamma[i] * eps[k]
                v += alpha[i] * a ** power
            else:
                v += alpha[i] * s0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * s[k]
            else:
                v += beta[j] * s0
        s[t] = v
    return s ** (2.0 / power), -1


def cgarch_filter_py(eps, sigma0, alpha, beta, rho_c, sigma_bar):
    """Component recursion: trend q[t] decays to sigma_bar at rate rho_c and
    the transitory part follows a (1,1) recursion around it."""
    n = eps.shape[0]
    sig2 = np.empty(n)
    sig2[0] = sigma0
    q_prev = sigma0
    for t in range(1, n):
        q_t = sigma_bar + rho_c * (q_prev - sigma_bar)
        sig2[t] = q_t + alpha * (eps[t - 1] * eps[t - 1] - q_prev) + beta * (
            sig2[t - 1] - q_prev
        )
        q_prev = q_t
    return sig2, -1


def cmt_filter_py(eps, sigma0, omega, alpha, gamma, beta):
    """Two-lag threshold recursion: the one-lag recursion substituted into
    itself, with the threshold indicator on eps[t-2] < 0."""
    n = eps.shape[0]
    sig2 = np.empty(n)
    sig2[0] = sigma0
    for t in range(1, n):
        e1 = eps[t - 1] * eps[t - 1]
        if t >= 2:
            e2 = eps[t - 2] * eps[t - 2]
            ind = 1.0 if eps[t - 2] < 0.0 else 0.0
            s2 = sig2[t - 2]
        else:
            e2 = sigma0
            ind = 0.5
            s2 = sigma0
        sig2[t] = omega + alpha * e1 + beta * (
            omega + (alpha + gamma * ind) * e2 + beta * s2
        )
    return sig2, -1


def garchm_filter_py(returns, sigma0, c, rho, lam, omega, alpha, beta):
    """Joint mean/variance filter for the in-mean model.

    eps[t] depends on sigma2[t] through the lam * sigma2 term, so residuals
    and variances must be produced in one pass.  Returns (eps, sigma2, status).
    """
    m = returns.shape[0] - 1
    q = alpha.shape[0]
    p = beta.shape[0]
    eps = np.empty(m)
    sig2 = np.empty(m)
    sig2[0] = sigma0
    eps[0] = returns[1] - c - rho * returns[0] - lam * sigma0
    for t in range(1, m):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                v += alpha[i] * eps[k] * eps[k]
            else:
                v += alpha[i] * sigma0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * sig2[k]
            else:
                v += beta[j] * sigma0
        sig2[t] = v
        eps[t] = returns[t + 1] - c - rho * returns[t] - lam * v
    return eps, sig2, -1


# ---------------------------------------------------------------------------
# simulation: standard-normal draws -> returns
# ---------------------------------------------------------------------------


def simulate_garch_py(z, sigma0, r0, c, rho, lam, omega, alpha, beta):
    n = z.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    r_prev = r0
    for t in range(n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                v += alpha[i] * eps[k] * eps[k]
            else:
                v += alpha[i] * sigma0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * sig2[k]
            else:
                v += beta[j] * sigma0
        sig2[t] = v
        eps[t] = math.sqrt(v) * z[t]
        r[t] = c + rho * r_prev + lam * v + eps[t]
        r_prev = r[t]
    return r, eps, sig2


def simulate_tgarch_py(z, sigma0, r0, c, rho, omega, alpha, gamma, beta):
    n = z.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    r_prev = r0
    for t in range(n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                coef = alpha[i]
                if eps[k] < 0.0:
                    coef += gamma[i]
                v += coef * eps[k] * eps[k]
            else:
                v += (alpha[i] + 0.5 * gamma[i]) * sigma0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * sig2[k]
            else:
                v += beta[j] * sigma0
        sig2[t] = v
        eps[t] = math.sqrt(v) * z[t]
        r[t] = c + rho * r_prev + eps[t]
        r_prev = r[t]
    return r, eps, sig2


def simulate_egarch_py(z, log_sigma0, r0, c, rho, omega, alpha, gamma, beta):
    n = z.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    cst = math.sqrt(2.0 / math.pi)
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    ls = np.empty(n)
    r_prev = r0
    for t in range(n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                v += alpha[i] * z[k] + gamma[i] * (abs(z[k]) - cst)
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * ls[k]
            else:
                v += beta[j] * log_sigma0
        if v > LOG_VAR_MAX:
            v = LOG_VAR_MAX
        ls[t] = v
        sig2[t] = math.exp(v)
        eps[t] = math.sqrt(sig2[t]) * z[t]
        r[t] = c + rho * r_prev + eps[t]
        r_prev = r[t]
    return r, eps, sig2


def simulate_apgarch_py(z, sigma0, r0, c, rho, omega, alpha, gamma, beta, power):
    n = z.shape[0]
    q = alpha.shape[0]
    p = beta.shape[0]
    s0 = sigma0 ** (0.5 * power)
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    s = np.empty(n)
    r_prev = r0
    for t in range(n):
        v = omega
        for i in range(q):
            k = t - 1 - i
            if k >= 0:
                a = abs(eps[k]) - gamma[i] * eps[k]
                v += alpha[i] * a ** power
            else:
                v += alpha[i] * s0
        for j in range(p):
            k = t - 1 - j
            if k >= 0:
                v += beta[j] * s[k]
            else:
                v += beta[j] * s0
        s[t] = v
        sig2[t] = v ** (2.0 / power)
        eps[t] = math.sqrt(sig2[t]) * z[t]
        r[t] = c + rho * r_prev + eps[t]
        r_prev = r[t]
    return r, eps, sig2


def simulate_cgarch_py(z, sigma0, r0, c, rho, alpha, beta, rho_c, sigma_bar):
    n = z.shape[0]
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    q_prev = sigma0
    r_prev = r0
    for t in range(n):
        if t == 0:
            sig2[t] = sigma0
        else:
            q_t = sigma_bar + rho_c * (q_prev - sigma_bar)
            sig2[t] = q_t + alpha * (eps[t - 1] * eps[t - 1] - q_prev) + beta * (
                sig2[t - 1] - q_prev
            )
            q_prev = q_t
        eps[t] = math.sqrt(sig2[t]) * z[t]
        r[t] = c + rho * r_prev + eps[t]
        r_prev = r[t]
    return r, eps, sig2


def simulate_cmt_py(z, sigma0, r0, c, rho, omega, alpha, gamma, beta):
    n = z.shape[0]
    r = np.empty(n)
    eps = np.empty(n)
    sig2 = np.empty(n)
    r_prev = r0
    for t in range(n):
        if t >= 1:
            e1 = eps[t - 1] * eps[t - 1]
        else:
            e1 = sigma0
        if t >= 2:
            e2 = eps[t - 2] * eps[t - 2]
            ind = 1.0 if eps[t - 2] < 0.0 else 0.0
            s2 = sig2[t - 2]
        else:
            e2 = sigma0
            ind = 0.5
            s2 = sigma0
        sig2[t] = omega + alpha * e1 + beta * (
            omega + (alpha + gamma * ind) * e2 + beta * s2
        )
        eps[t] = math.sqrt(sig2[t]) * z[t]
        r[t] = c + rho * r_prev + eps[t]
        r_prev = r[t]
    return r, eps, sig2


# Compiled (or fallback) aliases used by the rest of the package.
garch_filter = _jit(garch_filter_py)
tgarch_filter = _jit(tgarch_filter_py)
egarch_filter = _jit(egarch_filter_py)
apgarch_filter = _jit(apgarch_filter_py)
cgarch_filter = _jit(cgarch_filter_py)
cmt_filter = _jit(cmt_filter_py)
garchm_filter = _jit(garchm_filter_py)

simulate_garch = _jit(simulate_garch_py)
simulate_tgarch = _jit(simulate_tgarch_py)
simulate_egarch = _jit(simulate_egarch_py)
simulate_apgarch = _jit(simulate_apgarch_py)
simulate_cgarch = _jit(simulate_cgarch_py)
simulate_cmt = _jit(simulate_cmt_py)


def warm_up():
    """Trigger compilation of every kernel on tiny inputs (no-op on fallback)."""
    eps = np.array([0.1, -0.2, 0.15, -0.05])
    z = np.array([0.3, -0.4, 0.2, 0.1])
    one = np.array([0.05])
    b = np.array([0.9])
    g = np.array([0.02])
    garch_filter(eps, 1.0, 0.1, one, b)
    tgarch_filter(eps, 1.0, 0.1, one, g, b)
    egarch_filter(eps, 0.0, -0.1, one, g, b)
    apgarch_filter(eps, 1.0, 0.1, one, g, b, 2.0)
    cgarch_filter(eps, 1.0, 0.05, 0.8, 0.95, 1.0)
    cmt_filter(eps, 1.0, 0.1, 0.05, 0.02, 0.8)
    garchm_filter(eps, 1.0, 0.0, 0.0, 0.1, 0.1, one, b)
    simulate_garch(z, 1.0, 0.0, 0.0, 0.0, 0.0, 0.1, one, b)
    simulate_tgarch(z, 1.0, 0.0, 0.0, 0.0, 0.1, one, g, b)
    simulate_egarch(z, 0.0, 0.0, 0.0, 0.0, -0.1, one, g, b)
    simulate_apgarch(z, 1.0, 0.0, 0.0, 0.0, 0.1, one, g, b, 2.0)
    simulate_cgarch(z, 1.0, 0.0, 0.0, 0.0, 0.05, 0.8, 0.95, 1.0)
    simulate_cmt(z, 1.0, 0.0, 0.0, 0.0, 0.1, 0.05, 0.02, 0.8)
