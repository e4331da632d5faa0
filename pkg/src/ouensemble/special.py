"""One-sided stable law and the M-Wright function.

Both are built on Zolotarev's function

    A(u) = sin(a u)^(a/(1-a)) * sin((1-a) u) / sin(u)^(1/(1-a)),  0 < u < pi,

through which the totally skewed stable variable with Laplace transform
``exp(-s**a)`` has the representation ``X = (A(U)/E)**((1-a)/a)`` (U uniform
on (0, pi), E standard exponential). The same kernel gives the integral
branch of the M-Wright function, since ``M_a(z) = x**(a+1) f_a(x) / a`` with
``x = z**(-1/a)``.
"""
import functools

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

_GL_ORDER = 24
_HALVINGS = 54


@functools.lru_cache(maxsize=None)
def _panel_nodes():
    # Gauss-Legendre panels on (0, pi) refined geometrically toward both ends.
    # Each node is stored as its distance d to the nearer end plus a side flag
    # so that sin(u) = sin(d) keeps full relative precision near u = pi.
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    cuts = 0.5 * np.pi * 2.0 ** -np.arange(_HALVINGS + 1)
    cuts = np.r_[cuts[::-1], 0.0][::-1]  # 0, tiny, ..., pi/4, pi/2
    cuts = np.sort(cuts)
    d_all, w_all = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        d_all.append(0.5 * (b - a) * x + 0.5 * (b + a))
        w_all.append(0.5 * (b - a) * w)
    d = np.concatenate(d_all)
    wt = np.concatenate(w_all)
    d = np.r_[d, d]
    wt = np.r_[wt, wt]
    right = np.r_[np.zeros(d.size // 2, bool), np.ones(d.size // 2, bool)]
    return d, wt, right


@functools.lru_cache(maxsize=64)
def zolotarev_nodes(alpha):
    """Quadrature nodes ``u``, weights and ``log A(u)`` on (0, pi)."""
    alpha = float(alpha)
    d, wt, right = _panel_nodes()
    u = np.where(right, np.pi - d, d)
    k = 1.0 / (1.0 - alpha)
    log_a = (alpha * k * np.log(np.sin(alpha * u))
             + np.log(np.sin((1.0 - alpha) * u))
             - k * np.log(np.sin(d)))
    return u, wt, log_a


def zolotarev_a(alpha, u):
    """Zolotarev's function A(u) for ``0 < alpha < 1``."""
    u = np.asarray(u, dtype=float)
    k = 1.0 / (1.0 - alpha)
    return (np.sin(alpha * u) ** (alpha * k) * np.sin((1.0 - alpha) * u)
            / np.sin(u) ** k)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def _kernel_integral(alpha, s, power):
    """``sum w * A**power * exp(-s*A)`` for an array ``s > 0``."""
    _, wt, log_a = zolotarev_nodes(alpha)
    s = np.asarray(s, dtype=float)
    a = np.exp(log_a)
    out = np.empty(s.shape)
    flat = s.ravel()
    res = out.ravel()
    # chunk to bound memory
    for i in range(0, flat.size, 512):
        sl = flat[i:i + 512, None]
        with np.errstate(over="ignore", under="ignore"):
            e = np.exp(power * log_a[None, :] - sl * a[None, :])
        res[i:i + 512] = e @ wt
    return out


def _alternating_series(logmag, sign):
    """Sum terms given log-magnitudes and signs along axis 0.

    Returns the sum and the largest term magnitude (for cancellation checks).
    """
    terms = sign * np.exp(logmag)
    return terms.sum(axis=0), np.exp(logmag.max(axis=0)), np.abs(terms[-1])


# ---------------------------------------------------------------- stable law

_SERIES_TERMS = 200


def _stable_tail_series(alpha, x, density):
    k = np.arange(1, _SERIES_TERMS + 1)[:, None]
    lx = np.log(x)[None, :]
    sn = np.sin(k * np.pi * alpha)
    with np.errstate(divide="ignore"):
        if density:
            logmag = gammaln(k * alpha + 1.0) - gammaln(k + 1.0) - (k * alpha + 1.0) * lx
        else:
            logmag = gammaln(k * alpha) - gammaln(k + 1.0) - k * alpha * lx
        logmag = logmag + np.log(np.abs(sn))
    sign = np.where(k % 2 == 1, 1.0, -1.0) * np.sign(sn)
    total, biggest, last = _alternating_series(logmag, sign)
    return total / np.pi, biggest / np.pi, last / np.pi


def _series_ok(x, alpha):
    return x ** (-alpha) <= 0.25


def stable_pdf(x, alpha):
    """Density of the one-sided stable law with Laplace transform exp(-s**alpha)."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    pos = x > 0
    xp = x[pos]
    res = np.empty(xp.shape)
    tail = _series_ok(xp, alpha)
    if tail.any():
        res[tail] = _stable_tail_series(alpha, xp[tail], True)[0]
    core = ~tail
    if core.any():
        k = alpha / (1.0 - alpha)
        xc = xp[core]
        s = xc ** (-k)
        res[core] = k / np.pi * xc ** (-k - 1.0) * _kernel_integral(alpha, s, 1.0)
    out[pos] = res
    return out


def stable_sf(x, alpha):
    """Survival function P(X > x) of the one-sided stable law."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape)
    pos = x > 0
    xp = x[pos]
    res = np.empty(xp.shape)
    tail = _series_ok(xp, alpha)
    if tail.any():
        res[tail] = _stable_tail_series(alpha, xp[tail], False)[0]
    core = ~tail
    if core.any():
        k = alpha / (1.0 - alpha)
        s = xp[core] ** (-k)
        _, wt, log_a = zolotarev_nodes(alpha)
        a = np.exp(log_a)
        vals = np.empty(s.shape)
        for i in range(0, s.size, 512):
            e = -np.expm1(-s[i:i + 512, None] * a[None, :])
            vals[i:i + 512] = e @ wt
        res[core] = vals / np.pi
    out[pos] = res
    return out


def stable_cdf(x, alpha):
    """``P(X <= x)``; summed directly in the core so the left tail keeps its digits."""
    _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    pos = x > 0
    xp = x[pos]
    tail = _series_ok(xp, alpha)
    res = np.empty(xp.shape)
    if tail.any():
        res[tail] = 1.0 - _stable_tail_series(alpha, xp[tail], False)[0]
    if (~tail).any():
        s = xp[~tail] ** (-alpha / (1.0 - alpha))
        res[~tail] = _kernel_integral(alpha, s, 0.0) / np.pi
    out[pos] = res
    return out


def stable_sample(alpha, u1, u2):
    """Exact one-sided stable variates from two arrays of uniforms.

    Kanter's transformation: ``X = (A(pi*u1) / E)**((1-alpha)/alpha)`` with
    ``E = -log(u2)``.
    """
    _check_alpha(alpha)
    a = zolotarev_a(alpha, np.pi * np.asarray(u1))
    e = -np.log(u2)
    return (a / e) ** ((1.0 - alpha) / alpha)


# ---------------------------------------------------------------- M-Wright

_MW_MAX_TERM = 1.0e3
_MW_MAX_CANCEL = 1.0e4


def _mwright_series(nu, z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = np.arange(_SERIES_TERMS + 1)[:, None]
    sn = np.sin(np.pi * nu * (n + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        lz = np.where(n == 0, 0.0, n * np.log(z)[None, :])
        logmag = lz - gammaln(n + 1.0) + gammaln(nu * (n + 1.0)) + np.log(np.abs(sn))
    logmag = np.where(np.isnan(logmag), -np.inf, logmag)
    sign = np.where(n % 2 == 0, 1.0, -1.0) * np.sign(sn)
    total, biggest, last = _alternating_series(logmag, sign)
    return total / np.pi, biggest / np.pi, last / np.pi


def _mwright_integral(nu, z):
    z = np.atleast_1d(np.asarray(z, dtype=float))
    k = 1.0 / (1.0 - nu)
    return (z ** (nu * k) / (np.pi * (1.0 - nu))
            * _kernel_integral(nu, z ** k, 1.0))


def mwright(beta, z):
    """M-Wright (Mainardi) function ``M_beta(z)`` for ``0 < beta < 1, z >= 0``.

    Uses the power series where it is free of cancellation (at most 200 terms,
    no term above 1e3 and none more than 1e4 times the sum) and the Zolotarev
    integral representation elsewhere.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"M-Wright order must lie in (0, 1), got {beta}")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(np.isnan(z_arr)):
        raise DomainError("M-Wright argument must be non-negative")
    flat = np.atleast_1d(z_arr).ravel()
    out = np.empty(flat.shape)
    s_val, biggest, last = _mwright_series(beta, flat)
    ok = (biggest <= _MW_MAX_TERM) & (biggest <= _MW_MAX_CANCEL * np.abs(s_val)) & (last <= 1e-18 * np.maximum(np.abs(s_val), 1e-300))
    ok |= flat == 0.0
    out[ok] = s_val[ok]
    if (~ok).any():
        out[~ok] = _mwright_integral(beta, flat[~ok])
    out = np.maximum(out, 0.0)
    return out.reshape(z_arr.shape) if z_arr.ndim else float(out[0])


def mwright_asymptotic(beta, z):
    """Leading saddle-point approximation of ``M_beta(z)`` as ``z -> inf``."""
    z = np.asarray(z, dtype=float)
    k = 1.0 / (1.0 - beta)
    a = 1.0 / np.sqrt(2.0 * np.pi * (1.0 - beta)) * beta ** ((2.0 * beta - 1.0) * k / 2.0)
    b = (1.0 - beta) * beta ** (beta * k)
    return a * z ** ((beta - 0.5) * k) * np.exp(-b * z ** k)
