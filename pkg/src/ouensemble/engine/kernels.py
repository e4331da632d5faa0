"""Hot loops, each in a numba and a numpy flavour.

Both flavours consume the same counter-based normals, so for identical inputs
they agree to rounding (the transcendental functions may differ in the last
ulp between LLVM and numpy).

Kernels
-------
ou_sum
    Weighted sum ``sum_k w[r,k] X[r,k](t)`` of independent OU particles advanced
    with the exact Gaussian transition.
taueff_table
    Effective relaxation time of each realization on a common log-time mesh.
zstar
    Adaptive Euler-Maruyama (or exponential) integration of the
    non-autonomous scalar SDE driven by a tabulated relaxation time.
"""
import numpy as np

from .._accel import HAVE_NUMBA, njit
from ..rng import normal_at, normal_nb

if HAVE_NUMBA:
    from numba import prange
else:  # pragma: no cover
    prange = range

RULE_RMS = 0
RULE_COVARIANCE = 1
SCHEME_EULER = 0
SCHEME_EXPONENTIAL = 1

# relative tolerance for landing exactly on a grid time
_SNAP = 1e-12


# ---------------------------------------------------------------- OU sums

@njit(parallel=True)
def _ou_sum_nb(tau, sigma, w, keys, t_grid, nsub):
    R, N = tau.shape
    T = t_grid.size
    out = np.zeros((R, T))
    for r in prange(R):
        for k in range(N):
            x = 0.0
            step = 0
            for j in range(T - 1):
                h = (t_grid[j + 1] - t_grid[j]) / nsub[j]
                a = np.exp(-h / tau[r, k])
                s = np.sqrt(-sigma[r, k] * tau[r, k] * np.expm1(-2.0 * h / tau[r, k]))
                for _ in range(nsub[j]):
                    x = a * x + s * normal_nb(keys[r, k], step)
                    step += 1
                out[r, j + 1] += w[r, k] * x
    return out


def _ou_sum_np(tau, sigma, w, keys, t_grid, nsub):
    R, N = tau.shape
    T = t_grid.size
    out = np.zeros((R, T))
    x = np.zeros((R, N))
    step = 0
    for j in range(T - 1):
        h = (t_grid[j + 1] - t_grid[j]) / nsub[j]
        a = np.exp(-h / tau)
        s = np.sqrt(-sigma * tau * np.expm1(-2.0 * h / tau))
        for _ in range(nsub[j]):
            x = a * x + s * normal_at(keys, step)
            step += 1
        # sequential accumulation over particles, same order as the numba loop
        acc = np.zeros(R)
        for k in range(N):
            acc += w[:, k] * x[:, k]
        out[:, j + 1] = acc
    return out


def ou_sum(tau, sigma, w, keys, t_grid, nsub, backend):
    """Mass-weighted sums of exact OU paths, shape ``(R, T)``.

    Parameters
    ----------
    tau, sigma, w : ndarray, shape (R, N)
    keys : ndarray of uint64, shape (R, N)
        One noise stream per particle; substep ``i`` uses normal number ``i``.
    t_grid : ndarray, shape (T,)
    nsub : ndarray of int64, shape (T-1,)
        Exact substeps per grid interval.
    """
    args = (np.ascontiguousarray(tau, dtype=float), np.ascontiguousarray(sigma, dtype=float),
            np.ascontiguousarray(w, dtype=float), np.ascontiguousarray(keys, dtype=np.uint64),
            np.ascontiguousarray(t_grid, dtype=float), np.ascontiguousarray(nsub, dtype=np.int64))
    if backend == "numba":
        return _ou_sum_nb(*args)
    return _ou_sum_np(*args)


# ---------------------------------------------------------------- tau_eff

@njit(parallel=True)
def _taueff_table_nb(tau, mesh, rule):
    R, N = tau.shape
    L = mesh.size
    out = np.empty((R, L))
    for r in prange(R):
        for i in range(L):
            num = 0.0
            den = 0.0
            for k in range(N):
                tk = tau[r, k]
                v = -tk * np.expm1(-2.0 * mesh[i] / tk)
                num += v
                if rule == RULE_RMS:
                    den += v / (tk * tk)
                else:
                    den += v / tk
            out[r, i] = np.sqrt(num / den) if rule == RULE_RMS else num / den
    return out


def _taueff_table_np(tau, mesh, rule):
    R, N = tau.shape
    out = np.empty((R, mesh.size))
    for i, t in enumerate(mesh):
        v = -tau * np.expm1(-2.0 * t / tau)
        num = np.zeros(R)
        den = np.zeros(R)
        for k in range(N):
            num += v[:, k]
            den += v[:, k] / (tau[:, k] * tau[:, k]) if rule == RULE_RMS else v[:, k] / tau[:, k]
        out[:, i] = np.sqrt(num / den) if rule == RULE_RMS else num / den
    return out


def taueff_table(tau, mesh, rule, backend):
    """Per-realization ``tau_eff`` at each mesh time, shape ``(R, L)``."""
    args = (np.ascontiguousarray(tau, dtype=float), np.ascontiguousarray(mesh, dtype=float), int(rule))
    if backend == "numba":
        return _taueff_table_nb(*args)
    return _taueff_table_np(*args)


# ---------------------------------------------------------------- Z*

@njit(parallel=True)
def _zstar_nb(tab, log_mesh, amp, keys, t_grid, dt_max, frac, scheme, max_steps):
    R = tab.shape[0]
    L = log_mesh.size
    T = t_grid.size
    out = np.zeros((R, T))
    aborted = np.zeros(R, dtype=np.bool_)
    for r in prange(R):
        z = 0.0
        t = t_grid[0]
        n = 0
        k = 0
        for j in range(T - 1):
            t_next = t_grid[j + 1]
            while t < t_next:
                # tau_eff(t): linear in log t, clamped at the mesh ends
                lt = np.log(t) if t > 0.0 else -np.inf
                while k < L - 2 and log_mesh[k + 1] <= lt:
                    k += 1
                if lt <= log_mesh[0]:
                    te = tab[r, 0]
                elif lt >= log_mesh[L - 1]:
                    te = tab[r, L - 1]
                else:
                    f = (lt - log_mesh[k]) / (log_mesh[k + 1] - log_mesh[k])
                    te = tab[r, k] + f * (tab[r, k + 1] - tab[r, k])
                if not (te > 0.0 and np.isfinite(te)):
                    aborted[r] = True
                    break
                rem = t_next - t
                h = min(frac * te, dt_max[r])
                if rem - h <= _SNAP * t_next:
                    h = rem
                g = normal_nb(keys[r], n)
                if scheme == SCHEME_EULER:
                    z = z - z / te * h + amp[r] * np.sqrt(h) * g
                else:
                    a = np.exp(-h / te)
                    z = a * z + amp[r] * np.sqrt(-0.5 * te * np.expm1(-2.0 * h / te)) * g
                n += 1
                t = t_next if h == rem else t + h
                if n >= max_steps:
                    aborted[r] = True
                    break
            if aborted[r]:
                break
            out[r, j + 1] = z
        if aborted[r]:
            for j in range(T):
                out[r, j] = np.nan
    return out, aborted


def _zstar_np(tab, log_mesh, amp, keys, t_grid, dt_max, frac, scheme, max_steps):
    R = tab.shape[0]
    L = log_mesh.size
    T = t_grid.size
    out = np.zeros((R, T))
    aborted = np.zeros(R, dtype=bool)
    z = np.zeros(R)
    t = np.full(R, t_grid[0])
    n = np.zeros(R, dtype=np.int64)
    j = np.zeros(R, dtype=np.int64)  # index of the next grid time
    j[:] = 1
    rows = np.arange(R)
    active = rows[j < T]
    while active.size:
        ta = t[active]
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(ta)
            k = np.clip(np.searchsorted(log_mesh, lt, side="right") - 1, 0, L - 2)
            f = (lt - log_mesh[k]) / (log_mesh[k + 1] - log_mesh[k])
            te = tab[active, k] + f * (tab[active, k + 1] - tab[active, k])
        te = np.where(lt <= log_mesh[0], tab[active, 0], te)
        te = np.where(lt >= log_mesh[-1], tab[active, -1], te)
        bad = ~((te > 0.0) & np.isfinite(te))
        t_next = t_grid[j[active]]
        rem = t_next - ta
        h = np.minimum(frac * te, dt_max[active])
        land = rem - h <= _SNAP * t_next
        h = np.where(land, rem, h)
        g = normal_at(keys[active], n[active])
        za = z[active]
        with np.errstate(invalid="ignore", divide="ignore"):
            if scheme == SCHEME_EULER:
                zn = za - za / te * h + amp[active] * np.sqrt(h) * g
            else:
                a = np.exp(-h / te)
                zn = a * za + amp[active] * np.sqrt(-0.5 * te * np.expm1(-2.0 * h / te)) * g
        z[active] = zn
        n[active] += 1
        t[active] = np.where(land, t_next, ta + h)
        hit = active[land & ~bad]
        out[hit, j[hit]] = z[hit]
        j[hit] += 1
        stop = active[bad | (n[active] >= max_steps)]
        aborted[stop] = True
        j[stop] = T
        active = active[j[active] < T]
    out[aborted] = np.nan
    return out, aborted


def zstar(tab, log_mesh, amp, keys, t_grid, dt_max, frac, scheme, max_steps, backend):
    """Integrate ``dZ = -Z/tau_eff(t) dt + amp dW`` for every realization.

    Steps are ``min(frac * tau_eff(t), dt_max[r])``, shortened to land on each
    grid time. Step ``i`` of realization ``r`` uses normal number ``i`` of
    ``keys[r]``. Returns ``(values, aborted)``; aborted rows are NaN.
    """
    args = (np.ascontiguousarray(tab, dtype=float), np.ascontiguousarray(log_mesh, dtype=float),
            np.ascontiguousarray(amp, dtype=float), np.ascontiguousarray(keys, dtype=np.uint64),
            np.ascontiguousarray(t_grid, dtype=float), np.ascontiguousarray(dt_max, dtype=float),
            float(frac), int(scheme), int(max_steps))
    if backend == "numba":
        return _zstar_nb(*args)
    return _zstar_np(*args)
