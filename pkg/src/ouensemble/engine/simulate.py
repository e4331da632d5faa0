"""Simulation drivers for Z, Z*, Z^H and single OU processes.

Random streams
--------------
Realization ``r`` of a process family owns the key
``derive_key(seed, family, r)``; its relaxation times, amplitudes and noise
come from the children ``"tau"``, ``"sigma"`` and ``"noise"`` of that key, and
particle ``k`` of the noise child gets its own grandchild key. The families
``Z``, ``Zstar`` and ``ZH`` never share a stream, so the three processes are
driven by independent randomness.
"""
import functools

import numpy as np

from .._accel import get_backend, worker_threads
from ..errors import InputError
from ..populations import derive_particle_params
from ..rng import Stream, child_key, derive_key, name_id, normal_at
from ..specfun import variance_Y_curve
from . import kernels
from .params import TrajectoryBatch

# realizations per block are chosen so that block * N stays near this
_BLOCK_ELEMENTS = 1 << 20
_MESH_PER_DECADE = 32


def step_ou_exact(x, tau, sigma, dt, gauss):
    """Exact OU transition ``exp(-dt/tau) x + sqrt(sigma tau (1 - exp(-2dt/tau))) gauss``."""
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    dt = np.asarray(dt, dtype=float)
    if np.any(tau <= 0) or np.any(sigma <= 0) or np.any(dt <= 0):
        raise InputError("tau, sigma and dt must be positive")
    out = np.exp(-dt / tau) * x + np.sqrt(-sigma * tau * np.expm1(-2.0 * dt / tau)) * gauss
    return out if np.ndim(out) else float(out)


def realization_keys(seed, family, r0, r1):
    base = derive_key(seed, family)
    return child_key(base, np.arange(r0, r1, dtype=np.uint64))


def _child(keys, name):
    return child_key(keys, name_id(name))


def _particle_keys(keys, N):
    return child_key(_child(keys, "noise")[:, None], np.arange(N, dtype=np.uint64)[None, :])


def _draw(params, keys):
    tau = params.q_spec.sample(Stream(_child(keys, "tau")), params.N)
    sigma = params.g_spec.sample(Stream(_child(keys, "sigma")), params.N)
    return derive_particle_params(tau, sigma, params.sigma0)


def _blocks(params, family):
    """Yield ``(r0, r1, keys, particle_params)`` over realization blocks."""
    R, N = params.R, params.N
    size = max(1, _BLOCK_ELEMENTS // N)
    fixed = None
    if params.lambda_mode == "fixed":
        fixed = _draw(params, realization_keys(params.seed, family, 0, 1))
    for r0 in range(0, R, size):
        r1 = min(R, r0 + size)
        keys = realization_keys(params.seed, family, r0, r1)
        if fixed is None:
            pp = _draw(params, keys)
        else:
            B = r1 - r0
            pp = derive_particle_params(np.broadcast_to(fixed.tau, (B, N)),
                                        np.broadcast_to(fixed.sigma, (B, N)), params.sigma0)
        yield r0, r1, keys, pp


def _meta(params, family, backend, **extra):
    return {"family": family, "seed": int(params.seed), "N": params.N, "R": params.R,
            "sigma0": params.sigma0, "lambda_mode": params.lambda_mode, "backend": backend, **extra}


def _substeps(t_grid, dt_max):
    if dt_max is None:
        return np.ones(t_grid.size - 1, dtype=np.int64)
    return np.maximum(1, np.ceil(np.diff(t_grid) / dt_max - 1e-12)).astype(np.int64)


def simulate_Z(params, backend=None, workers=None):
    """Centre-of-mass process ``Z_t = sum_k (m_k/M) X^k_t``.

    Each particle moves with the exact OU transition between grid times; an
    explicit ``dt_max`` splits each interval into equal exact substeps.
    """
    backend = get_backend(backend)
    T = params.t_grid.size
    out = np.empty((params.R, T))
    lam = np.empty(params.R)
    nsub = _substeps(params.t_grid, params.dt_max)
    with worker_threads(workers):
        for r0, r1, keys, pp in _blocks(params, "Z"):
            w = pp.m / pp.M[:, None]
            out[r0:r1] = kernels.ou_sum(pp.tau, pp.sigma, w, _particle_keys(keys, params.N),
                                        params.t_grid, nsub, backend)
            lam[r0:r1] = pp.Lambda
    return TrajectoryBatch("Z", out, params.t_grid, _meta(params, "Z", backend), lam)


def clt_rescaled_Z(params, backend=None, workers=None):
    """``Z_t / sqrt(N)``, the quantity whose law tends to that of ``sqrt(Lambda) B^H_t``."""
    z = simulate_Z(params, backend, workers)
    return z.scaled(1.0 / np.sqrt(params.N), rescaled="1/sqrt(N)")


def taueff_mesh(t_grid):
    """Common log-time mesh for the tau_eff tables: from ``1e-4 * t_grid[1]`` to the last time."""
    lo = np.log10(t_grid[1]) - 4.0
    hi = np.log10(t_grid[-1])
    n = max(2, int(np.ceil((hi - lo) * _MESH_PER_DECADE)) + 1)
    return np.logspace(lo, hi, n)


def simulate_Zstar(params, backend=None, workers=None):
    """Non-autonomous scalar SDE ``dZ* = -Z*/tau_eff(t) dt + sqrt(2 N sigma0)/M dW``.

    ``tau_eff`` is evaluated from each realization's drawn relaxation times
    (sample-series mode) on a log mesh and interpolated linearly in ``log t``.
    """
    backend = get_backend(backend)
    T = params.t_grid.size
    span = params.t_grid[-1] - params.t_grid[0]
    mesh = taueff_mesh(params.t_grid)
    rule = kernels.RULE_RMS if params.tau_eff_rule == "rms" else kernels.RULE_COVARIANCE
    scheme = kernels.SCHEME_EULER if params.zstar_scheme == "euler" else kernels.SCHEME_EXPONENTIAL
    out = np.empty((params.R, T))
    lam = np.empty(params.R)
    aborted = np.zeros(params.R, dtype=bool)
    with worker_threads(workers):
        for r0, r1, keys, pp in _blocks(params, "Zstar"):
            tab = kernels.taueff_table(pp.tau, mesh, rule, backend)
            amp = np.sqrt(2.0 * params.N * params.sigma0) / pp.M
            if params.dt_max is None:
                dt_max = np.maximum(1e-2 * pp.tau.min(axis=1), 1e-4 * span)
            else:
                dt_max = np.full(r1 - r0, float(params.dt_max))
            vals, ab = kernels.zstar(tab, np.log(mesh), amp, _child(keys, "noise"), params.t_grid,
                                     dt_max, params.zstar_step_fraction, scheme,
                                     params.zstar_max_steps, backend)
            out[r0:r1] = vals
            aborted[r0:r1] = ab
            lam[r0:r1] = pp.Lambda
    meta = _meta(params, "Zstar", backend, tau_eff_mode="sample-series",
                 tau_eff_rule=params.tau_eff_rule, scheme=params.zstar_scheme,
                 step_fraction=params.zstar_step_fraction)
    return TrajectoryBatch("Zstar", out, params.t_grid, meta, lam, aborted)


@functools.lru_cache(maxsize=32)
def _variance_curve(q, times):
    return variance_Y_curve(np.array(times), q)


def simulate_ZH(params, backend=None, workers=None):
    """Randomly scaled Gaussian process ``Z^H_t = sqrt(N Lambda) B^H_t``.

    ``gaussian`` mode uses ``B^H_t = sqrt(v(t)) W_1`` with ``v`` the
    population-averaged variance of ``Y`` (one normal per realization).
    ``sum_of_y`` mode uses ``(sqrt(sigma0)/M) sum_k Y^k_t`` with independent
    unit-amplitude OU particles.
    """
    backend = get_backend(backend)
    T = params.t_grid.size
    out = np.empty((params.R, T))
    lam = np.empty(params.R)
    factor = 1.0 if params.zh_sigma0 is None else np.sqrt(params.zh_sigma0 / params.sigma0)
    if params.zh_mode == "gaussian":
        sd = np.sqrt(_variance_curve(params.q_spec, tuple(params.t_grid)))
    nsub = _substeps(params.t_grid, params.dt_max)
    with worker_threads(workers):
        for r0, r1, keys, pp in _blocks(params, "ZH"):
            lam[r0:r1] = pp.Lambda
            if params.zh_mode == "gaussian":
                g = normal_at(_child(keys, "noise"), 0)
                out[r0:r1] = (factor * np.sqrt(params.N * pp.Lambda) * g)[:, None] * sd[None, :]
            else:
                w = np.broadcast_to((factor * np.sqrt(params.sigma0) / pp.M)[:, None], pp.tau.shape)
                out[r0:r1] = kernels.ou_sum(pp.tau, np.ones_like(pp.tau), w,
                                            _particle_keys(keys, params.N), params.t_grid, nsub, backend)
    meta = _meta(params, "ZH", backend, zh_mode=params.zh_mode, zh_sigma0=params.zh_sigma0)
    return TrajectoryBatch("ZH", out, params.t_grid, meta, lam)


def simulate_ou(tau, sigma, t_grid, R, seed=0, x0=0.0, dt_max=None, backend=None, workers=None):
    """``R`` independent paths of one OU process started at ``x0``."""
    backend = get_backend(backend)
    if not (tau > 0 and sigma > 0):
        raise InputError("tau and sigma must be positive")
    t_grid = np.asarray(t_grid, dtype=float)
    nsub = _substeps(t_grid, dt_max)
    out = np.empty((R, t_grid.size))
    with worker_threads(workers):
        for r0 in range(0, R, _BLOCK_ELEMENTS):
            r1 = min(R, r0 + _BLOCK_ELEMENTS)
            keys = _particle_keys(realization_keys(seed, "OU", r0, r1), 1)
            ones = np.ones((r1 - r0, 1))
            out[r0:r1] = kernels.ou_sum(tau * ones, sigma * ones, ones, keys, t_grid, nsub, backend)
    out += x0 * np.exp(-(t_grid - t_grid[0]) / tau)[None, :]
    meta = {"family": "OU", "seed": int(seed), "tau": tau, "sigma": sigma, "x0": x0, "backend": backend}
    return TrajectoryBatch("singleOU", out, t_grid, meta)
