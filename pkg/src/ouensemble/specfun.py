"""Analytical reference quantities.

Everything here is a deterministic function of population specs and scalar
parameters: the M-Wright function, the one-point density of generalised grey
Brownian motion, the variance of the scaled OU process ``Y`` averaged over the
relaxation-time population, the covariance of the centre-of-mass process, and
Gaussian scale mixtures.
"""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .populations import Delta, MWright
from .special import mwright

__all__ = [
    "KernelParams", "mwright", "variance_Y", "variance_Y_curve", "ggbm_density", "mixture_density",
    "covariance_Z", "kernel_table", "write_kernel_csv",
]


@dataclass(frozen=True)
class KernelParams:
    """Parameters of the self-similar kernel ``(1/2t^H) M_{beta/2}(|z|/t^H)``.

    ``beta = 1`` is accepted and gives the Gaussian kernel of variance
    ``2 t^{2H}``.
    """

    H: float
    beta: float
    t: float

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise DomainError(f"H must lie in (0, 1), got {self.H}")
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.t > 0.0:
            raise DomainError(f"t must be positive, got {self.t}")


def _ou_variance(tau, t):
    # tau * (1 - exp(-2t/tau)) without cancellation at small t/tau
    return -tau * np.expm1(-2.0 * t / tau)


def variance_Y(t, q, epsrel=1e-10):
    """``E_q[tau (1 - exp(-2t/tau))]``, the variance of ``Y`` averaged over ``q``.

    The integrand is bounded by ``min(tau, 2t)`` so the integral is finite for
    every population.
    """
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    return float(q.expect(lambda x: _ou_variance(x, t), epsrel=epsrel))


def variance_Y_curve(ts, q, epsrel=1e-10):
    """:func:`variance_Y` on an array of times; ``t = 0`` maps to 0."""
    ts = np.asarray(ts, dtype=float)
    return np.array([variance_Y(t, q, epsrel) if t > 0 else 0.0 for t in ts.ravel()]).reshape(ts.shape)


def ggbm_density(z, params):
    """One-point density ``(1/(2 t^H)) M_{beta/2}(|z| / t^H)``.

    Parameters
    ----------
    z : float or array_like
    params : KernelParams
    """
    z = np.asarray(z, dtype=float)
    th = params.t ** params.H
    out = np.asarray(mwright(params.beta / 2.0, np.abs(z) / th)) / (2.0 * th)
    return out if out.ndim else float(out)


def mixture_density(z, vt, f, epsrel=1e-10):
    """Gaussian scale mixture ``int (4 pi l vt)^(-1/2) exp(-z^2/(4 l vt)) f(l) dl``.

    Raises :class:`~ouensemble.errors.DivergenceError` when the quadrature over
    ``l`` does not converge.
    """
    if not vt > 0:
        raise InputError(f"vt must be positive, got {vt}")
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.empty(flat.shape)
    for i, zi in enumerate(flat):
        def kern(lam, zi=zi):
            with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
                g = np.exp(-zi * zi / (4.0 * lam * vt)) / np.sqrt(4.0 * np.pi * lam * vt)
            return np.where(lam > 0, g, 0.0)
        out[i] = f.expect(kern, epsrel=epsrel)
    out = out.reshape(z.shape)
    return out if out.ndim else float(out)


def covariance_Z(t, s, q, N, meanLambda, epsrel=1e-10):
    """``N * meanLambda * int tau (exp(-|t-s|/tau) - exp(-(t+s)/tau)) q(tau) dtau``."""
    if not (t > 0 and s > 0):
        raise InputError("t and s must be positive")
    d = abs(t - s)
    lo = min(t, s)

    def h(tau):
        return -tau * np.exp(-d / tau) * np.expm1(-2.0 * lo / tau)

    return float(N * meanLambda * q.expect(h, epsrel=epsrel))


def kernel_table(beta, H, t, z):
    """Rows ``(z, t, density, kernel_id, beta, H)`` for the closed-form kernel
    and the matching M-Wright mixture (``Delta(1)`` when ``beta = 1``)."""
    params = KernelParams(H=H, beta=beta, t=t)
    z = np.asarray(z, dtype=float)
    closed = np.atleast_1d(ggbm_density(z, params))
    f = Delta(location=1.0) if beta == 1.0 else MWright(beta=beta)
    mixed = np.atleast_1d(mixture_density(z, t ** (2.0 * H), f))
    rows = [(zi, t, di, "ggbm", beta, H) for zi, di in zip(z, closed)]
    rows += [(zi, t, di, "mixture", beta, H) for zi, di in zip(z, mixed)]
    return rows


def write_kernel_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "t", "density", "kernel_id", "beta", "H"])
        for z, t, d, kid, beta, H in rows:
            w.writerow([f"{z:.17g}", f"{t:.17g}", f"{d:.17g}", kid, f"{beta:.17g}", f"{H:.17g}"])
