"""Effective relaxation time of the centre-of-mass process."""
import numpy as np

from ..errors import DivergenceError, InputError

MODES = ("quadrature", "sample-series")


def _v(tau, t):
    return -tau * np.expm1(-2.0 * t / tau)


def tau_eff(t, mode="sample-series", q=None, tau=None, rule="rms"):
    """``tau_eff(t)`` from a population (``quadrature``) or drawn times (``sample-series``).

    With ``v(tau) = tau (1 - exp(-2t/tau))`` the conditional variance of
    ``Y``, the ``rms`` rule is ``sqrt(sum v / sum v/tau^2)`` and the
    ``covariance`` rule is ``sum v / sum v/tau``; in quadrature mode the sums
    become expectations over ``q``.

    Raises
    ------
    DivergenceError
        In quadrature mode, when ``E_q[v/tau^2]`` diverges (for instance any
        ``q`` with positive density at ``tau = 0``). The message carries the
        diagnostic and the exception the partial sum.
    """
    if not t > 0:
        raise InputError(f"t must be positive, got {t}")
    if rule not in ("rms", "covariance"):
        raise InputError(f"unknown tau_eff rule {rule!r}")
    power = 2.0 if rule == "rms" else 1.0
    if mode == "quadrature":
        if q is None:
            raise InputError("quadrature mode needs a population spec")
        num = q.expect(lambda x: _v(x, t))
        try:
            den = q.expect(lambda x: _v(x, t) / x**power)
        except DivergenceError as exc:
            raise DivergenceError(
                f"tau_eff quadrature diverges at t={t}: E_q[v/tau^{power:g}] is infinite, so the "
                f"theoretical tau_eff is 0 ({exc})", partial=exc.partial) from None
    elif mode == "sample-series":
        if tau is None:
            raise InputError("sample-series mode needs the drawn relaxation times")
        tau = np.asarray(tau, dtype=float)
        if tau.size == 0 or np.any(tau <= 0):
            raise InputError("relaxation times must be positive")
        v = _v(tau, t)
        num, den = v.sum(), (v / tau**power).sum()
    else:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    ratio = num / den
    return float(np.sqrt(ratio) if rule == "rms" else ratio)
