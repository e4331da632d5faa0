"""Parameter populations for relaxation times, noise amplitudes and mixing variables.

A :class:`PopulationSpec` is an immutable description of a one-dimensional
distribution on the positive half-line, optionally truncated to
``[lower, upper]`` and renormalised. Specs know how to evaluate their density,
take expectations by quadrature, and sample from a :class:`~ouensemble.rng.Stream`.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc, gammaincc, gammaincinv

from . import special
from .errors import ConfigurationError, InputError
from .quadrature import integrate_log
from .rng import Stream

TABLE_NODES = 4096
_GL8 = np.polynomial.legendre.leggauss(8)
_GL16 = np.polynomial.legendre.leggauss(16)
_PANEL_TOL = 1e-14


@dataclass(frozen=True, kw_only=True)
class PopulationSpec:
    """Base class. Subclasses set ``kind`` and implement the raw density."""

    lower: float = 0.0
    upper: float = np.inf
    kind: ClassVar[str] = ""

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (lo >= 0.0 and hi > lo):
            raise ConfigurationError(
                f"{self.kind}: truncation must satisfy 0 <= lower < upper, got [{lo}, {hi}]")
        self._validate()

    def _validate(self):
        pass

    # -- subclass hooks ---------------------------------------------------
    def _raw_pdf(self, x):
        raise NotImplementedError

    def _raw_cdf(self, x):
        return None

    def _raw_ppf(self, u):
        return None

    def _raw_sample(self, stream, n):
        return None

    @property
    def scale(self):
        """Typical magnitude, used to centre quadratures."""
        return 1.0

    # -- derived ------------------------------------------------------------
    @property
    def truncated(self):
        return self.lower > 0.0 or np.isfinite(self.upper)

    @cached_property
    def mass(self):
        """Raw probability mass inside ``[lower, upper]``."""
        lo, hi = self.lower, self.upper
        if self._raw_cdf(np.array([1.0])) is not None:
            c = self._raw_cdf(np.array([lo, hi if np.isfinite(hi) else np.inf]))
            m = float(c[1] - c[0])
        else:
            m = integrate_log(self._raw_pdf, lo, hi, epsrel=1e-12, center=np.log(self.scale))
        if not (m > 0.0 and np.isfinite(m)):
            raise ConfigurationError(f"{self.kind}: no probability mass in [{lo}, {hi}]")
        return m

    def pdf(self, x):
        """Normalised (after truncation) density; zero outside the support."""
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper) & (x >= 0.0)
        out = np.zeros(x.shape)
        if inside.any():
            out[inside] = self._raw_pdf(x[inside]) / self.mass
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        raw = self._raw_cdf(np.atleast_1d(x))
        if raw is not None:
            lo = self._raw_cdf(np.array([self.lower]))[0]
            out = (raw.reshape(x.shape) - lo) / self.mass
        else:
            out = self._cdf_quad_many(x)
        return np.clip(out, 0.0, 1.0)

    def _cdf_quad_many(self, x):
        # one adaptive integral up to the smallest point, then a cumulative sum
        # of Gauss-Legendre panels (log axis) between consecutive points
        flat = x.ravel()
        out = np.where(flat <= self.lower, 0.0, 1.0)
        mid = (flat > self.lower) & (flat < self.upper)
        if mid.any():
            pts, inv = np.unique(flat[mid], return_inverse=True)
            cum = np.full(pts.size, self._cdf_quad(pts[0]))
            if pts.size > 1:
                cum[1:] += np.cumsum(self._log_panels(np.log(pts[:-1]), np.log(pts[1:])))
            out[mid] = cum[inv]
        return out.reshape(x.shape)

    def _log_panels(self, a, b):
        def gl(rule):
            y = 0.5 * (b - a)[:, None] * rule[0][None, :] + 0.5 * (b + a)[:, None]
            ex = np.exp(y)
            return 0.5 * (b - a) * ((self.pdf(ex.ravel()).reshape(ex.shape) * ex) @ rule[1])
        fine, coarse = gl(_GL16), gl(_GL8)
        for i in np.flatnonzero(np.abs(fine - coarse) > _PANEL_TOL):
            fine[i] = integrate_log(self.pdf, np.exp(a[i]), np.exp(b[i]), epsrel=1e-12, epsabs=_PANEL_TOL)
        return fine

    def _cdf_quad(self, x):
        if x <= self.lower:
            return 0.0
        if x >= self.upper:
            return 1.0
        return integrate_log(self.pdf, self.lower, x, epsrel=1e-12, center=np.log(self.scale))

    def expect(self, h, epsrel=1e-10):
        """``E[h(X)]`` by adaptive quadrature on a log axis.

        Raises :class:`~ouensemble.errors.DivergenceError` if the integral
        does not converge.
        """
        return integrate_log(lambda x: h(x) * self.pdf(x), self.lower, self.upper,
                             epsrel=epsrel, center=np.log(self.scale))

    def sample(self, stream, n):
        """``n`` draws per stream key; shape ``stream.shape + (n,)``."""
        n = int(n)
        if n < 1:
            raise InputError("sample size must be >= 1")
        if not self.truncated:
            out = self._raw_sample(stream, n)
            if out is not None:
                return out
        if self._raw_ppf(np.array([0.5])) is not None:
            c = self._raw_cdf(np.array([self.lower, self.upper]))
            u = stream.uniform(n)
            return self._raw_ppf(c[0] + u * (c[1] - c[0]))
        return self._table_ppf(stream.uniform(n))

    # -- numerical inverse CDF ---------------------------------------------
    def _effective_range(self):
        lo, hi = self.lower, self.upper
        if lo > 0.0 and np.isfinite(hi):
            return lo, hi
        # coarse scan of 30 decades either side of the scale, then trim tails
        c = np.log10(self.scale)
        edges = np.logspace(c - 30, c + 30, 60 * 8 + 1)
        edges = edges[(edges >= lo) & (edges <= hi)]
        edges = np.unique(np.r_[lo if lo > 0 else edges[0], edges, hi if np.isfinite(hi) else edges[-1]])
        masses = self._cell_masses(edges)
        cum = np.cumsum(masses) / masses.sum()
        i0 = max(np.searchsorted(cum, 1e-15) - 1, 0)
        i1 = min(np.searchsorted(cum, 1.0 - 1e-15) + 1, edges.size - 1)
        return (lo if lo > 0 else edges[i0]), (hi if np.isfinite(hi) else edges[i1])

    def _cell_masses(self, edges):
        ly = np.log(edges)
        a, b = ly[:-1, None], ly[1:, None]
        y = 0.5 * (b - a) * _GL8[0][None, :] + 0.5 * (b + a)
        x = np.exp(y)
        fx = self._raw_pdf(x.ravel()).reshape(x.shape) * x
        return (0.5 * (b - a)[:, 0]) * (fx @ _GL8[1])

    @cached_property
    def _table(self):
        lo, hi = self._effective_range()
        nodes = np.logspace(np.log10(lo), np.log10(hi), TABLE_NODES)
        nodes[0], nodes[-1] = lo, hi
        cum = np.r_[0.0, np.cumsum(self._cell_masses(nodes))]
        cum /= cum[-1]
        keep = np.r_[True, np.diff(cum) > 0]
        return PchipInterpolator(cum[keep], np.log(nodes[keep]))

    def _table_ppf(self, u):
        return np.exp(self._table(u))


# ---------------------------------------------------------------- kinds


@dataclass(frozen=True, kw_only=True)
class Delta(PopulationSpec):
    """Degenerate population concentrated at ``location``."""

    location: float
    kind: ClassVar[str] = "delta"

    def _validate(self):
        if not self.location > 0:
            raise ConfigurationError("delta: location must be positive")
        if not self.lower <= self.location <= self.upper:
            raise ConfigurationError("delta: location outside truncation window")

    @property
    def scale(self):
        return self.location

    @property
    def mass(self):
        return 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x == self.location, np.inf, 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= self.location, 1.0, 0.0)

    def expect(self, h, epsrel=None):
        return float(np.asarray(h(np.array([self.location])))[0])

    def sample(self, stream, n):
        if int(n) < 1:
            raise InputError("sample size must be >= 1")
        return np.full(stream.shape + (int(n),), float(self.location))


@dataclass(frozen=True, kw_only=True)
class Exponential(PopulationSpec):
    """``rate * exp(-rate * x)``."""

    rate: float = 1.0
    kind: ClassVar[str] = "exponential"

    def _validate(self):
        if not self.rate > 0:
            raise ConfigurationError("exponential: rate must be positive")

    @property
    def scale(self):
        return 1.0 / self.rate

    def _raw_pdf(self, x):
        return self.rate * np.exp(-self.rate * x)

    def _raw_cdf(self, x):
        return -np.expm1(-self.rate * np.asarray(x, dtype=float))

    def _raw_ppf(self, u):
        return -np.log1p(-u) / self.rate

    def _raw_sample(self, stream, n):
        return -np.log(stream.uniform(n)) / self.rate


@dataclass(frozen=True, kw_only=True)
class GeneralizedGamma(PopulationSpec):
    """``eta * x**(nu-1) * exp(-x**eta) / Gamma(nu/eta)``."""

    nu: float
    eta: float
    kind: ClassVar[str] = "generalized_gamma"

    def _validate(self):
        if not (self.nu > 0 and self.eta > 0):
            raise ConfigurationError("generalized_gamma: nu and eta must be positive")

    def _raw_pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = self.eta * x ** (self.nu - 1.0) * np.exp(-x ** self.eta) / gamma_fn(self.nu / self.eta)
        return np.where(x > 0, out, 0.0)

    def _raw_cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            return gammainc(self.nu / self.eta, np.where(np.isinf(x), np.inf, x ** self.eta))

    def _raw_ppf(self, u):
        return gammaincinv(self.nu / self.eta, u) ** (1.0 / self.eta)

    def _raw_sample(self, stream, n):
        return self._raw_ppf(stream.uniform(n))


@dataclass(frozen=True, kw_only=True)
class OneSidedLevy(PopulationSpec):
    """Totally skewed (extremal) stable law with Laplace transform ``exp(-s**alpha)``.

    With ``inverse_weighted`` the density becomes
    ``alpha / Gamma(1/alpha) * f(x) / x``, which keeps the stable shape near
    the origin but steepens the tail to ``x**(-2-alpha)``.
    """

    alpha: float
    inverse_weighted: bool = False
    kind: ClassVar[str] = "one_sided_levy"

    def _validate(self):
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"one_sided_levy: alpha must lie in (0, 1), got {self.alpha}")

    def _raw_pdf(self, x):
        f = special.stable_pdf(x, self.alpha)
        if self.inverse_weighted:
            with np.errstate(divide="ignore", invalid="ignore"):
                f = np.where(x > 0, self.alpha / gamma_fn(1.0 / self.alpha) * f / x, 0.0)
        return f

    def _raw_cdf(self, x):
        if self.inverse_weighted:
            return None
        return special.stable_cdf(x, self.alpha)

    @property
    def _tilt(self):
        return (1.0 - self.alpha) / self.alpha

    @cached_property
    def _angle_table(self):
        # inverse CDF of the angle density proportional to A(u)**(-tilt)
        edges = np.linspace(0.0, np.pi, TABLE_NODES + 1)
        a, b = edges[:-1, None], edges[1:, None]
        u = 0.5 * (b - a) * _GL8[0][None, :] + 0.5 * (b + a)
        fu = special.zolotarev_a(self.alpha, u) ** (-self._tilt)
        cells = (0.5 * (b - a)[:, 0]) * (fu @ _GL8[1])
        cum = np.r_[0.0, np.cumsum(cells)]
        cum /= cum[-1]
        keep = np.r_[True, np.diff(cum) > 0]
        return PchipInterpolator(cum[keep], edges[keep])

    def _raw_sample(self, stream, n):
        u1 = stream.uniform(n)
        u2 = stream.uniform(n)
        if not self.inverse_weighted:
            return special.stable_sample(self.alpha, u1, u2)
        # weighting by 1/x tilts E to Gamma(1 + tilt) and the angle by A**(-tilt)
        c = self._tilt
        ang = self._angle_table(u1)
        e = gammaincinv(1.0 + c, u2)
        return (special.zolotarev_a(self.alpha, ang) / e) ** c


@dataclass(frozen=True, kw_only=True)
class InversePowerExp(PopulationSpec):
    """``x**(-a) * exp(-c * x**(-b))`` on a mandatory window, renormalised numerically.

    With ``a <= 1`` the form is not integrable at infinity, so an upper cutoff
    is required.
    """

    a: float
    b: float
    c: float = 1.0
    lower: float = 1e-6
    upper: float = 1e6
    kind: ClassVar[str] = "inverse_power_exp"

    def _validate(self):
        if not (self.b > 0 and self.c > 0):
            raise ConfigurationError("inverse_power_exp: b and c must be positive")
        if self.a <= 1.0 and not np.isfinite(self.upper):
            raise ConfigurationError(
                f"inverse_power_exp: a={self.a} <= 1 is not normalisable on (0, inf); "
                "set a finite upper cutoff")

    @property
    def scale(self):
        return 1.0

    def _raw_pdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = x ** (-self.a) * np.exp(-self.c * x ** (-self.b))
        return np.where(x > 0, out, 0.0)


@dataclass(frozen=True, kw_only=True)
class MWright(PopulationSpec):
    """M-Wright density ``M_beta(x)`` on the positive half-line."""

    beta: float
    kind: ClassVar[str] = "mwright"

    def _validate(self):
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError(f"mwright: beta must lie in (0, 1), got {self.beta}")

    def _raw_pdf(self, x):
        return special.mwright(self.beta, np.asarray(x, dtype=float))

    def _raw_sample(self, stream, n):
        # if X is one-sided stable of order beta then X**(-beta) ~ M_beta
        u1 = stream.uniform(n)
        u2 = stream.uniform(n)
        return special.stable_sample(self.beta, u1, u2) ** (-self.beta)


@dataclass(frozen=True, kw_only=True)
class TabulatedInverseCdf(PopulationSpec):
    """Piecewise-linear quantile function through ``(probability, quantile)`` pairs.

    Repeated probabilities encode jumps of the quantile function, repeated
    quantiles encode atoms. ``[(0, 1), (0.5, 1), (0.5, 2), (1, 2)]`` is the
    two-point law with equal mass at 1 and 2.
    """

    probabilities: tuple = field(default=())
    quantiles: tuple = field(default=())
    kind: ClassVar[str] = "tabulated"

    def _validate(self):
        # store plain float tuples so specs stay hashable and compare by value
        try:
            object.__setattr__(self, "probabilities", tuple(float(v) for v in self.probabilities))
            object.__setattr__(self, "quantiles", tuple(float(v) for v in self.quantiles))
        except (TypeError, ValueError):
            raise ConfigurationError("tabulated: probabilities and quantiles must be numeric lists") from None
        p = np.asarray(self.probabilities, dtype=float)
        q = np.asarray(self.quantiles, dtype=float)
        if p.ndim != 1 or p.shape != q.shape or p.size < 2:
            raise ConfigurationError("tabulated: need matching probability/quantile lists of length >= 2")
        if p[0] != 0.0 or p[-1] != 1.0:
            raise ConfigurationError("tabulated: probabilities must run from 0 to 1")
        if np.any(np.diff(p) < 0) or np.any(np.diff(q) < 0):
            raise ConfigurationError("tabulated: grid must be monotone non-decreasing")
        if np.any(q <= 0):
            raise ConfigurationError("tabulated: quantiles must be positive")

    @property
    def _p(self):
        return np.asarray(self.probabilities, dtype=float)

    @property
    def _q(self):
        return np.asarray(self.quantiles, dtype=float)

    @property
    def scale(self):
        return float(np.exp(np.mean(np.log(self._q))))

    @property
    def mass(self):
        return 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        p, q = self._p, self._q
        out = np.zeros(x.shape)
        for i in range(p.size - 1):
            dp, dq = p[i + 1] - p[i], q[i + 1] - q[i]
            if dp > 0 and dq > 0:
                out = np.where((x >= q[i]) & (x < q[i + 1]), dp / dq, out)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p, q = self._p, self._q
        # right-continuous inverse of the quantile function
        idx = np.searchsorted(q, x, side="right")
        out = np.empty(x.shape)
        flat_x, flat_i, flat_o = x.ravel(), idx.ravel(), out.ravel()
        for j, (xv, i) in enumerate(zip(flat_x, flat_i)):
            if i == 0:
                flat_o[j] = 0.0
            elif i >= q.size:
                flat_o[j] = 1.0
            else:
                # x in [q[i-1], q[i]) with q[i] > q[i-1]
                flat_o[j] = p[i - 1] + (p[i] - p[i - 1]) * (xv - q[i - 1]) / (q[i] - q[i - 1])
        return out

    def ppf(self, u):
        return np.interp(u, self._p, self._q)

    def expect(self, h, epsrel=1e-12):
        """Exact for atoms; Gauss-Legendre in probability space on each ramp."""
        p, q = self._p, self._q
        xg, wg = np.polynomial.legendre.leggauss(40)
        total = 0.0
        for i in range(p.size - 1):
            dp = p[i + 1] - p[i]
            if dp <= 0:
                continue
            if q[i + 1] == q[i]:
                total += dp * float(np.asarray(h(np.array([q[i]])))[0])
                continue
            pp = 0.5 * dp * xg + 0.5 * (p[i] + p[i + 1])
            xs = q[i] + (q[i + 1] - q[i]) * (pp - p[i]) / dp
            total += 0.5 * dp * float(np.dot(wg, h(xs)))
        return total

    def sample(self, stream, n):
        if int(n) < 1:
            raise InputError("sample size must be >= 1")
        return self.ppf(stream.uniform(int(n)))


KINDS = {cls.kind: cls for cls in
         (Delta, Exponential, GeneralizedGamma, OneSidedLevy, InversePowerExp, MWright,
          TabulatedInverseCdf)}


def spec_from_mapping(mapping):
    """Build a spec from a ``{"kind": ..., **params}`` mapping."""
    params = dict(mapping)
    kind = params.pop("kind", None)
    if kind not in KINDS:
        raise ConfigurationError(f"unknown population kind {kind!r}; expected one of {sorted(KINDS)}")
    cls = KINDS[kind]
    allowed = {f.name for f in cls.__dataclass_fields__.values()}
    unknown = set(params) - allowed
    if unknown:
        raise ConfigurationError(f"{kind}: unknown parameter(s) {sorted(unknown)}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"{kind}: {exc}") from None


def spec_to_mapping(spec):
    out = {"kind": spec.kind}
    for name in spec.__dataclass_fields__:
        val = getattr(spec, name)
        if isinstance(val, tuple):
            val = list(val)
        out[name] = val
    return out


# ---------------------------------------------------------------- operations


def sample(spec, n, stream):
    """``n`` independent draws from ``spec`` using ``stream``."""
    return spec.sample(stream, n)


def density_eval(spec, x):
    """Normalised density of ``spec`` at ``x`` (zero outside the support)."""
    return spec.pdf(x)


@dataclass(frozen=True)
class ParticleParams:
    """Drawn and derived parameters of one (or a batch of) ensembles.

    Arrays carry particles on the last axis; ``M`` and ``Lambda`` drop it.
    """

    tau: np.ndarray
    sigma: np.ndarray
    m: np.ndarray
    gamma: np.ndarray
    M: np.ndarray
    Lambda: np.ndarray
    sigma0: float

    @property
    def N(self):
        return self.tau.shape[-1]


def derive_particle_params(tau, sigma, sigma0):
    """Masses ``m = sqrt(sigma0/sigma)``, frictions ``gamma = m/tau``, ``M`` and ``Lambda``."""
    tau = np.asarray(tau, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if tau.shape != sigma.shape or tau.ndim == 0 or tau.shape[-1] < 1:
        raise InputError(f"tau and sigma must have the same non-empty shape, got {tau.shape} and {sigma.shape}")
    if not (np.all(tau > 0) and np.all(sigma > 0) and np.all(np.isfinite(tau)) and np.all(np.isfinite(sigma))):
        raise InputError("tau and sigma must be finite and positive")
    if not sigma0 > 0:
        raise InputError("sigma0 must be positive")
    m = np.sqrt(sigma0 / sigma)
    M = m.sum(axis=-1)
    return ParticleParams(tau=tau, sigma=sigma, m=m, gamma=m / tau, M=M,
                          Lambda=sigma0 / M**2, sigma0=float(sigma0))


def mass_density_from_lambda(f, sigma0, Mval):
    """Density of the total mass ``M`` given the density ``f`` of ``Lambda = sigma0/M**2``.

    Change of variables with Jacobian ``|dLambda/dM| = 2 sigma0 / M**3``.
    """
    M = np.asarray(Mval, dtype=float)
    if np.any(M <= 0):
        raise InputError("M must be positive")
    out = 2.0 * sigma0 / M**3 * np.asarray(f.pdf(sigma0 / M**2))
    return out if out.ndim else float(out)


__all__ = [
    "PopulationSpec", "Delta", "Exponential", "GeneralizedGamma", "OneSidedLevy",
    "InversePowerExp", "MWright", "TabulatedInverseCdf", "KINDS", "ParticleParams",
    "sample", "density_eval", "derive_particle_params", "mass_density_from_lambda",
    "spec_from_mapping", "spec_to_mapping", "Stream",
]
