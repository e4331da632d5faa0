"""Estimators and tests used to check equivalence and scaling."""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InputError

_KOLMOGOROV_TERMS = 100
# standard deviation of the Kolmogorov distribution (sqrt(pi^2/12 - (sqrt(pi/2) ln 2)^2))
KOLMOGOROV_SD = float(np.sqrt(np.pi**2 / 12.0 - (np.sqrt(np.pi / 2.0) * np.log(2.0)) ** 2))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    p_value: float
    n1: int
    n2: int

    @property
    def effective_n(self):
        return self.n1 * self.n2 / (self.n1 + self.n2)


@dataclass(frozen=True)
class DensityEstimate:
    bin_edges: np.ndarray
    counts: np.ndarray
    total: int
    normalized_heights: np.ndarray
    overflow: int = 0

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


class Estimate(NamedTuple):
    value: float
    std_error: float


class ScalingFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def kolmogorov_sf(lam):
    """``P(K > lam)`` for the Kolmogorov distribution.

    The alternating series ``2 sum (-1)^(k-1) exp(-2 k^2 lam^2)`` (100 terms)
    is used for ``lam >= 1``; below that it converges slowly and the
    equivalent theta-function form of the CDF is summed instead.
    """
    lam = float(lam)
    if lam <= 0.0:
        return 1.0
    k = np.arange(1, _KOLMOGOROV_TERMS + 1)
    if lam >= 1.0:
        p = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam))
    else:
        cdf = np.sqrt(2.0 * np.pi) / lam * np.sum(np.exp(-((2 * k - 1) ** 2) * np.pi**2 / (8.0 * lam * lam)))
        p = 1.0 - cdf
    return float(min(1.0, max(0.0, p)))


def ks_two_sample(x, y):
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    The ECDF difference is evaluated just after every point of the merged
    sample, which handles ties within and across samples.
    """
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise InputError("both samples must be non-empty")
    if np.isnan(x).any() or np.isnan(y).any():
        raise InputError("samples contain NaN")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    ne = x.size * y.size / (x.size + y.size)
    return KsResult(d, kolmogorov_sf(np.sqrt(ne) * d), int(x.size), int(y.size))


def ks_noise_se(n1, n2):
    """Standard deviation of the KS statistic under the null, ``KOLMOGOROV_SD / sqrt(n_e)``."""
    return KOLMOGOROV_SD / np.sqrt(n1 * n2 / (n1 + n2))


def bonferroni(alpha, m):
    return alpha / max(1, int(m))


def _values(batch):
    return batch.ok if hasattr(batch, "ok") else np.asarray(batch, dtype=float)


def autocovariance(batch, t_idx, s_idx):
    """Empirical ``E[Z_t Z_s] - E[Z_t] E[Z_s]`` with a leave-one-out jackknife error.

    ``batch`` is a :class:`~ouensemble.engine.TrajectoryBatch` (aborted
    realizations are skipped) or an ``R x T`` array.
    """
    v = _values(batch)
    R = v.shape[0]
    if R < 2:
        raise InputError("autocovariance needs at least 2 realizations")
    # centring first keeps the diagonal a sum of squares (never negative)
    a, b = v[:, t_idx] - v[:, t_idx].mean(), v[:, s_idx] - v[:, s_idx].mean()
    sa, sb, sab = a.sum(), b.sum(), (a * b).sum()
    value = sab / R
    loo = (sab - a * b) / (R - 1) - (sa - a) * (sb - b) / (R - 1) ** 2
    se = np.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2))
    return Estimate(float(value), float(se))


def sample_variance(x):
    """Variance (1/R normalisation) with its large-sample standard error."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise InputError("need at least 2 values")
    d = x - x.mean()
    var = np.mean(d * d)
    m4 = np.mean(d**4)
    return Estimate(float(var), float(np.sqrt(max(m4 - var * var, 0.0) / x.size)))


def scaling_exponent(t_values, variances, window=None):
    """Least-squares slope of ``log variance`` against ``log t``.

    Parameters
    ----------
    t_values, variances : array_like
    window : slice or (start, stop) pair, optional
        Index range to fit; defaults to everything.
    """
    t = np.asarray(t_values, dtype=float)
    v = np.asarray(variances, dtype=float)
    if window is not None:
        sl = window if isinstance(window, slice) else slice(*window)
        t, v = t[sl], v[sl]
    if t.size < 3 or t.shape != v.shape:
        raise InputError("scaling fit needs at least 3 matching points")
    if np.any(t <= 0) or np.any(v <= 0):
        raise InputError("times and variances must be positive")
    x, y = np.log(t), np.log(v)
    xc, yc = x - x.mean(), y - y.mean()
    sxx = np.dot(xc, xc)
    slope = np.dot(xc, yc) / sxx
    intercept = y.mean() - slope * x.mean()
    resid = yc - slope * xc
    syy = np.dot(yc, yc)
    r2 = 1.0 if syy == 0 else 1.0 - np.dot(resid, resid) / syy
    return ScalingFit(float(slope), float(intercept), float(r2))


def histogram(sample, bins, range=None):
    """Equal-width histogram normalised to unit area over the in-range values.

    Values outside ``range`` are counted in ``overflow`` and excluded from the
    normalisation.
    """
    x = np.asarray(sample, dtype=float).ravel()
    bins = int(bins)
    if bins < 1:
        raise InputError("bins must be >= 1")
    if range is None:
        if x.size == 0:
            raise InputError("empty sample")
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            lo, hi = lo - 0.5, hi + 0.5
    else:
        lo, hi = map(float, range)
    if not lo < hi:
        raise InputError(f"histogram range must satisfy lo < hi, got ({lo}, {hi})")
    inside = (x >= lo) & (x <= hi)
    counts, edges = np.histogram(x[inside], bins=bins, range=(lo, hi))
    total = int(counts.sum())
    if total == 0:
        raise InputError("no sample values inside the histogram range")
    heights = counts / (total * np.diff(edges))
    return DensityEstimate(edges, counts, total, heights, int(x.size - total))
