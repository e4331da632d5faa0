"""End-to-end experiments producing comparison reports.

Every experiment returns a :class:`ComparisonReport` and, given an output
directory, writes its tables as CSV (17 significant digits, LF endings) plus a
``config.json`` echo and a ``provenance.json``. Wall-clock times live only in
the provenance file so that the CSV bytes depend on the configuration alone.
"""
import csv
import hashlib
import json
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._accel import get_backend
from .engine import clt_rescaled_Z, simulate_Z, simulate_ZH, simulate_Zstar
from .errors import InputError
from .specfun import covariance_Z, variance_Y_curve
from .stats import (bonferroni, autocovariance, ks_noise_se, ks_two_sample, sample_variance,
                    scaling_exponent)
from .populations import Delta

PROCESSES = ("Z", "Zstar", "ZH")
PAIRS = (("Z", "Zstar"), ("Z", "ZH"), ("Zstar", "ZH"))
ABORT_LIMIT = 0.01


@dataclass
class Criterion:
    name: str
    status: str  # "pass", "fail" or "inconclusive"
    threshold: str
    detail: str = ""

    @property
    def passed(self):
        return self.status == "pass"


@dataclass
class ComparisonReport:
    config: dict
    ks: list = field(default_factory=list)
    variance: list = field(default_factory=list)
    scaling: list = field(default_factory=list)
    correlation: list = field(default_factory=list)
    clt: list = field(default_factory=list)
    criteria: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.criteria)

    def criterion(self, name):
        for c in self.criteria:
            if c.name == name:
                return c
        raise KeyError(name)

    def write(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        tables = {
            "ks.csv": (["process_a", "process_b", "t", "ks_stat", "p_value", "var_a", "var_b", "n"], self.ks),
            "variance.csv": (["process", "t", "variance", "std_error", "theory", "diff_std_error"], self.variance),
            "scaling.csv": (["process", "t_lo", "t_hi", "slope", "intercept", "r2"], self.scaling),
            "correlation.csv": (["t", "s", "empirical", "std_error", "quadrature", "rel_error",
                                 "exponential_form"], self.correlation),
            "clt.csv": (["N", "t", "ks_stat", "p_value", "noise_se", "n"], self.clt),
        }
        written = []
        for name, (header, rows) in tables.items():
            if rows:
                write_rows(os.path.join(out_dir, name), header, rows)
                written.append(name)
        write_rows(os.path.join(out_dir, "criteria.csv"), ["criterion", "status", "threshold", "detail"],
                   [(c.name, c.status, c.threshold, c.detail) for c in self.criteria])
        with open(os.path.join(out_dir, "config.json"), "w", newline="\n") as fh:
            json.dump(self.config, fh, indent=2, sort_keys=True)
            fh.write("\n")
        prov = dict(self.provenance, files=written + ["criteria.csv", "config.json"])
        with open(os.path.join(out_dir, "provenance.json"), "w", newline="\n") as fh:
            json.dump(prov, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _provenance(config, operation, started, backend, workers):
    return {"operation": operation, "config_hash": config_hash(config), "package_version": __version__,
            "rng": "SplitMix64 counter streams keyed by (seed, family, realization, particle)",
            "backend": backend, "workers": workers, "wall_clock_s": round(time.time() - started, 3),
            "python": platform.python_version(), "numpy": np.__version__}


def _time_indices(t_grid, times):
    idx = []
    for t in times:
        j = int(np.argmin(np.abs(t_grid - t)))
        if not np.isclose(t_grid[j], t, rtol=1e-9, atol=0.0):
            raise InputError(f"time {t} is not on the simulation grid")
        idx.append(j)
    return idx


def _default_times(t_grid):
    return [t for t in (1.0, 10.0, 100.0) if np.any(np.isclose(t_grid, t, rtol=1e-9, atol=0.0))]


def run_equivalence(params, times=None, out_dir=None, alpha=0.01, backend=None, workers=None,
                    scaling_windows=((1e-2, 1e-1), (10.0, 100.0))):
    """Simulate Z, Z* and Z^H and compare them at the requested grid times.

    Criteria
    --------
    ``ks_<a>_<b>``
        Two-sample KS p-value above ``alpha / len(times)`` at every time.
    ``variance_<process>``
        ``|Var(X_t) - N mean(Lambda) v(t)|`` within three standard errors of
        the realization-wise difference ``X_t^2 - N Lambda v(t)``.
    Any process with more than 1% aborted realizations turns its criteria
    inconclusive.
    """
    started = time.time()
    times = _default_times(params.t_grid) if times is None else list(times)
    if not times:
        raise InputError("no comparison times")
    tidx = _time_indices(params.t_grid, times)
    batches = {
        "Z": simulate_Z(params, backend, workers),
        "Zstar": simulate_Zstar(params, backend, workers),
        "ZH": simulate_ZH(params, backend, workers),
    }
    config = params.describe()
    report = ComparisonReport(config)
    level = bonferroni(alpha, len(tidx))
    inconclusive = {k: b.abort_fraction > ABORT_LIMIT for k, b in batches.items()}

    for a, b in PAIRS:
        worst = 1.0
        for j in tidx:
            xa, xb = batches[a].at(j), batches[b].at(j)
            if xa.size == 0 or xb.size == 0:
                report.ks.append((a, b, params.t_grid[j], np.nan, np.nan, np.nan, np.nan, 0))
                continue
            res = ks_two_sample(xa, xb)
            worst = min(worst, res.p_value)
            report.ks.append((a, b, params.t_grid[j], res.statistic, res.p_value,
                              float(np.var(xa)), float(np.var(xb)), min(res.n1, res.n2)))
        status = "inconclusive" if inconclusive[a] or inconclusive[b] else ("pass" if worst > level else "fail")
        report.criteria.append(Criterion(f"ks_{a}_{b}", status, f"p > {level:.6g} (alpha={alpha} / {len(tidx)} times)",
                                         f"min p = {worst:.6g}"))

    v = variance_Y_curve(params.t_grid, params.q_spec)
    for name, batch in batches.items():
        vals = batch.ok
        lam = batch.lam[~batch.aborted]
        worst = 0.0
        if vals.shape[0] < 2:
            report.criteria.append(Criterion(f"variance_{name}", "inconclusive",
                                             "|Var - N mean(Lambda) v(t)| <= 3 SE", "fewer than 2 completed realizations"))
            continue
        for j in range(1, params.t_grid.size):
            est = sample_variance(vals[:, j])
            theory = params.N * lam.mean() * v[j]
            d = vals[:, j] - vals[:, j].mean()
            diff_se = float(np.std(d * d - params.N * lam * v[j]) / np.sqrt(vals.shape[0]))
            report.variance.append((name, params.t_grid[j], est.value, est.std_error, theory, diff_se))
            if j in tidx:
                worst = max(worst, abs(est.value - theory) / diff_se if diff_se > 0 else
                            (0.0 if est.value == theory else np.inf))
        status = "inconclusive" if inconclusive[name] else ("pass" if worst <= 3.0 else "fail")
        report.criteria.append(Criterion(f"variance_{name}", status, "|Var - N mean(Lambda) v(t)| <= 3 SE",
                                         f"max |z| = {worst:.4g}"))
        for lo, hi in scaling_windows:
            sel = (params.t_grid >= lo * (1 - 1e-12)) & (params.t_grid <= hi * (1 + 1e-12))
            if sel.sum() >= 3:
                variances = np.array([np.var(vals[:, j]) for j in np.flatnonzero(sel)])
                if np.all(variances > 0):
                    fit = scaling_exponent(params.t_grid[sel], variances)
                    report.scaling.append((name, lo, hi, fit.slope, fit.intercept, fit.r2))
    for lo, hi in scaling_windows:
        sel = (params.t_grid >= lo * (1 - 1e-12)) & (params.t_grid <= hi * (1 + 1e-12))
        if sel.sum() >= 3:
            fit = scaling_exponent(params.t_grid[sel], v[sel])
            report.scaling.append(("theory_vY", lo, hi, fit.slope, fit.intercept, fit.r2))

    be = batches["Z"].meta["backend"]
    report.provenance = _provenance(config, "harness.run_equivalence", started, be, workers)
    report.provenance["abort_fraction"] = {k: b.abort_fraction for k, b in batches.items()}
    if out_dir:
        report.write(out_dir)
    return report


def run_correlation(params, pairs, out_dir=None, rel_tol=0.05, backend=None, workers=None):
    """Empirical autocovariance of Z against the population quadrature.

    For a ``Delta`` population the exponential closed form is reported as well.
    """
    started = time.time()
    pairs = [tuple(map(float, p)) for p in pairs]
    if not pairs:
        raise InputError("no (t, s) pairs given")
    for t, s in pairs:
        if t <= 0 or s <= 0:
            raise InputError("correlation times must be positive")
    z = simulate_Z(params, backend, workers)
    lam = z.lam[~z.aborted].mean()
    config = params.describe()
    report = ComparisonReport(config)
    worst = 0.0
    for t, s in pairs:
        jt, js = _time_indices(params.t_grid, (t, s))
        est = autocovariance(z, jt, js)
        quad = covariance_Z(t, s, params.q_spec, params.N, lam)
        rel = abs(est.value - quad) / abs(quad)
        worst = max(worst, rel)
        expo = np.nan
        if isinstance(params.q_spec, Delta):
            tau0 = params.q_spec.location
            expo = params.N * lam * tau0 * (np.exp(-abs(t - s) / tau0) - np.exp(-(t + s) / tau0))
        report.correlation.append((t, s, est.value, est.std_error, quad, rel, expo))
    report.criteria.append(Criterion("correlation", "pass" if worst < rel_tol else "fail",
                                     f"relative error < {rel_tol}", f"max relative error = {worst:.4g}"))
    report.provenance = _provenance(config, "harness.run_correlation", started, z.meta["backend"], workers)
    if out_dir:
        report.write(out_dir)
    return report


def run_clt(params_list, t=1.0, out_dir=None, backend=None, workers=None):
    """KS distance between ``Z_t/sqrt(N)`` and ``sqrt(Lambda) B^H_t`` for increasing ``N``.

    The criterion asks each step up in ``N`` to lower the distance by more
    than one null standard error of the KS statistic.
    """
    started = time.time()
    params_list = sorted(params_list, key=lambda p: p.N)
    if len(params_list) < 2:
        raise InputError("run_clt needs at least two particle counts")
    rows = []
    for p in params_list:
        ts = p.replace(zh_mode="gaussian")
        j = _time_indices(ts.t_grid, (t,))[0]
        a = clt_rescaled_Z(ts, backend, workers).at(j)
        b = simulate_ZH(ts, backend, workers).at(j) / np.sqrt(ts.N)
        res = ks_two_sample(a, b)
        rows.append((p.N, t, res.statistic, res.p_value, ks_noise_se(res.n1, res.n2), min(res.n1, res.n2)))
    config = {"runs": [p.describe() for p in params_list], "t": t}
    report = ComparisonReport(config, clt=rows)
    drops = [(rows[i][2] - rows[i + 1][2], rows[i][4]) for i in range(len(rows) - 1)]
    ok = all(d > se for d, se in drops)
    report.criteria.append(Criterion(
        "clt_decrease", "pass" if ok else "fail", "KS(N_i) - KS(N_i+1) > one null SE",
        "; ".join(f"N={rows[i][0]}->{rows[i + 1][0]}: drop {d:.4g} vs SE {se:.4g}"
                  for i, (d, se) in enumerate(drops))))
    report.provenance = _provenance(config, "harness.run_clt", started, get_backend(backend), workers)
    if out_dir:
        report.write(out_dir)
    return report
