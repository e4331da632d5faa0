"""Command-line front end.

Exit codes: 0 success (all criteria pass), 1 a criterion failed, 2 usage or
configuration error.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .config import bundled_configs, load_config
from .engine import export, simulate_Z, simulate_ZH, simulate_Zstar
from .errors import ConfigurationError, DomainError, InputError
from .harness import run_clt, run_correlation, run_equivalence
from .specfun import kernel_table, write_kernel_csv

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

_SIMULATORS = {"Z": simulate_Z, "Zstar": simulate_Zstar, "ZH": simulate_ZH}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required,
                   help="config file, or the name of a bundled one (%s)" % ", ".join(bundled_configs()))
    p.add_argument("--seed", type=int, default=None, help="override the seed (else RUN_SEED, else file)")
    p.add_argument("--workers", type=int, default=None, help="numba threads (else RUN_WORKERS, else file)")
    p.add_argument("--out", default=None, help="output directory (else [run] out)")


def build_parser():
    parser = _Parser(prog="ouensemble", description="Heterogeneous OU ensembles: simulate and compare "
                     "the centre-of-mass process with its single-SDE and random-scaling equivalents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate Z, Z* and Z^H and export trajectories")
    _add_common(p)
    p.add_argument("--process", default="Z,Zstar,ZH", help="comma-separated subset of Z,Zstar,ZH")
    p.add_argument("--format", choices=("csv", "binary"), default="csv")

    p = sub.add_parser("compare", help="equivalence study (KS tests, variances, scaling)")
    _add_common(p)

    p = sub.add_parser("kernel", help="tabulate the ggBm kernel and its M-Wright mixture")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--zmin", type=float, default=-5.0)
    p.add_argument("--zmax", type=float, default=5.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--out", default="runs/kernel")

    p = sub.add_parser("correlate", help="two-time covariance of Z against the quadrature")
    _add_common(p)
    p.add_argument("--pairs", default=None, help="pairs 't:s,t:s,...' (overrides the config)")

    p = sub.add_parser("clt", help="KS distance of Z/sqrt(N) to sqrt(Lambda) B^H across N")
    _add_common(p)
    return parser


def _out_dir(args, cfg):
    return args.out or cfg.out or os.path.join("runs", os.path.splitext(os.path.basename(cfg.path))[0])


def _parse_pairs(raw):
    pairs = []
    for item in raw.replace(" ", "").split(","):
        if not item:
            continue
        t, sep, s = item.partition(":")
        if not sep:
            raise InputError(f"pair {item!r} is not of the form t:s")
        try:
            pairs.append((float(t), float(s)))
        except ValueError:
            raise InputError(f"pair {item!r} is not numeric") from None
    return pairs


def _summary(report, out):
    for c in report.criteria:
        print(f"{c.status.upper():12s} {c.name}: {c.detail} [{c.threshold}]")
    print(f"report written to {out}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_simulate(args):
    cfg = load_config(args.config, seed=args.seed, workers=args.workers)
    out = _out_dir(args, cfg)
    names = [s.strip() for s in args.process.split(",") if s.strip()]
    bad = [n for n in names if n not in _SIMULATORS]
    if bad or not names:
        raise InputError(f"unknown process(es) {bad}; choose from {sorted(_SIMULATORS)}")
    os.makedirs(out, exist_ok=True)
    ext = "csv" if args.format == "csv" else "bin"
    for name in names:
        batch = _SIMULATORS[name](cfg.params, cfg.backend, cfg.workers)
        path = os.path.join(out, f"{name}.{ext}")
        export(batch, path, args.format)
        print(f"{name}: {batch.R} realizations x {batch.t_grid.size} times -> {path}")
    with open(os.path.join(out, "config.json"), "w", newline="\n") as fh:
        json.dump(cfg.params.describe(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def cmd_compare(args):
    cfg = load_config(args.config, seed=args.seed, workers=args.workers)
    out = _out_dir(args, cfg)
    report = run_equivalence(cfg.params, cfg.times, out, cfg.alpha, cfg.backend, cfg.workers)
    return _summary(report, out)


def cmd_kernel(args):
    if not args.zmin < args.zmax:
        raise InputError(f"--zmin must be below --zmax (got {args.zmin} >= {args.zmax})")
    if args.points < 2:
        raise InputError("--points must be >= 2")
    z = np.linspace(args.zmin, args.zmax, args.points)
    rows = kernel_table(args.beta, args.H, args.t, z)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "kernel.csv")
    write_kernel_csv(path, rows)
    print(f"kernel table ({len(rows)} rows) -> {path}")
    return EXIT_OK


def cmd_correlate(args):
    cfg = load_config(args.config, seed=args.seed, workers=args.workers)
    pairs = _parse_pairs(args.pairs) if args.pairs is not None else cfg.pairs
    if not pairs:
        raise InputError("no (t, s) pairs given")
    out = _out_dir(args, cfg)
    report = run_correlation(cfg.params, pairs, out, cfg.rel_tol, cfg.backend, cfg.workers)
    return _summary(report, out)


def cmd_clt(args):
    cfg = load_config(args.config, seed=args.seed, workers=args.workers)
    if len(cfg.clt_N) < 2:
        raise InputError("[clt] N must list at least two particle counts")
    runs = [cfg.params.replace(N=n, sigma0=1.0 / n) for n in cfg.clt_N]
    out = _out_dir(args, cfg)
    report = run_clt(runs, cfg.clt_t, out, cfg.backend, cfg.workers)
    return _summary(report, out)


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "kernel": cmd_kernel,
            "correlate": cmd_correlate, "clt": cmd_clt}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, InputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
