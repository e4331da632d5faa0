"""Run configuration files.

Configurations are INI files (``configparser`` syntax, ``#`` comments)::

    [run]
    seed = 20240101        # unsigned 64-bit
    workers = 0            # 0: numba default thread count
    out = runs/panel_b     # default output directory
    backend = numba        # or numpy; default from OUENSEMBLE_BACKEND

    [ensemble]
    N = 100
    R = 10000
    sigma0 = 0.01          # default 1/N
    t_grid = logspace 1e-2 1e2 25     # 0 is prepended; or an explicit list "0, 1, 2"
    dt_max = 0.01          # optional
    lambda_mode = resample # or fixed
    zh_mode = gaussian     # or sum_of_y
    tau_eff_rule = rms     # or covariance
    zstar_scheme = euler   # or exponential
    zstar_step_fraction = 0.02
    zstar_max_steps = 10000000
    gamma0 = 1e-5          # recorded only
    zh_sigma0 = 0.04       # optional mismatched amplitude for Z^H

    [tau]                  # population of relaxation times
    kind = one_sided_levy
    alpha = 0.75
    inverse_weighted = true

    [sigma]                # population of noise amplitudes
    kind = generalized_gamma
    nu = 0.5
    eta = 1.3

    [compare]
    times = 1, 10, 100
    alpha = 0.01

    [correlation]
    grid = 1, 1.5, 2, 2.5, 3   # all (t, s) pairs on this grid
    pairs = 1:2, 2:3           # or explicit pairs (overrides grid)
    rel_tol = 0.05

    [clt]
    N = 10, 100, 1000
    t = 1

Population sections take ``kind`` plus the parameters of that kind (see
:data:`ouensemble.populations.KINDS`), and optionally ``lower``/``upper``.
Unknown sections or keys are rejected with the offending line number.
"""
import configparser
import os
import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .engine import EnsembleParams
from .errors import ConfigurationError
from .populations import KINDS, spec_from_mapping

SCHEMA = {
    "run": {"seed", "workers", "out", "backend"},
    "ensemble": {"N", "R", "sigma0", "t_grid", "dt_max", "lambda_mode", "zh_mode", "tau_eff_rule",
                 "zstar_scheme", "zstar_step_fraction", "zstar_max_steps", "gamma0", "zh_sigma0"},
    "tau": None,  # population sections are checked against the chosen kind
    "sigma": None,
    "compare": {"times", "alpha"},
    "correlation": {"grid", "pairs", "rel_tol"},
    "clt": {"N", "t"},
}
REQUIRED = ("ensemble", "tau", "sigma")
ENV_SEED = "RUN_SEED"
ENV_WORKERS = "RUN_WORKERS"

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^#;=:\s][^=:]*?)\s*[=:]")


@dataclass
class RunConfig:
    """Validated run configuration."""

    path: str
    params: EnsembleParams
    seed: int
    workers: int = 0
    out: str = None
    backend: str = None
    times: tuple = (1.0, 10.0, 100.0)
    alpha: float = 0.01
    pairs: list = field(default_factory=list)
    rel_tol: float = 0.05
    clt_N: tuple = ()
    clt_t: float = 1.0


def bundled_configs():
    root = resources.files("ouensemble") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_path(path):
    """Return ``path`` if it exists, else the bundled config of that name."""
    if os.path.exists(path):
        return path
    name = os.path.basename(path)
    candidate = resources.files("ouensemble") / "configs" / name
    if candidate.is_file():
        return str(candidate)
    raise ConfigurationError(f"config file not found: {path}")


def _line_index(text):
    """Map ``(section, key)`` and ``section`` to 1-based line numbers."""
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), 1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            lines.setdefault(section, no)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None and not line[:1].isspace():
            lines.setdefault((section, m.group(1).strip()), no)
    return lines


class _Reader:
    def __init__(self, path, text):
        self.path = path
        self.lines = _line_index(text)
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        self.cp = cp

    def error(self, section, key, message):
        no = self.lines.get((section, key) if key else section)
        where = f"{self.path}:{no}" if no else self.path
        label = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigurationError(f"{where}: {label}: {message}")

    def has(self, section, key=None):
        if key is None:
            return self.cp.has_section(section)
        return self.cp.has_option(section, key)

    def get(self, section, key, conv=str, default=None):
        if not self.has(section, key):
            return default
        raw = self.cp.get(section, key).strip()
        try:
            return conv(raw)
        except (ValueError, ConfigurationError) as exc:
            raise self.error(section, key, f"invalid value {raw!r} ({exc})") from None


def _floats(raw):
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _ints(raw):
    vals = _floats(raw)
    if any(v != int(v) for v in vals):
        raise ValueError("expected integers")
    return tuple(int(v) for v in vals)


def _int(raw):
    v = float(raw)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _bool(raw):
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _t_grid(raw):
    parts = raw.replace(",", " ").split()
    if parts and parts[0] == "logspace":
        if len(parts) != 4:
            raise ValueError("use 'logspace LO HI COUNT'")
        lo, hi, n = float(parts[1]), float(parts[2]), _int(parts[3])
        if not (0 < lo < hi and n >= 2):
            raise ValueError("need 0 < LO < HI and COUNT >= 2")
        return np.r_[0.0, np.logspace(np.log10(lo), np.log10(hi), n)]
    return np.array(_floats(raw))


def _pairs(raw):
    out = []
    for item in raw.replace(" ", "").split(","):
        if not item:
            continue
        t, sep, s = item.partition(":")
        if not sep:
            raise ValueError(f"pair {item!r} is not of the form t:s")
        out.append((float(t), float(s)))
    return out


def _population(reader, section):
    if not reader.has(section):
        raise reader.error(section, None, "missing section")
    kind = reader.get(section, "kind")
    if kind is None:
        raise reader.error(section, None, "missing key 'kind'")
    if kind not in KINDS:
        raise reader.error(section, "kind", f"unknown kind {kind!r}; expected one of {sorted(KINDS)}")
    cls = KINDS[kind]
    allowed = set(cls.__dataclass_fields__)
    mapping = {"kind": kind}
    for key in reader.cp.options(section):
        if key == "kind":
            continue
        if key not in allowed:
            raise reader.error(section, key, f"unknown key for kind {kind!r}; allowed: {sorted(allowed)}")
        if key in ("probabilities", "quantiles"):
            mapping[key] = reader.get(section, key, _floats)
        elif key == "inverse_weighted":
            mapping[key] = reader.get(section, key, _bool)
        else:
            mapping[key] = reader.get(section, key, float)
    try:
        return spec_from_mapping(mapping)
    except ConfigurationError as exc:
        raise reader.error(section, None, str(exc)) from None


def load_config(path, seed=None, workers=None, environ=None):
    """Read, validate and resolve a configuration file.

    Precedence for seed and worker count: explicit argument, then the
    ``RUN_SEED`` / ``RUN_WORKERS`` environment variables, then the file.
    """
    environ = os.environ if environ is None else environ
    real = resolve_path(path)
    with open(real) as fh:
        text = fh.read()
    reader = _Reader(path, text)

    for section in reader.cp.sections():
        if section not in SCHEMA:
            raise reader.error(section, None, f"unknown section; expected one of {sorted(SCHEMA)}")
        allowed = SCHEMA[section]
        if allowed is None:
            continue
        for key in reader.cp.options(section):
            if key not in allowed:
                raise reader.error(section, key, f"unknown key; allowed: {sorted(allowed)}")
    for section in REQUIRED:
        if not reader.has(section):
            raise ConfigurationError(f"{path}: missing required section [{section}]")
    for key in ("N", "R"):
        if not reader.has("ensemble", key):
            raise reader.error("ensemble", None, f"missing required key {key!r}")

    q = _population(reader, "tau")
    g = _population(reader, "sigma")

    file_seed = reader.get("run", "seed", _int, 0)
    if seed is None and environ.get(ENV_SEED):
        try:
            seed = int(environ[ENV_SEED])
        except ValueError:
            raise ConfigurationError(f"{ENV_SEED} must be an integer, got {environ[ENV_SEED]!r}") from None
    seed = file_seed if seed is None else int(seed)
    file_workers = reader.get("run", "workers", _int, 0)
    if workers is None and environ.get(ENV_WORKERS):
        try:
            workers = int(environ[ENV_WORKERS])
        except ValueError:
            raise ConfigurationError(f"{ENV_WORKERS} must be an integer, got {environ[ENV_WORKERS]!r}") from None
    workers = file_workers if workers is None else int(workers)
    if workers < 0:
        raise ConfigurationError("worker count must be >= 0")

    kwargs = {}
    conv = {"N": _int, "R": _int, "sigma0": float, "t_grid": _t_grid, "dt_max": float,
            "zstar_step_fraction": float, "zstar_max_steps": _int, "gamma0": float, "zh_sigma0": float}
    for key in SCHEMA["ensemble"]:
        if reader.has("ensemble", key):
            kwargs[key] = reader.get("ensemble", key, conv.get(key, str))
    try:
        params = EnsembleParams(q_spec=q, g_spec=g, seed=seed, **kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: [ensemble]: {exc}") from None

    backend = reader.get("run", "backend")
    if backend is not None and backend not in ("numba", "numpy"):
        raise reader.error("run", "backend", "expected numba or numpy")
    cfg = RunConfig(path=real, params=params, seed=seed, workers=workers,
                    out=reader.get("run", "out"), backend=backend)
    cfg.times = reader.get("compare", "times", _floats, cfg.times)
    cfg.alpha = reader.get("compare", "alpha", float, cfg.alpha)
    if not 0 < cfg.alpha < 1:
        raise reader.error("compare", "alpha", "must lie in (0, 1)")
    if reader.has("correlation", "pairs"):
        cfg.pairs = reader.get("correlation", "pairs", _pairs)
    elif reader.has("correlation", "grid"):
        grid = reader.get("correlation", "grid", _floats)
        cfg.pairs = [(t, s) for t in grid for s in grid]
    cfg.rel_tol = reader.get("correlation", "rel_tol", float, cfg.rel_tol)
    cfg.clt_N = reader.get("clt", "N", _ints, ())
    cfg.clt_t = reader.get("clt", "t", float, 1.0)
    return cfg
