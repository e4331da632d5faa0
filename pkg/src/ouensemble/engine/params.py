"""Experiment parameters and trajectory containers."""
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from ..populations import PopulationSpec, spec_to_mapping

LAMBDA_MODES = ("resample", "fixed")
ZH_MODES = ("gaussian", "sum_of_y")
TAU_EFF_RULES = ("rms", "covariance")
ZSTAR_SCHEMES = ("euler", "exponential")
PROCESS_IDS = ("Z", "Zstar", "ZH", "singleOU", "Y")


def default_t_grid():
    """0 followed by 25 log-spaced times on [1e-2, 1e2] (contains 1, 10 and 100)."""
    return np.r_[0.0, np.logspace(-2.0, 2.0, 25)]


@dataclass(frozen=True)
class EnsembleParams:
    """Configuration of one ensemble experiment.

    Attributes
    ----------
    N, R : int
        Particles per realization and number of realizations.
    q_spec, g_spec : PopulationSpec
        Populations of relaxation times and noise amplitudes.
    sigma0 : float, optional
        Mass normalisation; defaults to ``1/N``.
    t_grid : ndarray
        Output times, starting at 0 and strictly increasing.
    dt_max : float, optional
        Step cap. For ``Z`` it switches on exact substepping; for ``Z*`` it
        defaults to ``max(1e-2 * min tau, 1e-4 * span)`` per realization.
    seed : int
    lambda_mode : {"resample", "fixed"}
        Redraw the particle parameters for each realization, or reuse those of
        realization 0 throughout.
    zh_mode : {"gaussian", "sum_of_y"}
    tau_eff_rule : {"rms", "covariance"}
        ``rms`` is ``sqrt(sum v / sum v/tau^2)``; ``covariance`` is the
        drift-matched ``sum v / sum v/tau`` (diagnostic alternative).
    zstar_scheme : {"euler", "exponential"}
    zstar_step_fraction : float
        Z* steps never exceed this fraction of the current ``tau_eff``.
    gamma0 : float, optional
        Recorded in reports only.
    zh_sigma0 : float, optional
        If set, Z^H uses this value in its amplitude while the masses keep
        ``sigma0``; used to build deliberately mismatched controls.
    """

    N: int
    R: int
    q_spec: PopulationSpec
    g_spec: PopulationSpec
    sigma0: float = None
    t_grid: np.ndarray = field(default_factory=default_t_grid)
    dt_max: float = None
    seed: int = 0
    lambda_mode: str = "resample"
    zh_mode: str = "gaussian"
    tau_eff_rule: str = "rms"
    zstar_scheme: str = "euler"
    zstar_step_fraction: float = 0.02
    zstar_max_steps: int = 10_000_000
    gamma0: float = None
    zh_sigma0: float = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N}")
        if int(self.R) != self.R or self.R < 1:
            raise ConfigurationError(f"R must be a positive integer, got {self.R}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "R", int(self.R))
        if self.sigma0 is None:
            object.__setattr__(self, "sigma0", 1.0 / self.N)
        if not self.sigma0 > 0:
            raise ConfigurationError("sigma0 must be positive")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size < 2 or t[0] != 0.0 or np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise ConfigurationError("t_grid must start at 0, be strictly increasing and have >= 2 points")
        t.flags.writeable = False
        object.__setattr__(self, "t_grid", t)
        if self.dt_max is not None and not self.dt_max > 0:
            raise ConfigurationError("dt_max must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        for name, allowed in (("lambda_mode", LAMBDA_MODES), ("zh_mode", ZH_MODES),
                              ("tau_eff_rule", TAU_EFF_RULES), ("zstar_scheme", ZSTAR_SCHEMES)):
            if getattr(self, name) not in allowed:
                raise ConfigurationError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        if not 0 < self.zstar_step_fraction <= 1:
            raise ConfigurationError("zstar_step_fraction must lie in (0, 1]")
        if self.zh_sigma0 is not None and not self.zh_sigma0 > 0:
            raise ConfigurationError("zh_sigma0 must be positive")
        for name in ("q_spec", "g_spec"):
            if not isinstance(getattr(self, name), PopulationSpec):
                raise ConfigurationError(f"{name} must be a PopulationSpec")

    def replace(self, **changes):
        return replace(self, **changes)

    def describe(self):
        """Plain-data echo of every field (for reports and provenance)."""
        return {
            "N": self.N, "R": self.R, "sigma0": self.sigma0,
            "t_grid": [float(x) for x in self.t_grid], "dt_max": self.dt_max,
            "seed": int(self.seed), "lambda_mode": self.lambda_mode, "zh_mode": self.zh_mode,
            "tau_eff_rule": self.tau_eff_rule, "zstar_scheme": self.zstar_scheme,
            "zstar_step_fraction": self.zstar_step_fraction, "zstar_max_steps": self.zstar_max_steps,
            "gamma0": self.gamma0, "zh_sigma0": self.zh_sigma0,
            "q_spec": spec_to_mapping(self.q_spec), "g_spec": spec_to_mapping(self.g_spec),
        }


@dataclass
class TrajectoryBatch:
    """``R`` realizations of one scalar process on ``t_grid``.

    ``lam`` holds the Lambda of each realization (NaN where undefined) and
    ``aborted`` flags realizations whose integration failed; their rows are
    NaN.
    """

    process_id: str
    values: np.ndarray
    t_grid: np.ndarray
    meta: dict = field(default_factory=dict)
    lam: np.ndarray = None
    aborted: np.ndarray = None

    def __post_init__(self):
        if self.process_id not in PROCESS_IDS:
            raise ValueError(f"unknown process id {self.process_id!r}")
        self.values = np.asarray(self.values, dtype=float)
        R = self.values.shape[0]
        if self.aborted is None:
            self.aborted = np.zeros(R, dtype=bool)
        if self.lam is None:
            self.lam = np.full(R, np.nan)

    @property
    def R(self):
        return self.values.shape[0]

    @property
    def ok(self):
        """Values of the realizations that completed."""
        return self.values[~self.aborted]

    @property
    def abort_fraction(self):
        return float(self.aborted.mean())

    def at(self, t_idx):
        return self.ok[:, t_idx]

    def scaled(self, factor, process_id=None, **meta):
        return TrajectoryBatch(process_id or self.process_id, self.values * factor, self.t_grid,
                               {**self.meta, **meta}, self.lam.copy(), self.aborted.copy())
