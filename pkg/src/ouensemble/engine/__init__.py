"""Trajectory simulation of heterogeneous OU ensembles."""
from .io import export, read_binary, write_binary, write_csv
from .params import (LAMBDA_MODES, PROCESS_IDS, TAU_EFF_RULES, ZH_MODES, ZSTAR_SCHEMES,
                     EnsembleParams, TrajectoryBatch, default_t_grid)
from .simulate import (clt_rescaled_Z, simulate_ou, simulate_Z, simulate_ZH, simulate_Zstar,
                       step_ou_exact, taueff_mesh)
from .taueff import tau_eff

__all__ = [
    "EnsembleParams", "TrajectoryBatch", "default_t_grid", "step_ou_exact", "simulate_Z",
    "simulate_Zstar", "simulate_ZH", "clt_rescaled_Z", "simulate_ou", "tau_eff", "taueff_mesh",
    "export", "write_csv", "write_binary", "read_binary",
    "LAMBDA_MODES", "ZH_MODES", "TAU_EFF_RULES", "ZSTAR_SCHEMES", "PROCESS_IDS",
]
