"""Adaptive density tracking for a two-level LGKS system.

A PID controller driven by the Uhlmann-Jozsa fidelity error, with gains
tuned online by continuous-time retrospective cost adaptive control.
"""

from .config import SCENARIOS, RunConfig, SweepConfig, load_config, preset_config, scenario
from .harness import SweepResult, jh_cost, run_sweep, select_best
from .lindblad import PlantConfig, equilibrium_residual, hamiltonian, lgks_rhs
from .metrics import bloch, density_error, fidelity_2x2, fidelity_general, von_neumann_entropy
from .rcac import ControllerState, DivergenceError, RcacConfig, rcac_derivatives, rcac_oracle
from .sim import SimConfig, SimulationError, TrajectoryRecord, simulate

__all__ = [
    "SCENARIOS",
    "ControllerState",
    "DivergenceError",
    "PlantConfig",
    "RcacConfig",
    "RunConfig",
    "SimConfig",
    "SimulationError",
    "SweepConfig",
    "SweepResult",
    "TrajectoryRecord",
    "bloch",
    "density_error",
    "equilibrium_residual",
    "fidelity_2x2",
    "fidelity_general",
    "hamiltonian",
    "jh_cost",
    "lgks_rhs",
    "load_config",
    "preset_config",
    "rcac_derivatives",
    "rcac_oracle",
    "run_sweep",
    "scenario",
    "select_best",
    "simulate",
    "von_neumann_entropy",
]
