"""Trapped-electron quantum computing toolkit.

Modules
-------
operators   Fock (x) spin operator algebra and states
lindblad    Lindblad master-equation integrators and a superoperator oracle
gate        sigma_z sigma_z geometric-phase gate, error channels, sweeps and budgets
trap        closed-form trap, cooling and heating calculators
trajectory  classical ionization-trajectory stability maps
config/cli  configuration parsing and the ``trapped-electrons`` command
"""
from .gate import (GateSchedule, calibrate_rabi, calibrated_schedule, error_budget, run_gate,
                   sweep, table_one_channels)
from .lindblad import SolverSettings, evolve, evolve_block_diagonal, propagator_oracle
from .operators import HilbertSpec
from .trap import TrapConfig

__version__ = "0.1.0"

__all__ = [
    "GateSchedule",
    "HilbertSpec",
    "SolverSettings",
    "TrapConfig",
    "calibrate_rabi",
    "calibrated_schedule",
    "error_budget",
    "evolve",
    "evolve_block_diagonal",
    "propagator_oracle",
    "run_gate",
    "sweep",
    "table_one_channels",
]
