"""Linearized Poisson-Boltzmann solvation energies by Schwarz domain decomposition."""
from .angular import eval_harmonics, lebedev_grid, project_onto_basis
from .cases import builtin_case
from .cavity import Ball, Cavity, PointCharges, build_exposure, parse_pqr, read_pqr
from .errors import DDLPBError
from .operators import DiscreteOperators, SolventParams
from .oracle import KirkwoodProblem, born_energy_screened, kirkwood_energy
from .solver import C_ELEC, SolveConfig, SolveReport, convergence_sweep, solve

__all__ = [
    "Ball", "C_ELEC", "Cavity", "DDLPBError", "DiscreteOperators",
    "KirkwoodProblem", "PointCharges", "SolveConfig", "SolveReport",
    "SolventParams", "born_energy_screened", "build_exposure", "builtin_case",
    "convergence_sweep", "eval_harmonics", "kirkwood_energy", "lebedev_grid",
    "parse_pqr", "project_onto_basis", "read_pqr", "solve",
]
