"""
Main import file for critwave's API.
"""

from .cli import error, note, progress, warn
from .config import RunConfig
from .errors import (
    BlowupError,
    CheckFailure,
    ConfigError,
    CritwaveError,
    DivergenceError,
    GridMismatchError,
    SingularityError,
)
from .feasible import ConstraintProfile, project_uad, prox_composite
from .grid import SpaceGrid, make_grid
from .kkt import AuditConfig, KKTReport, audit
from .norms import TimeGrid
from .objective import CostParams, Problem
from .optimizer import IterateLog, OptimizeConfig, optimize
from .solver import SolverParams, solve_adjoint, solve_forward, solve_linearized
from .trajectory import ControlTrajectory, StateTrajectory
from .version import VERSION

__all__ = [
    "note",
    "warn",
    "error",
    "progress",
    "RunConfig",
    "CritwaveError",
    "ConfigError",
    "GridMismatchError",
    "DivergenceError",
    "BlowupError",
    "SingularityError",
    "CheckFailure",
    "ConstraintProfile",
    "project_uad",
    "prox_composite",
    "SpaceGrid",
    "make_grid",
    "AuditConfig",
    "KKTReport",
    "audit",
    "TimeGrid",
    "CostParams",
    "Problem",
    "IterateLog",
    "OptimizeConfig",
    "optimize",
    "SolverParams",
    "solve_forward",
    "solve_linearized",
    "solve_adjoint",
    "ControlTrajectory",
    "StateTrajectory",
    "VERSION",
]
