__version__ = "0.1.0"

from .application.freud import forward_recursion, variational_solve
from .application.kernels import KernelEval, scaling_limit_check
from .application.orthopoly import PsiEvaluator, stieltjes_recurrence
from .application.painleve2 import HMGrid, solve_hastings_mcleod
from .application.psi_cp import PhiSolution, solve_phi
from .application.usecases import ExperimentConfig
from .domain.valueobjects import DerivedConstants, ModelParams, RecurrenceData, Trajectory
from .main import run, selftest

__all__ = [
    "ModelParams",
    "DerivedConstants",
    "Trajectory",
    "RecurrenceData",
    "HMGrid",
    "PhiSolution",
    "PsiEvaluator",
    "KernelEval",
    "ExperimentConfig",
    "forward_recursion",
    "variational_solve",
    "stieltjes_recurrence",
    "solve_hastings_mcleod",
    "solve_phi",
    "scaling_limit_check",
    "run",
    "selftest",
]
