"""Windowed space-time LSPG model reduction for a 1D Burgers benchmark."""

from .burgers_fom import BurgersModel, Parameters, SpatialGrid, Trajectory, fom_march
from .hyper import solve_wst_gnat, train_gnat
from .metrics import imse, mse, residual_l2
from .solver import GaussNewtonConfig, solve_st_lspg, solve_wst_lspg
from .subspaces import fit_initial_guess, train_window_bases
from .windows import BDF1, BDF2, WindowPlan

__version__ = "0.1.0"

__all__ = [
    "BDF1", "BDF2", "BurgersModel", "GaussNewtonConfig", "Parameters", "SpatialGrid",
    "Trajectory", "WindowPlan", "fit_initial_guess", "fom_march", "imse", "mse",
    "residual_l2", "solve_st_lspg", "solve_wst_gnat", "solve_wst_lspg", "train_gnat",
    "train_window_bases",
]
