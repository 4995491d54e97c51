"""Aggregation-diffusion equations near the incompressible limit.

Finite-volume solvers for power-law and singular pressures, exact 1D and
radial transport distances, stationary states, and convergence-rate sweeps.
"""

__version__ = "0.1.0"

from .measures import DiscreteDensity, Grid, barycenter, lp_distance, mass, second_moment
from .models import ModelSpec, Potential, PotentialSpec, PressureLaw, energy, dissipation
from .solver import SolveConfig, Trajectory, solve, stable_dt, step
from .stationary import build_profile, solve_cm, stationary_profile, support_threshold
from .transport import h_minus_one, wasserstein2

__all__ = [
    "DiscreteDensity", "Grid", "ModelSpec", "Potential", "PotentialSpec", "PressureLaw",
    "SolveConfig", "Trajectory", "barycenter", "build_profile", "dissipation", "energy",
    "h_minus_one", "lp_distance", "mass", "second_moment", "solve", "solve_cm",
    "stable_dt", "stationary_profile", "step", "support_threshold", "wasserstein2",
]
