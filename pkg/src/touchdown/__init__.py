"""Finite-difference study of touchdown for u_t - Lap u = f(x) (1 - u)^(-p)."""
from .analysis import QuenchReport, TouchdownSet, analyze, lower_bound_T, upper_bound_T
from .config import RunConfig, load_config
from .errors import NumericalError, TouchdownError, ValidationError
from .experiments import bisect_critical_height, hausdorff_semidistance, perturbation_sweep
from .grid import Domain, Grid, build_grid, interval, radial_ball
from .profiles import (
    BallSpec,
    Profile,
    TwoAnnulusGeometry,
    constant,
    make_convex_lambda,
    make_m_shaped,
    make_one_well,
    make_two_annulus_family,
    make_two_bump,
    mu0,
)
from .report import write_report, write_snapshots
from .solver import SolverConfig, Trajectory, estimate_touchdown_time, solve

__version__ = "0.1.0"
