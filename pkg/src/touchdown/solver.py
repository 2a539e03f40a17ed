"""Adaptive semi-implicit integration of u_t - Lap u = f(x) (1 - u)^(-p) up to touchdown.

Each step advances the reaction part in closed form from the old state and
then applies backward-Euler diffusion (one tridiagonal solve):

    (I - dt Lap) u_new = u + dt * S(u),   S(u) = (Phi_dt(u) - u) / dt,

where Phi_dt is the exact flow of u' = f (1 - u)^(-p), i.e.

    (1 - Phi_dt(u))^(p+1) = (1 - u)^(p+1) - (p + 1) f dt.

With diffusion switched off the scheme reproduces the spatially constant
ODE solution to rounding.  The step size follows the quench rate,

    dt = min(dt_init, safety * (1 - max u)^(p+1) / ((p+1) max f)),

so one step consumes at most the fraction ``safety`` of (1 - max u)^(p+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import DomainError, FitError, InvalidParameterError, NoQuenchError, NumericalError, StagnationError
from .grid import Grid, laplacian_bands
from .profiles import Profile

QUENCH_STOP = "quench_stop"
T_MAX_REACHED = "t_max_reached"


@dataclass(frozen=True)
class SolverConfig:
    p: float = 2.0
    dt_init: float | None = None  # None: 1e-3 * T_lower (or 1e-3 when f == 0)
    dt_safety: float = 0.1
    eps_stop: float = 1e-4
    snapshot_stride: int = 10
    fit_window: int = 40
    diffusion: bool = True  # test hook: False integrates the pointwise ODE only

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise InvalidParameterError("; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not (isinstance(self.p, (int, float)) and self.p > 0):
            out.append("p > 0")
        if self.dt_init is not None and not self.dt_init > 0:
            out.append("dt_init > 0")
        if not 0 < self.dt_safety <= 1:
            out.append("dt_safety ∈ (0,1]")
        if not 0 < self.eps_stop < 1:
            out.append("eps_stop ∈ (0,1)")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            out.append("snapshot_stride >= 1")
        if int(self.fit_window) != self.fit_window or self.fit_window < 5:
            out.append("fit_window >= 5")
        return out


def lower_bound_time(p: float, fmax: float) -> float:
    """T_* = 1 / ((p+1) ||f||_inf); infinite when f vanishes."""
    return math.inf if fmax <= 0 else 1.0 / ((p + 1) * fmax)


@dataclass(eq=False)
class Trajectory:
    grid: Grid
    profile: Profile
    config: SolverConfig
    snap_t: np.ndarray = field(repr=False)
    snap_u: np.ndarray = field(repr=False)
    step_t: np.ndarray = field(repr=False)
    step_dt: np.ndarray = field(repr=False)
    step_max_u: np.ndarray = field(repr=False)
    terminated: str

    @property
    def t_end(self) -> float:
        return float(self.snap_t[-1])

    @property
    def u_end(self) -> np.ndarray:
        return self.snap_u[-1]

    @property
    def quenched(self) -> bool:
        return self.terminated == QUENCH_STOP

    @property
    def n_steps(self) -> int:
        return len(self.step_t)

    def snapshots(self):
        return zip(self.snap_t, self.snap_u)


class _Stepper:
    def __init__(self, grid: Grid, profile: Profile, config: SolverConfig):
        if not profile.grid.same_as(grid):
            raise InvalidParameterError("profile and grid do not match")
        self.grid = grid
        self.f = np.asarray(profile.values, dtype=float)
        self.fmax = float(self.f.max())
        self.config = config
        self.p = float(config.p)
        self.T_lower = lower_bound_time(self.p, self.fmax)
        if config.dt_init is not None:
            self.dt_init = float(config.dt_init)
        else:
            self.dt_init = 1e-3 * self.T_lower if self.fmax > 0 else 1e-3
        self.lower, self.main, self.upper = laplacian_bands(grid)
        self.bnd = grid.boundary_mask

    def rate_dt(self, u: np.ndarray) -> float:
        if self.fmax <= 0:
            return self.dt_init
        gap = 1.0 - float(u.max())
        return min(self.dt_init, self.config.dt_safety * gap ** (self.p + 1) / ((self.p + 1) * self.fmax))

    def react(self, u: np.ndarray, dt: float) -> np.ndarray:
        q = self.p + 1
        arg = (1.0 - u) ** q - q * self.f * dt
        if np.any(arg <= 0):
            return None
        return 1.0 - arg ** (1.0 / q)

    def diffuse(self, v: np.ndarray, dt: float) -> np.ndarray:
        ab = np.empty((3, v.size))
        ab[0, 0] = 0.0
        ab[0, 1:] = -dt * self.upper[:-1]
        ab[1] = 1.0 - dt * self.main
        ab[2, :-1] = -dt * self.lower[1:]
        ab[2, -1] = 0.0
        try:
            return solve_banded((1, 1), ab, v, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"tridiagonal solve failed: {exc}") from exc

    def advance(self, t: float, u: np.ndarray, dt: float) -> tuple[float, np.ndarray, float]:
        floor = 1e-14 * (self.T_lower if math.isfinite(self.T_lower) else 1.0)
        while True:
            if dt < floor:
                raise StagnationError(f"time step underflow at t={t!r} (dt={dt!r})")
            v = self.react(u, dt)
            if v is not None:
                v[self.bnd] = 0.0
                new = self.diffuse(v, dt) if self.config.diffusion else v
                new[self.bnd] = 0.0
                if np.all(np.isfinite(new)) and new.max() < 1.0:
                    return t + dt, new, dt
            dt *= 0.5


def step(state: tuple[float, np.ndarray], grid: Grid, profile: Profile,
         config: SolverConfig) -> tuple[float, np.ndarray]:
    """One adaptive step from ``state = (t, u)``."""
    t, u = state
    u = np.asarray(u, dtype=float)
    if 1.0 - u.max() <= config.eps_stop:
        raise DomainError("state is already within eps_stop of touchdown")
    st = _Stepper(grid, profile, config)
    t_new, u_new, _ = st.advance(float(t), u, st.rate_dt(u))
    return t_new, u_new


def solve(grid: Grid, profile: Profile, config: SolverConfig, t_max: float = math.inf) -> Trajectory:
    """Integrate from u = 0 until 1 - max u <= eps_stop or t >= t_max."""
    st = _Stepper(grid, profile, config)
    if not math.isfinite(t_max) and st.fmax <= 0:
        raise InvalidParameterError("f == 0 never quenches; give a finite t_max")
    t = 0.0
    u = np.zeros(grid.size)
    snap_t, snap_u = [0.0], [u.copy()]
    step_t, step_dt, step_max = [], [], []
    stride = config.snapshot_stride
    terminated = T_MAX_REACHED
    k = 0
    while True:
        if 1.0 - u.max() <= config.eps_stop:
            terminated = QUENCH_STOP
            break
        if t >= t_max:
            break
        dt = st.rate_dt(u)
        final = t_max - t <= dt * (1 + 1e-6)  # absorb rounding slivers
        if final:
            dt = t_max - t
        t, u, used = st.advance(t, u, dt)
        if final and used == dt:
            t = t_max  # land exactly, no rounding sliver left over
        dt = used
        k += 1
        step_t.append(t)
        step_dt.append(dt)
        step_max.append(float(u.max()))
        if k % stride == 0:
            snap_t.append(t)
            snap_u.append(u.copy())
    if snap_t[-1] != t:
        snap_t.append(t)
        snap_u.append(u.copy())
    return Trajectory(grid, profile, config, np.array(snap_t), np.array(snap_u),
                      np.array(step_t), np.array(step_dt), np.array(step_max), terminated)


# ---------------------------------------------------------------- extrapolation

@dataclass(frozen=True)
class TouchdownTimeFit:
    T_est: float
    fit_slope: float
    fit_residual: float


def fit_quench_line(t, max_u, p: float) -> TouchdownTimeFit:
    """Least-squares line through (t, (1 - max u)^(p+1)); T_est is its zero."""
    t = np.asarray(t, dtype=float)
    y = (1.0 - np.asarray(max_u, dtype=float)) ** (p + 1)
    if t.size < 2:
        raise FitError("need at least two points")
    # centre t for conditioning: t values agree to many digits near touchdown
    t0 = t[-1]
    A = np.column_stack([t - t0, np.ones_like(t)])
    (slope, icept), *_ = np.linalg.lstsq(A, y, rcond=None)
    if not slope < 0:
        raise FitError("no quench trend in the fit window (slope >= 0)")
    resid = float(np.sqrt(np.mean((A @ np.array([slope, icept]) - y) ** 2)))
    return TouchdownTimeFit(float(t0 - icept / slope), float(slope), resid)


def estimate_touchdown_time(traj: Trajectory) -> TouchdownTimeFit:
    if not traj.quenched:
        raise NoQuenchError("trajectory did not reach the quench stop")
    N = traj.config.fit_window
    if traj.n_steps < N:
        raise FitError(f"need {N} accepted steps, have {traj.n_steps}")
    return fit_quench_line(traj.step_t[-N:], traj.step_max_u[-N:], traj.config.p)


def ode_quench_oracle(p: float, c: float, t):
    """y(t) = 1 - (1 - (p+1) c t)^(1/(p+1)), the solution of y' = c (1-y)^(-p), y(0) = 0."""
    t = np.asarray(t, dtype=float)
    base = 1.0 - (p + 1) * c * t
    if np.any(t < 0) or np.any(base <= 0):
        raise DomainError("t outside [0, 1/((p+1)c))")
    y = 1.0 - base ** (1.0 / (p + 1))
    return float(y) if y.ndim == 0 else y
