"""Post-processing of quenching trajectories.

Closed-form bounds on the touchdown time, touchdown-set detection, the
empirical type-I constant, the J-function monitor built on the harmonic
barrier a = phi^(p+1), and the separated-variables no-touchdown certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, GeometryError, InvalidParameterError, NoQuenchError, UnsupportedDimensionError, ValidationError
from .grid import Domain, Grid, boundary_distance, laplacian_apply
from .profiles import BallSpec, Profile, lambda1, mu0, profile_floor_check
from .solver import Trajectory, estimate_touchdown_time, lower_bound_time

KAPPA_TD = 8.0
RESIDUAL_FACTOR = 3.0


class InapplicableBoundError(ValidationError):
    """The hypothesis of a bound or certificate is not met."""


# -------------------------------------------------------------------- bounds

def lower_bound_T(p: float, f: Profile | float) -> float:
    fmax = f if np.isscalar(f) else f.sup
    return lower_bound_time(p, float(fmax))


def upper_bound_T(p: float, n: int, mu: float, r: float) -> float:
    threshold = mu0(p, n) / r**2
    if not mu > threshold:
        raise InapplicableBoundError(f"need mu > mu0(p,n)/r^2 = {threshold!r}")
    return 1.0 / ((p + 1) * (mu - threshold))


# ------------------------------------------------------------ touchdown sets

@dataclass(frozen=True)
class TouchdownSet:
    """Union of closed intervals, in x (interval domain) or r = |x| (radial)."""
    components: tuple[tuple[float, float], ...]
    domain: Domain
    h: float = 0.0
    kappa: float = KAPPA_TD

    def __post_init__(self):
        comps = tuple(sorted((float(a), float(b)) for a, b in self.components))
        for a, b in comps:
            if a > b:
                raise ValidationError("component with lo > hi")
        for (_, b0), (a1, _) in zip(comps, comps[1:]):
            if a1 <= b0:
                raise ValidationError("components must be disjoint")
        object.__setattr__(self, "components", comps)

    def __bool__(self) -> bool:
        return bool(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.components)

    @property
    def cell_width(self) -> float:
        """Measure of the cells owned by the flagged nodes (node span + h per component)."""
        lo = self.domain.lo
        return sum(min(b + self.h / 2, self.domain.R) - max(a - self.h / 2, lo)
                   for a, b in self.components)

    def intersects(self, intervals) -> bool:
        return any(a < hi and b > lo for a, b in self.components for lo, hi in intervals)

    def within(self, intervals) -> bool:
        return all(any(lo < a and b < hi for lo, hi in intervals) for a, b in self.components)


def region_intervals(ball: BallSpec, domain: Domain) -> list[tuple[float, float]]:
    """Open intervals, in the touchdown-set coordinate, covered by ``ball``."""
    c, rad = ball.center, ball.radius
    if domain.is_radial:
        return [(max(c - rad, 0.0) if ball.annulus else -rad, c + rad if ball.annulus else rad)]
    if ball.annulus:
        return [(-c - rad, -c + rad), (c - rad, c + rad)]
    return [(c - rad, c + rad)]


def _merge(nodes: np.ndarray, flags: np.ndarray) -> list[tuple[int, int]]:
    runs, start = [], None
    for i, on in enumerate(flags):
        if on and start is None:
            start = i
        elif not on and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def flagged_nodes(traj: Trajectory, kappa: float = KAPPA_TD) -> np.ndarray:
    p = traj.config.p
    gap = 1.0 - traj.u_end
    return gap ** (p + 1) <= kappa * gap.min() ** (p + 1)


def detect_touchdown_set(traj: Trajectory, T_est: float | None = None, kappa: float = KAPPA_TD,
                         gamma: float | None = None) -> TouchdownSet:
    """Nodes sharing the extremal quench rate, minus pointwise-certified nodes.

    A node is flagged when (1-u)^(p+1) <= kappa (1 - max u)^(p+1) at the
    final state.  A component is dropped when every node in it satisfies
    f(x) < (gamma delta(x))^(p+1) / (p+1) with the empirical type-I gamma.
    """
    if not traj.quenched:
        raise NoQuenchError("trajectory did not reach the quench stop")
    grid = traj.grid
    if T_est is None:
        T_est = estimate_touchdown_time(traj).T_est
    if gamma is None:
        gamma = empirical_type_I_gamma(traj, T_est)
    p = traj.config.p
    flags = flagged_nodes(traj, kappa)
    delta = boundary_distance(grid.domain, grid.nodes)
    certified = traj.profile.values < (gamma * delta) ** (p + 1) / (p + 1)
    comps = []
    for i, j in _merge(grid.nodes, flags):
        if certified[i:j + 1].all():
            continue
        comps.append((grid.nodes[i], grid.nodes[j]))
    return TouchdownSet(tuple(comps), grid.domain, grid.h, kappa)


# ---------------------------------------------------------------- type I

def _before(traj: Trajectory, T_est: float):
    keep = traj.snap_t < T_est
    return traj.snap_t[keep], traj.snap_u[keep]


def empirical_type_I_gamma(traj: Trajectory, T_est: float, delta=None) -> float:
    """min of (1 - u) / (delta(x) (T - t)^(1/(p+1))) over snapshots and interior nodes.

    ``delta`` overrides the boundary distance (a constant is allowed); it
    exists so the estimator can be checked on pure ODE data.
    """
    if not traj.quenched:
        raise NoQuenchError("trajectory did not reach the quench stop")
    p = traj.config.p
    grid = traj.grid
    ts, us = _before(traj, T_est)
    if delta is None:
        delta = boundary_distance(grid.domain, grid.nodes)
    else:
        delta = np.where(grid.interior, np.broadcast_to(np.asarray(delta, dtype=float), (grid.size,)), 0.0)
    inner = delta > 0
    ratio = (1.0 - us[:, inner]) / (delta[inner] * (T_est - ts)[:, None] ** (1.0 / (p + 1)))
    return float(ratio.min())


def rate_exponent_fit(traj: Trajectory, T_est: float) -> float:
    """Slope of log(1 - max u) against log(T_est - t) over the final fit window."""
    if not traj.quenched:
        raise NoQuenchError("trajectory did not reach the quench stop")
    N = traj.config.fit_window
    t, mu = traj.step_t[-N:], traj.step_max_u[-N:]
    keep = t < T_est
    if keep.sum() < 3:
        raise FitError("degenerate fit window")
    x = np.log(T_est - t[keep])
    y = np.log(1.0 - mu[keep])
    if np.ptp(x) == 0:
        raise FitError("degenerate fit window")
    return float(np.polyfit(x, y, 1)[0])


def final_profile_constant(traj: Trajectory, extra: float = 0.1, r_max_frac: float = 0.2) -> float:
    """Largest c with 1 - u(t_end, r) >= c r^(2/(p+1) + extra) for r in [2h, r_max_frac R].

    Meaningful for touchdown at the origin; radius is |x|.
    """
    grid = traj.grid
    r = grid.radius
    keep = (r >= 2 * grid.h * (1 - 1e-12)) & (r <= r_max_frac * grid.domain.R)
    if not keep.any():
        raise ValidationError("grid too coarse for the final-profile window")
    expo = 2.0 / (traj.config.p + 1) + extra
    return float(np.min((1.0 - traj.u_end[keep]) / r[keep] ** expo))


# --------------------------------------------------------- harmonic barrier

def harmonic_barrier(grid: Grid, ball: BallSpec, p: float) -> np.ndarray:
    """a = phi^(p+1) where phi is harmonic off the ball, 0 on the boundary, 1 on the ball."""
    dom = grid.domain
    R = dom.R
    if ball.annulus:
        raise GeometryError("barrier needs a ball")
    if dom.is_radial:
        if ball.center != 0:
            raise UnsupportedDimensionError("radial barrier needs a ball centred at 0")
        rb = ball.radius
        if not 0 < rb < R:
            raise GeometryError("ball must lie strictly inside the domain")
        r = grid.nodes
        n = dom.n
        if n == 1:
            G = lambda s: s  # noqa: E731
        elif n == 2:
            G = np.log
        else:
            G = lambda s: s ** (2.0 - n)  # noqa: E731
        outside = r > rb
        phi = np.ones(grid.size)
        phi[outside] = (G(r[outside]) - G(R)) / (G(rb) - G(R))
    else:
        lo, hi = ball.center - ball.radius, ball.center + ball.radius
        if not (-R < lo and hi < R):
            raise GeometryError("ball must lie strictly inside the domain")
        x = grid.nodes
        phi = np.ones(grid.size)
        left, right = x < lo, x > hi
        phi[left] = (x[left] + R) / (lo + R)
        phi[right] = (R - x[right]) / (R - hi)
    phi = np.clip(phi, 0.0, 1.0)
    phi[grid.boundary_mask] = 0.0
    return phi ** (p + 1)


# -------------------------------------------------------------- J monitor

def time_derivative(traj: Trajectory, u: np.ndarray) -> np.ndarray:
    """u_t from the right-hand side of the equation."""
    f = traj.profile.values
    return laplacian_apply(traj.grid, u) + f * (1.0 - u) ** (-traj.config.p)


def monitor_J(traj: Trajectory, a: np.ndarray, eps: float, t0: float = 0.0):
    """min of J = u_t - eps a (1 + (1-u)^-p) over snapshots t >= t0 and interior nodes.

    Returns (min J, (t, x)) at the minimiser.
    """
    p = traj.config.p
    inner = traj.grid.interior
    best, where = math.inf, (math.nan, math.nan)
    for t, u in traj.snapshots():
        if t < t0:
            continue
        ut = time_derivative(traj, u)
        J = ut - eps * a * ((1.0 - u) ** (-p) + 1.0)
        J = J[inner]
        i = int(np.argmin(J))
        if J[i] < best:
            best, where = float(J[i]), (float(t), float(traj.grid.nodes[inner][i]))
    if not math.isfinite(best):
        raise ValidationError("no snapshot at or after t0")
    return best, where


def J_start_time(p: float, fmax: float) -> float:
    return 1.0 / (2.0 * (p + 1) * fmax)


def search_J_epsilon(traj: Trajectory, a: np.ndarray, t0: float, start: float = 1.0,
                     factor: float = 2.0, max_steps: int = 40, tol: float = 1e-6):
    """Largest eps in the ladder start, start/factor, ... with min J >= -tol.

    Returns (eps, min J) or (None, last min J) when the ladder is exhausted.
    """
    eps = start
    minJ = math.nan
    for _ in range(max_steps):
        minJ, _ = monitor_J(traj, a, eps, t0)
        if minJ >= -tol:
            return eps, minJ
        eps /= factor
    return None, minJ


# ------------------------------------------------------------ certificates

@dataclass(frozen=True)
class Certificate:
    kind: str
    holds: bool
    margin: float
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Region:
    """Certificate region D.

    kind "ball": D = {|x - center| <= radius} (center 0 on radial grids);
    kind "collar": D = {|x| >= radius}, the complement of omega = {|x| < radius};
    kind "half_interval": D = (radius, R) on the interval, Gamma = {radius}.
    """
    kind: str
    radius: float
    center: float = 0.0

    def validate(self, domain: Domain) -> None:
        R = domain.R
        if self.kind == "ball":
            if domain.is_radial and self.center != 0:
                raise GeometryError("radial ball regions must be centred at 0")
            if not (self.radius > 0 and abs(self.center) + self.radius < R):
                raise GeometryError("ball region must lie inside the domain")
        elif self.kind == "collar":
            if not 0 < self.radius < R:
                raise GeometryError("collar needs 0 < radius < R")
        elif self.kind == "half_interval":
            if domain.is_radial or not -R < self.radius < R:
                raise GeometryError("half_interval needs an interval domain and -R < a < R")
        else:
            raise GeometryError(f"unknown region kind {self.kind!r}")

    def node_mask(self, grid: Grid) -> np.ndarray:
        x = grid.nodes
        tol = 1e-12 * grid.domain.R
        if self.kind == "ball":
            return np.abs(x - self.center) <= self.radius + tol
        if self.kind == "collar":
            return np.abs(x) >= self.radius - tol
        return x >= self.radius - tol

    def gamma_points(self, domain: Domain) -> list[float]:
        if self.kind == "ball":
            if domain.is_radial:
                return [self.radius]
            return [self.center - self.radius, self.center + self.radius]
        if self.kind == "collar":
            return [self.radius] if domain.is_radial else [-self.radius, self.radius]
        return [self.radius]

    @property
    def certificate_kind(self) -> str:
        return "no_touchdown_ball" if self.kind == "ball" else "no_touchdown_boundary_collar"


def smallness_slack(sup_f: float, k: float, p: float) -> float:
    """k^(p+1)/(p+1) - sup_D f; the certificate needs this strictly positive."""
    return k ** (p + 1) / (p + 1) - sup_f


def no_touchdown_certificate(traj: Trajectory, T_est: float, region: Region, k: float,
                             f: Profile | None = None, residual: float = 0.0) -> Certificate:
    """Separated-variables supersolution test on region D.

    Holds when sup_D f < k^(p+1)/(p+1) and u <= 1 - k (T - t)^(1/(p+1)) at
    the points of Gamma for every snapshot before T.  The margin is the
    smaller slack minus 3x the touchdown-time fit residual.
    """
    if not k > 0:
        raise InvalidParameterError("k must be > 0")
    grid = traj.grid
    region.validate(grid.domain)
    f = traj.profile if f is None else f
    p = traj.config.p
    mask = region.node_mask(grid)
    sup_f = float(f.values[mask].max())
    slack_f = smallness_slack(sup_f, k, p)
    ts, us = _before(traj, T_est)
    pts = region.gamma_points(grid.domain)
    u_gamma = np.array([[np.interp(x, grid.nodes, u) for x in pts] for u in us])
    barrier = 1.0 - k * (T_est - ts)[:, None] ** (1.0 / (p + 1))
    slack_b = float(np.min(barrier - u_gamma))
    margin = min(slack_f, slack_b) - RESIDUAL_FACTOR * residual
    # strict inequality in the smallness condition, with a rounding guard
    holds = margin > 1e-12 * max(1.0, sup_f)
    params = {"k": k, "sup_f": sup_f, "smallness_slack": slack_f, "boundary_slack": slack_b,
              "region": region.kind, "radius": region.radius, "center": region.center}
    return Certificate(region.certificate_kind, bool(holds), float(margin), params)


def gamma_certificate(traj: Trajectory, T_est: float, region: Region, gamma: float,
                      residual: float = 0.0) -> Certificate:
    """Certificate with k = gamma * min over Gamma of delta."""
    delta = boundary_distance(traj.grid.domain, np.array(region.gamma_points(traj.grid.domain)))
    k = gamma * float(np.min(delta))
    return no_touchdown_certificate(traj, T_est, region, k, residual=residual)


# ------------------------------------------------------------------ report

@dataclass
class QuenchReport:
    terminated: str
    t_end: float
    T_lower: float
    T_est: float | None = None
    T_upper: float | None = None
    fit_slope: float | None = None
    fit_residual: float | None = None
    rate_exponent: float | None = None
    gamma_emp: float | None = None
    touchdown_set: TouchdownSet | None = None
    certificates: list = field(default_factory=list)
    mu0: float | None = None

    def to_dict(self) -> dict:
        td = None
        if self.touchdown_set is not None:
            td = [list(c) for c in self.touchdown_set.components]
        return {
            "terminated": self.terminated,
            "t_end": self.t_end,
            "T_lower": self.T_lower,
            "T_upper": self.T_upper,
            "T_est": self.T_est,
            "fit_slope": self.fit_slope,
            "fit_residual": self.fit_residual,
            "rate_exponent": self.rate_exponent,
            "gamma_emp": self.gamma_emp,
            "mu0": self.mu0,
            "touchdown_set": td,
            "certificates": [
                {"kind": c.kind, "holds": c.holds, "margin": c.margin, "params": c.params}
                for c in self.certificates
            ],
        }


def analyze(traj: Trajectory, floor_ball: BallSpec | None = None, floor_mu: float | None = None,
            regions: list[Region] = (), monitor_j: bool = False) -> QuenchReport:
    """Bounds, fit, touchdown set and certificates for one trajectory."""
    p = traj.config.p
    f = traj.profile
    n = traj.grid.domain.n
    report = QuenchReport(traj.terminated, traj.t_end, lower_bound_T(p, f), mu0=mu0(p, n))
    if floor_ball is not None:
        mu = floor_mu if floor_mu is not None else float(f.values[floor_ball.contains(f.grid.nodes)].min())
        check = profile_floor_check(f, floor_ball, mu, p)
        if check.holds:
            report.T_upper = upper_bound_T(p, n, mu, floor_ball.radius)
    if not traj.quenched:
        return report
    fit = estimate_touchdown_time(traj)
    report.T_est, report.fit_slope, report.fit_residual = fit.T_est, fit.fit_slope, fit.fit_residual
    report.gamma_emp = empirical_type_I_gamma(traj, fit.T_est)
    report.rate_exponent = rate_exponent_fit(traj, fit.T_est)
    report.touchdown_set = detect_touchdown_set(traj, fit.T_est, gamma=report.gamma_emp)
    report.certificates.append(Certificate("type_I", report.gamma_emp > 0, report.gamma_emp,
                                           {"gamma": report.gamma_emp}))
    for region in regions:
        report.certificates.append(
            gamma_certificate(traj, fit.T_est, region, report.gamma_emp, fit.fit_residual))
    if monitor_j and floor_ball is not None:
        a = harmonic_barrier(traj.grid, floor_ball, p)
        t0 = J_start_time(p, f.sup)
        eps, minJ = search_J_epsilon(traj, a, t0)
        report.certificates.append(Certificate("J_monitor", eps is not None,
                                               eps if eps is not None else -1.0,
                                               {"eps": eps, "min_J": minJ, "t0": t0}))
    return report

