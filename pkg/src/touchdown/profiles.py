"""Permittivity profiles f, the eigenvalue threshold mu0(p, n) and L^q distances.

All radial families are written in terms of |x|, so the same constructor
works on the interval (-R, R) (even profiles) and on the radial grid.
Transitions use the cosine smoothstep s -> (1 - cos(pi s)) / 2, which is
C^1, monotone and parameter free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import jn_zeros

from .errors import (
    GeometryError,
    InvalidParameterError,
    ShapeError,
    UnsupportedDimensionError,
    ValidationError,
)
from .grid import Grid

FAMILIES = ("constant", "m_shaped", "two_bump", "convex_lambda", "one_well",
            "two_annulus_h", "custom")

# surface measure of the unit sphere in R^n; n = 1 counts the two points +-1
SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


@dataclass(frozen=True, eq=False)
class Profile:
    grid: Grid
    values: np.ndarray = field(repr=False)
    family: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ShapeError(f"profile needs {self.grid.size} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidParameterError("profile values must be finite")
        if np.any(v < 0):
            raise InvalidParameterError("profile values must be >= 0")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown profile family {self.family!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def sup(self) -> float:
        return float(self.values.max())

    def shifted(self, delta, family: str = "custom", **params) -> "Profile":
        return Profile(self.grid, self.values + delta, family, params)


@dataclass(frozen=True)
class BallSpec:
    """Ball B(center, radius); ``annulus`` marks a radial shell |x| in (center -+ radius)."""
    center: float
    radius: float
    annulus: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("ball radius must be > 0")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.annulus:
            return np.abs(np.abs(x) - self.center) <= self.radius * (1 + 1e-12)
        return np.abs(x - self.center) <= self.radius * (1 + 1e-12)

    def check_inside(self, grid: Grid) -> None:
        R = grid.domain.R
        if grid.domain.is_radial:
            if self.annulus:
                ok = self.center - self.radius >= 0 and self.center + self.radius <= R
            else:
                ok = self.center == 0 and self.radius <= R
            if not ok:
                raise GeometryError("radial balls must be centred at 0 (or flagged as annuli) "
                                    "and lie inside the domain")
        elif self.annulus:
            if not (self.center - self.radius >= 0 and self.center + self.radius <= R):
                raise GeometryError("annulus leaves the domain")
        elif abs(self.center) + self.radius > R:
            raise GeometryError("ball leaves the domain")


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return 0.5 * (1.0 - np.cos(np.pi * s))


# ---------------------------------------------------------------- eigenvalues

def lambda1(n: int) -> float:
    """First Dirichlet eigenvalue of -Laplacian on the unit ball of R^n, n <= 3."""
    if n == 1:
        return (math.pi / 2) ** 2
    if n == 2:
        return float(jn_zeros(0, 1)[0]) ** 2
    if n == 3:
        return math.pi**2
    raise UnsupportedDimensionError(f"lambda1 is only available for n in {{1, 2, 3}}, got {n}")


def mu0(p: float, n: int) -> float:
    if not p > 0:
        raise InvalidParameterError("p must be > 0")
    return p**p / (p + 1) ** (p + 1) * lambda1(n)


# -------------------------------------------------------------- constructors

def constant(grid: Grid, c: float) -> Profile:
    if c < 0:
        raise InvalidParameterError("constant profile must be >= 0")
    return Profile(grid, np.full(grid.size, float(c)), "constant", {"c": float(c)})


def make_m_shaped(grid: Grid, f0: float, fL: float, L: float, smoothness: float | None = None,
                  f_outer: float | None = None) -> Profile:
    """Radial "M" profile: f0 near the centre, peak fL on |x| = L.

    The rise occupies [L - w, L] and the fall [L, L + w] (clipped to the
    domain), with w = ``smoothness`` (default 0.1 R).  Outside the ramps the
    profile is f0 inside and ``f_outer`` (default f0) outside.
    """
    R = grid.domain.R
    if not 0 < L < R:
        raise GeometryError("need 0 < L < R")
    w = 0.1 * R if smoothness is None else float(smoothness)
    f_outer = f0 if f_outer is None else float(f_outer)
    if not (0 <= f0 <= fL and 0 <= f_outer <= fL):
        raise InvalidParameterError("need 0 <= f0, f_outer <= fL")
    if not w > 0:
        raise InvalidParameterError("ramp width must be > 0")
    r = grid.radius
    a = max(L - w, 0.0)
    rise = f0 + (fL - f0) * smoothstep((r - a) / (L - a))
    fall = fL - (fL - f_outer) * smoothstep((r - L) / w)
    values = np.where(r <= L, rise, fall)
    params = {"f0": f0, "fL": fL, "L": L, "smoothness": w, "f_outer": f_outer}
    return Profile(grid, values, "m_shaped", params)


def _plateau(r, centre, inner, outer, top, base):
    """top on |r - centre| <= inner, base beyond outer, cosine ramp between."""
    s = (np.abs(r - centre) - inner) / (outer - inner)
    return top - (top - base) * smoothstep(s)


def make_two_bump(grid: Grid, r: float, eps: float, A: float, eta: float) -> Profile:
    R = grid.domain.R
    if not 0 < eps < min(r, R - r):
        raise GeometryError("need 0 < eps < min(r, R - r)")
    if not A > eta > 0:
        raise InvalidParameterError("need A > eta > 0")
    values = _plateau(grid.radius, r, eps / 2, eps, A, eta)
    return Profile(grid, values, "two_bump", {"r": r, "eps": eps, "A": A, "eta": eta})


def make_convex_lambda(grid: Grid, mu: float, lam: float) -> Profile:
    if not mu > 0:
        raise InvalidParameterError("mu must be > 0")
    if lam < 0:
        raise InvalidParameterError("lambda must be >= 0")
    R = grid.domain.R
    values = mu + lam * grid.radius**2 / R**2
    return Profile(grid, values, "convex_lambda", {"mu": mu, "lambda": lam})


def make_one_well(grid: Grid, base: Profile | float, depth_value: float, width: float) -> Profile:
    """A narrow well of half-width ``width`` around the origin cut into ``base``.

    Inside |x| <= width/2 the profile equals ``depth_value``; it returns to
    the base profile with a cosine ramp on [width/2, width].
    """
    if not 0 < width < grid.domain.R:
        raise GeometryError("need 0 < width < R")
    if depth_value < 0:
        raise InvalidParameterError("well value must be >= 0")
    b = np.full(grid.size, float(base)) if np.isscalar(base) else np.asarray(base.values)
    s = smoothstep((grid.radius - width / 2) / (width / 2))
    values = depth_value + (b - depth_value) * s
    return Profile(grid, values, "one_well", {"well": depth_value, "width": width})


@dataclass(frozen=True)
class TwoAnnulusGeometry:
    """Bump layout for the critical-height family.

    ``c1``/``c2`` are the bump centres.  With ``pairs`` the bumps are the
    symmetric pairs |x| ~ c1 and |x| ~ c2 (on the interval) or annuli (on a
    radial grid); otherwise c1, c2 are single points of the interval.
    Inner plateaus have radius ``r``, bumps radius 2r.
    """
    c1: float
    c2: float
    r: float
    mu: float
    eta: float
    pairs: bool = True

    def bumps(self) -> tuple[BallSpec, BallSpec]:
        return (BallSpec(self.c1, 2 * self.r, self.pairs), BallSpec(self.c2, 2 * self.r, self.pairs))

    def plateaus(self) -> tuple[BallSpec, BallSpec]:
        return (BallSpec(self.c1, self.r, self.pairs), BallSpec(self.c2, self.r, self.pairs))

    @property
    def separation(self) -> float:
        return abs(self.c2 - self.c1)

    def validate(self, grid: Grid) -> None:
        R, r = grid.domain.R, self.r
        if not r > 0:
            raise GeometryError("plateau radius must be > 0")
        if not (self.mu > 0 and 0 < self.eta < self.mu):
            raise InvalidParameterError("need 0 < eta < mu")
        if grid.domain.is_radial and not self.pairs:
            raise GeometryError("radial grids need the annulus (pairs) layout")
        gaps = [abs(self.c2 - self.c1) - 4 * r,
                R - abs(self.c1) - 2 * r,
                R - abs(self.c2) - 2 * r]
        if self.pairs:
            lo = min(self.c1, self.c2)
            if lo - 2 * r < 0:
                raise GeometryError("annuli must not contain the origin")
            if not grid.domain.is_radial:
                # the mirrored copies must be separated as well
                gaps.append(2 * (lo - 2 * r))
        if min(gaps) <= r:
            raise GeometryError("bumps must be separated from each other and from the "
                                "boundary by more than r")


def make_two_annulus_family(grid: Grid, h: float, geometry: TwoAnnulusGeometry) -> Profile:
    """f_h: plateau h on bump 1, 2 mu + eta - h on bump 2, eta elsewhere."""
    geometry.validate(grid)
    mu, eta, r = geometry.mu, geometry.eta, geometry.r
    if not (eta - 1e-12 <= h <= 2 * mu + 1e-12):
        raise InvalidParameterError(f"h must lie in [eta, 2 mu] = [{eta}, {2 * mu}]")
    x = grid.radius if geometry.pairs else grid.nodes
    heights = (h, 2 * mu + eta - h)
    values = np.full(grid.size, float(eta))
    for c, top in zip((geometry.c1, geometry.c2), heights):
        inside = np.abs(x - c) < 2 * r
        values[inside] = _plateau(x[inside], c, r, 2 * r, top, eta)
    params = {"h": h, "c1": geometry.c1, "c2": geometry.c2, "r": r, "mu": mu, "eta": eta,
              "pairs": float(geometry.pairs)}
    return Profile(grid, values, "two_annulus_h", params)


# ------------------------------------------------------------------ measures

def quadrature_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weights for integrals over the physical domain."""
    w = np.full(grid.size, grid.h)
    w[0] *= 0.5
    w[-1] *= 0.5
    if grid.domain.is_radial:
        n = grid.domain.n
        w = w * SPHERE_AREA[n] * grid.nodes ** (n - 1)
    return w


def lq_norm(grid: Grid, values, q: float) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    if q == math.inf:
        return float(v.max())
    if q < 1:
        raise InvalidParameterError("need q >= 1")
    return float(np.sum(quadrature_weights(grid) * v**q) ** (1.0 / q))


def lq_distance(f: Profile, g: Profile, q: float) -> float:
    if not f.grid.same_as(g.grid):
        raise ShapeError("profiles live on different grids")
    return lq_norm(f.grid, f.values - g.values, q)


@dataclass(frozen=True)
class FloorCheck:
    holds: bool
    margin: float


def profile_floor_check(f: Profile, ball: BallSpec, mu: float, p: float) -> FloorCheck:
    """Is f >= mu on the ball with mu above the eigenvalue threshold mu0 / r^2?"""
    ball.check_inside(f.grid)
    if ball.annulus:
        raise GeometryError("the floor condition needs a ball, not an annulus")
    margin = mu - mu0(p, f.grid.domain.n) / ball.radius**2
    inside = ball.contains(f.grid.nodes)
    holds = bool(inside.any() and f.values[inside].min() >= mu and margin > 0)
    return FloorCheck(holds, float(margin))
