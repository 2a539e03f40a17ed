"""Spatial domains, uniform grids and the discrete Laplacian.

Two geometries are supported: the interval (-R, R) and the ball B_R in
dimension n reduced to the radial coordinate r in [0, R].  In the radial
case the symmetry condition u_r(0) = 0 is built into the stencil at r = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ResolutionError, ShapeError, ValidationError

INTERVAL = "interval"
RADIAL = "radial_ball"


@dataclass(frozen=True)
class Domain:
    kind: str
    R: float
    n: int = 1

    def __post_init__(self):
        if self.kind not in (INTERVAL, RADIAL):
            raise ValidationError(f"unknown domain kind {self.kind!r}")
        if not (np.isfinite(self.R) and self.R > 0):
            raise ValidationError("R must be > 0")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError("n must be an integer >= 1")
        if self.kind == INTERVAL and self.n != 1:
            raise ValidationError("interval domains have n = 1")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "n", int(self.n))

    @property
    def is_radial(self) -> bool:
        return self.kind == RADIAL

    @property
    def lo(self) -> float:
        return 0.0 if self.is_radial else -self.R

    @property
    def extent(self) -> float:
        return self.R if self.is_radial else 2.0 * self.R


def interval(R: float = 1.0) -> Domain:
    return Domain(INTERVAL, R, 1)


def radial_ball(R: float = 1.0, n: int = 1) -> Domain:
    return Domain(RADIAL, R, n)


@dataclass(frozen=True, eq=False)
class Grid:
    domain: Domain
    m: int
    nodes: np.ndarray = field(repr=False)
    h: float

    @property
    def size(self) -> int:
        return self.m + 1

    @property
    def radius(self) -> np.ndarray:
        """|x| at every node (the radial coordinate for both geometries)."""
        return np.abs(self.nodes)

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.size, dtype=bool)
        mask[-1] = True
        if not self.domain.is_radial:
            mask[0] = True
        return mask

    @property
    def interior(self) -> np.ndarray:
        return ~self.boundary_mask

    def same_as(self, other: "Grid") -> bool:
        return self is other or (self.domain == other.domain and self.m == other.m)


def build_grid(domain: Domain, m: int) -> Grid:
    """Uniform grid with ``m`` cells whose end nodes sit exactly on the boundary."""
    if int(m) != m or m < 2:
        raise ResolutionError(f"need at least 2 cells, got m={m}")
    m = int(m)
    lo, R = domain.lo, domain.R
    h = domain.extent / m
    nodes = lo + h * np.arange(m + 1)
    if domain.is_radial:
        nodes[-1] = R
    else:
        # exact antisymmetry keeps symmetric profiles symmetric to the last bit
        nodes = 0.5 * (nodes - nodes[::-1])
        nodes[0], nodes[-1] = -R, R
    nodes.setflags(write=False)
    return Grid(domain, m, nodes, h)


def boundary_distance(domain: Domain, x):
    """delta(x) = R - |x|, vectorised; raises if a point lies outside the domain."""
    x = np.asarray(x, dtype=float)
    tol = 1e-12 * domain.R
    if domain.is_radial and np.any(x < -tol):
        raise DomainError("radial coordinate must be >= 0")
    d = domain.R - np.abs(x)
    if np.any(d < -tol):
        raise DomainError("point outside the domain")
    d = np.maximum(d, 0.0)
    return float(d) if d.ndim == 0 else d


def laplacian_bands(grid: Grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sub-, main- and super-diagonal of the discrete Laplacian over all nodes.

    Boundary rows are zero.  ``lower[i]`` couples node i to i-1 and
    ``upper[i]`` couples node i to i+1.
    """
    N, h = grid.size, grid.h
    inv = 1.0 / h**2
    lower = np.zeros(N)
    main = np.zeros(N)
    upper = np.zeros(N)
    idx = np.arange(1, N - 1)
    if grid.domain.is_radial:
        n = grid.domain.n
        main[0] = -2.0 * n * inv
        upper[0] = 2.0 * n * inv
        # r_i = i h, so (n-1)/r_i * 1/(2h) = (n-1)/(2 i h^2)
        c = (n - 1) / (2.0 * idx) * inv
        lower[idx] = inv - c
        upper[idx] = inv + c
    else:
        lower[idx] = inv
        upper[idx] = inv
    main[idx] = -2.0 * inv
    return lower, main, upper


def laplacian_apply(grid: Grid, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.size,):
        raise ShapeError(f"expected {grid.size} node values, got shape {u.shape}")
    lower, main, upper = laplacian_bands(grid)
    out = main * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    out[grid.boundary_mask] = 0.0
    return out
