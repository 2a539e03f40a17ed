"""Multi-run studies: perturbation stability of T and of the touchdown set,
and the critical-height bisection on the two-bump family f_h."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import QuenchReport, TouchdownSet, analyze, detect_touchdown_set, region_intervals
from .errors import GeometryError, TouchdownError, ValidationError
from .grid import Grid, build_grid
from .profiles import BallSpec, Profile, TwoAnnulusGeometry, lq_distance, lq_norm, make_two_annulus_family, mu0, profile_floor_check, smoothstep
from .solver import SolverConfig, solve


def hausdorff_semidistance(A: TouchdownSet, B: TouchdownSet) -> float:
    """sup over x in A of dist(x, B), exact for finite unions of closed intervals.

    dist(., B) is piecewise linear, so its maximum over a component of A is
    attained at an endpoint or at the midpoint of a gap of B.
    """
    a_comps = A.components if isinstance(A, TouchdownSet) else tuple(A)
    b_comps = B.components if isinstance(B, TouchdownSet) else tuple(B)
    if not a_comps or not b_comps:
        raise ValidationError("Hausdorff semi-distance needs nonempty sets")
    b_comps = sorted(b_comps)
    gaps = [(b0 + a1) / 2 for (_, b0), (a1, _) in zip(b_comps, b_comps[1:])]

    def dist(x):
        return min(max(lo - x, 0.0, x - hi) for lo, hi in b_comps)

    best = 0.0
    for lo, hi in a_comps:
        cands = [lo, hi] + [g for g in gaps if lo <= g <= hi]
        best = max(best, max(dist(x) for x in cands))
    return best


# ------------------------------------------------------------------- sweep

def cosine_bump(grid: Grid, q: float, center_frac: float = 0.5, width_frac: float = 0.25) -> np.ndarray:
    """Radial cosine bump centred at |x| = center_frac R, support width width_frac R, unit L^q norm."""
    R = grid.domain.R
    half = 0.5 * width_frac * R
    s = np.abs(grid.radius - center_frac * R) / half
    bump = np.where(s < 1, 1.0 - smoothstep(s), 0.0)
    return bump / lq_norm(grid, bump, q)


@dataclass
class SweepRow:
    size: float
    lq_dist: float
    dT: float | None
    d_set: float | None
    status: str
    report: QuenchReport | None = None


@dataclass
class SweepResult:
    q: float
    T_f: float
    base_set: TouchdownSet
    rows: list[SweepRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "T_f": self.T_f,
            "base_touchdown_set": [list(c) for c in self.base_set.components],
            "rows": [
                {"size": r.size, "lq_dist": r.lq_dist, "dT": r.dT, "d_set": r.d_set, "status": r.status,
                 "touchdown_set": None if r.report is None or r.report.touchdown_set is None
                 else [list(c) for c in r.report.touchdown_set.components]}
                for r in self.rows
            ],
        }

    def weak_decrease_count(self) -> tuple[int, int]:
        """(#consecutive pairs where |T_g - T_f| does not grow as size shrinks, #pairs)."""
        ok = [r for r in sorted(self.rows, key=lambda r: r.size, reverse=True) if r.status == "ok"]
        pairs = list(zip(ok, ok[1:]))
        good = sum(1 for big, small in pairs if small.dT <= big.dT)
        return good, len(pairs)


def _run(args):
    grid, profile, config, t_max = args
    try:
        traj = solve(grid, profile, config, t_max)
        return analyze(traj), None
    except TouchdownError as exc:
        return None, str(exc)


def _map(fn, items, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def perturbation_sweep(f: Profile, config: SolverConfig, q: float, sizes, bump: np.ndarray | None = None,
                       floor_ball: BallSpec | None = None, floor_mu: float | None = None,
                       t_max: float = math.inf, workers: int = 1) -> SweepResult:
    """Run g = f + size * bump for each size and compare T and the touchdown set with f."""
    grid = f.grid
    if floor_ball is not None:
        mu = floor_mu if floor_mu is not None else float(f.values[floor_ball.contains(grid.nodes)].min())
        if not profile_floor_check(f, floor_ball, mu, config.p).holds:
            raise ValidationError("base profile fails the floor condition f >= mu on B, mu > mu0/r^2")
    bump = cosine_bump(grid, q) if bump is None else np.asarray(bump, dtype=float)
    base, err = _run((grid, f, config, t_max))
    if base is None or base.T_est is None:
        raise ValidationError(f"base profile does not quench: {err or base.terminated}")
    sizes = sorted(set(float(s) for s in sizes), reverse=True)
    gs = [f.shifted(s * bump, "custom", base=f.family, size=s) for s in sizes]
    results = _map(_run, [(grid, g, config, t_max) for g in gs], workers)
    out = SweepResult(q, base.T_est, base.touchdown_set)
    for s, g, (rep, err) in zip(sizes, gs, results):
        dist = lq_distance(f, g, q)
        if rep is None or rep.T_est is None or not rep.touchdown_set:
            out.rows.append(SweepRow(s, dist, None, None, f"failed: {err or 'no touchdown'}", rep))
            continue
        d = hausdorff_semidistance(rep.touchdown_set, base.touchdown_set)
        out.rows.append(SweepRow(s, dist, abs(rep.T_est - base.T_est), d, "ok", rep))
    out.rows.sort(key=lambda r: r.size)
    return out


# --------------------------------------------------------------- bisection

@dataclass
class Probe:
    h: float
    hits_b1: bool
    hits_b2: bool
    touchdown_set: TouchdownSet
    T_est: float


@dataclass
class BisectionResult:
    h_star: float
    lo: Probe
    hi: Probe
    trace: list[Probe]
    confirmed: bool | None = None

    @property
    def bracket(self) -> float:
        return self.hi.h - self.lo.h

    @property
    def jump(self) -> float:
        """d(T at the upper end, T at the lower end)."""
        return hausdorff_semidistance(self.hi.touchdown_set, self.lo.touchdown_set)

    def to_dict(self) -> dict:
        def probe(p):
            return {"h": p.h, "hits_b1": p.hits_b1, "hits_b2": p.hits_b2, "T_est": p.T_est,
                    "touchdown_set": [list(c) for c in p.touchdown_set.components]}
        return {"h_star": self.h_star, "bracket": self.bracket, "jump": self.jump,
                "confirmed": self.confirmed, "lo": probe(self.lo), "hi": probe(self.hi),
                "trace": [probe(p) for p in self.trace]}


def probe_height(grid: Grid, geometry: TwoAnnulusGeometry, h: float, config: SolverConfig,
                 t_max: float = math.inf) -> Probe:
    f = make_two_annulus_family(grid, h, geometry)
    traj = solve(grid, f, config, t_max)
    rep = analyze(traj)
    if rep.touchdown_set is None or not rep.touchdown_set:
        raise GeometryError(f"no touchdown detected at h={h!r}")
    b1, b2 = geometry.bumps()
    td = rep.touchdown_set
    return Probe(h, td.intersects(region_intervals(b1, grid.domain)),
                 td.intersects(region_intervals(b2, grid.domain)), td, rep.T_est)


def bisect_critical_height(grid: Grid, geometry: TwoAnnulusGeometry, config: SolverConfig,
                           tol_h: float, confirm: bool = True, t_max: float = math.inf) -> BisectionResult:
    """Bisection for the height where the touchdown set first meets bump 1."""
    geometry.validate(grid)
    threshold = mu0(config.p, grid.domain.n) / geometry.r**2
    if not geometry.mu > threshold:
        raise GeometryError(f"plateau height mu must exceed mu0/r^2 = {threshold!r}")
    if not tol_h > 0:
        raise ValidationError("tol_h must be > 0")
    lo = probe_height(grid, geometry, geometry.eta, config, t_max)
    hi = probe_height(grid, geometry, 2 * geometry.mu, config, t_max)
    trace = [lo, hi]
    if lo.hits_b1 or not hi.hits_b1:
        raise GeometryError("touchdown does not switch bumps across [eta, 2 mu]")
    while hi.h - lo.h > tol_h:
        mid = probe_height(grid, geometry, 0.5 * (lo.h + hi.h), config, t_max)
        trace.append(mid)
        if mid.hits_b1:
            hi = mid
        else:
            lo = mid
    result = BisectionResult(0.5 * (lo.h + hi.h), lo, hi, trace)
    if confirm:
        fine = build_grid(grid.domain, 2 * grid.m)
        lo2 = probe_height(fine, geometry, lo.h, config, t_max)
        hi2 = probe_height(fine, geometry, hi.h, config, t_max)
        result.confirmed = (not lo2.hits_b1) and hi2.hits_b1
    return result
