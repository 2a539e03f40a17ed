"""Built-in invariant suite run by ``touchdown verify``.

Each check is small, deterministic and independent; the whole suite runs
in well under two minutes on one core.
"""
from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import RunConfig, dump_config, from_dict, load_config
from .experiments import hausdorff_semidistance, perturbation_sweep
from .grid import build_grid, interval, laplacian_apply, radial_ball
from .profiles import (
    BallSpec,
    constant,
    lambda1,
    lq_norm,
    make_convex_lambda,
    make_m_shaped,
    make_two_bump,
    mu0,
    profile_floor_check,
)
from .report import dumps_report, dumps_snapshots, write_snapshots
from .solver import SolverConfig, ode_quench_oracle, solve

_CHECKS = []


def check(fn):
    _CHECKS.append(fn)
    return fn


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


# ---------------------------------------------------------------- domain_grid

@check
def laplacian_exact_on_quadratics():
    worst = 0.0
    g = build_grid(interval(1.0), 64)
    worst = max(worst, np.abs(laplacian_apply(g, 1 - g.nodes**2)[g.interior] + 2).max())
    for n in (1, 2, 3):
        g = build_grid(radial_ball(1.0, n), 64)
        worst = max(worst, np.abs(laplacian_apply(g, 1 - g.nodes**2)[g.interior] + 2 * n).max())
    return worst < 1e-9, f"max stencil error {worst:.3g}"


@check
def interval_grid_symmetric():
    g = build_grid(interval(1.0), 101)
    return bool(np.all(g.nodes == -g.nodes[::-1])), "nodes are exactly antisymmetric"


# ------------------------------------------------------------------- profiles

@check
def mu0_matches_scan():
    s = np.linspace(0.0, 1.0, 200001)
    worst = 0.0
    for p in (0.5, 1.0, 2.0, 3.0):
        for n in (1, 2, 3):
            scan = float(np.max(s * (1 - s) ** p)) * lambda1(n)
            worst = max(worst, abs(scan - mu0(p, n)) / mu0(p, n))
    return worst < 1e-8, f"max relative error {worst:.3g}"


@check
def profile_shapes():
    g = build_grid(radial_ball(1.0, 1), 400)
    r = g.nodes
    m = make_m_shaped(g, 0.01, 30.0, 0.28).values
    inner, outer = r <= 0.28, r >= 0.28
    ok_m = np.all(np.diff(m[inner]) >= -1e-12) and np.all(np.diff(m[outer]) <= 1e-12)
    tb = make_two_bump(g, 0.5, 0.2, 40.0, 0.05).values
    ok_tb = np.allclose(tb[np.abs(r - 0.5) <= 0.1], 40.0) and np.allclose(tb[np.abs(r - 0.5) >= 0.2], 0.05)
    cv = make_convex_lambda(g, 10.0, 0.5).values
    ok_cv = np.all(np.diff(cv) >= 0) and np.all(np.diff(cv, 2) >= -1e-12)
    ok = bool(ok_m and ok_tb and ok_cv)
    return ok, f"m_shaped={bool(ok_m)} two_bump={bool(ok_tb)} convex={bool(ok_cv)}"


@check
def lq_norm_triangle_and_homogeneity():
    g = build_grid(radial_ball(1.0, 2), 200)
    rng = np.random.default_rng(0)
    worst = 0.0
    for q in (1.0, 2.0, 3.5, math.inf):
        a, b = rng.normal(size=(2, g.size))
        worst = max(worst, lq_norm(g, a + b, q) - lq_norm(g, a, q) - lq_norm(g, b, q))
        worst = max(worst, abs(lq_norm(g, 3 * a, q) - 3 * lq_norm(g, a, q)))
    return worst < 1e-10, f"worst violation {worst:.3g}"


# --------------------------------------------------------------------- solver

@check
def ode_oracle_without_diffusion():
    worst = 0.0
    for p in (0.5, 1.0, 2.0):
        g = build_grid(interval(1.0), 20)
        traj = solve(g, constant(g, 5.0), SolverConfig(p=p, eps_stop=1e-3, diffusion=False))
        keep = 1 - traj.step_max_u >= 1e-3
        y = ode_quench_oracle(p, 5.0, traj.step_t[keep])
        worst = max(worst, np.abs(traj.step_max_u[keep] - y).max())
    return worst < 1e-4, f"max deviation {worst:.3g}"


@check
def monotone_in_time_and_bounded():
    g = build_grid(interval(1.0), 400)
    traj = solve(g, make_m_shaped(g, 0.01, 30.0, 0.28), SolverConfig(p=2.0, snapshot_stride=1))
    du = np.diff(traj.snap_u, axis=0).min()
    ok = du >= -1e-12 and traj.snap_u.min() >= 0 and traj.snap_u.max() < 1
    ok = ok and np.all(np.diff(traj.step_max_u) > 0)
    return bool(ok), f"min snapshot increment {du:.3g}"


@check
def grid_convergence_of_T():
    Ts = []
    for m in (200, 400, 800):
        g = build_grid(interval(1.0), m)
        traj = solve(g, constant(g, 2.0), SolverConfig(p=2.0))
        Ts.append(an.estimate_touchdown_time(traj).T_est)
    d1, d2 = abs(Ts[1] - Ts[0]), abs(Ts[2] - Ts[1])
    ratio = d1 / d2 if d2 > 0 else math.inf
    return ratio >= 2, f"successive differences {d1:.3g}, {d2:.3g} (ratio {ratio:.3g})"


@check
def comparison_of_ordered_profiles():
    g = build_grid(interval(1.0), 200)
    lo, hi = make_m_shaped(g, 1.0, 20.0, 0.5), make_m_shaped(g, 1.5, 24.0, 0.5)
    tf = solve(g, lo, SolverConfig(p=2.0))
    tg = solve(g, hi, SolverConfig(p=2.0))
    shared = tf.step_t[tf.step_t <= tg.step_t[-1]]
    gap = np.interp(shared, tf.step_t, tf.step_max_u) - np.interp(shared, tg.step_t, tg.step_max_u)
    return bool(gap.max() <= 1e-6), f"max(U_f - U_g) at shared times {gap.max():.3g}"


# ------------------------------------------------------------------- analysis

@check
def sandwich_constant_profile():
    g = build_grid(interval(1.0), 800)
    traj = solve(g, constant(g, 10.0), SolverConfig(p=2.0))
    rep = an.analyze(traj, floor_ball=BallSpec(0.0, 0.9), floor_mu=10.0)
    ok = rep.T_lower <= rep.T_est <= rep.T_upper * 1.02 and rep.touchdown_set.contains(0.0)
    return bool(ok), f"{rep.T_lower:.7g} <= {rep.T_est:.7g} <= {rep.T_upper:.7g}"


@check
def type_I_rate_and_constant():
    g = build_grid(interval(1.0), 400)
    traj = solve(g, constant(g, 10.0), SolverConfig(p=2.0))
    T = an.estimate_touchdown_time(traj).T_est
    slope, gamma = an.rate_exponent_fit(traj, T), an.empirical_type_I_gamma(traj, T)
    return abs(slope - 1 / 3) <= 0.05 and gamma > 0, f"slope {slope:.4f}, gamma_emp {gamma:.4g}"


@check
def certificates_consistent():
    g = build_grid(radial_ball(1.0, 1), 400)
    traj = solve(g, make_two_bump(g, 0.5, 0.2, 40.0, 0.05), SolverConfig(p=2.0))
    regions = [an.Region("ball", 0.3), an.Region("collar", 0.8)]
    rep = an.analyze(traj, regions=regions)
    certs = [c for c in rep.certificates if c.kind != "type_I"]
    ok = all(c.holds == (c.margin > 0) for c in certs) and all(c.holds for c in certs)
    ok = ok and rep.touchdown_set.within([(0.3, 0.7)])
    return bool(ok), ", ".join(f"{c.kind} margin {c.margin:.3g}" for c in certs)


@check
def floor_check_threshold():
    g = build_grid(interval(1.0), 100)
    f = constant(g, 10.0)
    thr = mu0(2.0, 1) / 0.81
    above = profile_floor_check(f, BallSpec(0.0, 0.9), thr * 1.001, 2.0).holds
    below = profile_floor_check(constant(g, thr * 0.999), BallSpec(0.0, 0.9), thr * 0.999, 2.0).holds
    return bool(above and not below), f"threshold mu0/r^2 = {thr:.7g}"


# ---------------------------------------------------------------- experiments

@check
def hausdorff_exact_cases():
    cases = [
        ([(0.0, 0.0)], [(1.0, 1.0)], 1.0),
        ([(0.0, 1.0)], [(0.0, 0.2), (0.8, 1.0)], 0.3),
        ([(0.1, 0.2)], [(0.0, 1.0)], 0.0),
        ([(-1.0, 2.0)], [(0.0, 1.0)], 1.0),
    ]
    worst = max(abs(hausdorff_semidistance(a, b) - d) for a, b, d in cases)
    return worst < 1e-15, f"max error {worst:.3g}"


@check
def sweep_weak_decrease():
    g = build_grid(radial_ball(0.5, 1), 400)
    res = perturbation_sweep(make_convex_lambda(g, 10.0, 0.1), SolverConfig(p=2.0), 2.0,
                             [0.8, 0.4, 0.2, 0.1, 0.05])
    good, pairs = res.weak_decrease_count()
    small = res.rows[0]
    ok = pairs == 4 and good >= 3 and small.dT < 0.02 * res.T_f and small.d_set < 0.05 * 0.5
    return bool(ok), f"weak decrease {good}/{pairs}, smallest dT/T={small.dT / res.T_f:.3g}"


# --------------------------------------------------------------------- cli_io

@check
def config_round_trip():
    cfg = from_dict({"domain": {"kind": "radial_ball", "R": 0.5, "n": 2, "m": 50},
                     "profile": {"family": "convex_lambda", "params": {"mu": 10.0, "lambda": 0.1}},
                     "solver": {"p": 1.5, "t_max": 0.01},
                     "analysis": {"regions": [{"kind": "collar", "radius": 0.4}]},
                     "experiment": {"kind": "sweep", "q": "inf", "sizes": [0.1, 0.2]}})
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "cfg.json"
        path.write_text(dump_config(cfg), encoding="utf-8")
        back = load_config(path)
    return back == cfg, "load(dump(cfg)) == cfg"


@check
def outputs_byte_deterministic():
    g = build_grid(interval(1.0), 60)
    runs = []
    for _ in range(2):
        traj = solve(g, constant(g, 10.0), SolverConfig(p=2.0))
        rep = an.analyze(traj, floor_ball=BallSpec(0.0, 0.9))
        runs.append((dumps_report(rep), dumps_snapshots(traj.snap_t, g.nodes, traj.snap_u)))
    with tempfile.TemporaryDirectory() as d:
        path = Path(d) / "s.csv"
        write_snapshots(traj, path)
        n_rows = len(path.read_bytes().split(b"\n")) - 2
    ok = runs[0] == runs[1] and n_rows == len(traj.snap_t) * g.size
    return ok, f"identical outputs, {n_rows} CSV rows"


def run_all(stream=None) -> list[CheckResult]:
    results = []
    for fn in _CHECKS:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(fn.__name__, bool(ok), detail, time.perf_counter() - t0)
        results.append(res)
        if stream is not None:
            print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail} ({res.seconds:.2f} s)",
                  file=stream, flush=True)
    return results
