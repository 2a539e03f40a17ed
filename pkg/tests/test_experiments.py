import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from touchdown.analysis import TouchdownSet
from touchdown.errors import GeometryError, ValidationError
from touchdown.experiments import bisect_critical_height, cosine_bump, hausdorff_semidistance, perturbation_sweep
from touchdown.grid import build_grid, interval, radial_ball
from touchdown.profiles import TwoAnnulusGeometry, constant, lq_norm, make_convex_lambda
from touchdown.solver import SolverConfig


def brute_semidistance(A, B, n=20001):
    """Dense-sampling oracle for sup_{a in A} dist(a, B)."""
    pts = np.concatenate([np.linspace(a, b, n) for a, b in A])
    lo = np.array([a for a, _ in B])
    hi = np.array([b for _, b in B])
    d = np.maximum(np.maximum(lo[None] - pts[:, None], pts[:, None] - hi[None]), 0).min(axis=1)
    return d.max()


def test_hausdorff_examples():
    assert hausdorff_semidistance([(0, 0)], [(0, 0)]) == 0
    assert hausdorff_semidistance([(0.5, 0.5)], [(0, 0.1)]) == pytest.approx(0.4)
    assert hausdorff_semidistance([(0, 0.1)], [(0.5, 0.5)]) == pytest.approx(0.5)
    assert hausdorff_semidistance([(0.3, 0.7)], [(0.5, 0.5)]) == pytest.approx(0.2)


def test_hausdorff_accepts_touchdown_sets():
    A = TouchdownSet(((0.3, 0.4),), interval(1.0))
    B = TouchdownSet(((-0.1, 0.1),), interval(1.0))
    assert hausdorff_semidistance(A, B) == pytest.approx(0.3)


def test_hausdorff_empty():
    with pytest.raises(ValidationError):
        hausdorff_semidistance([], [(0, 1)])


intervals = st.lists(st.tuples(st.floats(-1, 1), st.floats(0, 0.5)).map(lambda t: (t[0], t[0] + t[1])),
                     min_size=1, max_size=4)


def _disjoint(iv):
    out = []
    for a, b in sorted(iv):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(b, out[-1][1]))
        else:
            out.append((a, b))
    return out


@settings(max_examples=60, deadline=None)
@given(A=intervals, B=intervals)
def test_hausdorff_matches_dense_oracle(A, B):
    A, B = _disjoint(A), _disjoint(B)
    exact = hausdorff_semidistance(A, B)
    assert exact >= 0
    assert exact == pytest.approx(brute_semidistance(A, B), abs=2e-4)


@settings(max_examples=60, deadline=None)
@given(A=intervals, B=intervals, C=intervals)
def test_hausdorff_triangle(A, B, C):
    A, B, C = _disjoint(A), _disjoint(B), _disjoint(C)
    assert hausdorff_semidistance(A, C) <= hausdorff_semidistance(A, B) + hausdorff_semidistance(B, C) + 1e-12


def test_cosine_bump_unit_norm():
    g = build_grid(radial_ball(0.5, 2), 400)
    for q in (1.0, 2.0, np.inf):
        b = cosine_bump(g, q)
        assert lq_norm(g, b, q) == pytest.approx(1.0)
        assert b.min() >= 0


@pytest.fixture(scope="module")
def convex_grid():
    return build_grid(radial_ball(0.5, 1), 400)


def test_zero_perturbation_identical(convex_grid):
    res = perturbation_sweep(make_convex_lambda(convex_grid, 10.0, 0.5), SolverConfig(), 2.0, [0.0])
    row = res.rows[0]
    assert row.status == "ok" and row.dT == 0 and row.d_set == 0 and row.lq_dist == 0


def test_sweep_convex_lambda_half(convex_grid):
    res = perturbation_sweep(make_convex_lambda(convex_grid, 10.0, 0.5), SolverConfig(), 2.0,
                             [0.4, 0.2, 0.1, 0.05])
    by_size = sorted(res.rows, key=lambda r: -r.size)
    dTs = [r.dT for r in by_size]
    assert all(b <= a for a, b in zip(dTs, dTs[1:]))
    assert dTs[-1] < 0.02 * res.T_f
    assert by_size[-1].d_set < 0.05 * 0.5
    assert [r.size for r in res.rows] == sorted(r.size for r in res.rows)


def test_sweep_rows_independent_of_order(convex_grid):
    f = make_convex_lambda(convex_grid, 10.0, 0.1)
    a = perturbation_sweep(f, SolverConfig(), 2.0, [0.1, 0.4]).to_dict()
    b = perturbation_sweep(f, SolverConfig(), 2.0, [0.4, 0.1]).to_dict()
    assert a == b


def test_sweep_rejects_negative_perturbed_profile(convex_grid):
    f = make_convex_lambda(convex_grid, 10.0, 0.1)
    with pytest.raises(ValidationError):
        perturbation_sweep(f, SolverConfig(), 2.0, [0.1], bump=-1e3 * np.ones(convex_grid.size))


def test_sweep_marks_nonquenching_rows():
    g = build_grid(interval(1.0), 100)
    f = constant(g, 10.0)
    # size 0 quenches; the large negative-but-admissible shift kills the source on the whole domain
    bump = -np.ones(g.size)
    res = perturbation_sweep(f, SolverConfig(), np.inf, [0.0, 10.0], bump=bump, t_max=0.5)
    failed = [r for r in res.rows if r.status != "ok"]
    assert len(failed) == 1 and failed[0].size == 10.0


GEO = TwoAnnulusGeometry(0.3, 0.7, 0.07, 80.0, 0.5)


@pytest.fixture(scope="module")
def bisection():
    g = build_grid(interval(1.0), 400)
    return bisect_critical_height(g, GEO, SolverConfig(), 1e-3 * (2 * GEO.mu - GEO.eta))


def test_bisection_endpoints(bisection):
    first, second = bisection.trace[0], bisection.trace[1]
    assert first.h == GEO.eta and first.hits_b2 and not first.hits_b1
    assert second.h == 2 * GEO.mu and second.hits_b1 and not second.hits_b2


def test_bisection_bracket(bisection):
    tol = 1e-3 * (2 * GEO.mu - GEO.eta)
    assert bisection.bracket <= tol
    assert bisection.hi.hits_b1 and not bisection.lo.hits_b1
    assert bisection.jump >= GEO.separation / 2
    assert bisection.confirmed


def test_bisection_mirror_symmetric_prediction():
    g = build_grid(interval(1.0), 400)
    geo = TwoAnnulusGeometry(-0.5, 0.5, 0.1, 40.0, 0.5, pairs=False)
    tol = 1e-3 * (2 * geo.mu - geo.eta)
    res = bisect_critical_height(g, geo, SolverConfig(), tol, confirm=False)
    assert abs(res.h_star - (geo.mu + geo.eta / 2)) <= 5 * tol


def test_bisection_rejects_subcritical_plateau():
    g = build_grid(interval(1.0), 200)
    with pytest.raises(GeometryError):
        bisect_critical_height(g, TwoAnnulusGeometry(0.3, 0.7, 0.07, 50.0, 0.5), SolverConfig(), 0.1)


def test_sweep_parallel_matches_serial():
    g = build_grid(radial_ball(0.5, 1), 100)
    f = make_convex_lambda(g, 10.0, 0.1)
    serial = perturbation_sweep(f, SolverConfig(), 2.0, [0.2, 0.1], workers=1).to_dict()
    parallel = perturbation_sweep(f, SolverConfig(), 2.0, [0.2, 0.1], workers=2).to_dict()
    assert serial == parallel
