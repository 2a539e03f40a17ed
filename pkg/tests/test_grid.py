import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from touchdown.errors import DomainError, ResolutionError, ShapeError, ValidationError
from touchdown.grid import Domain, boundary_distance, build_grid, interval, laplacian_apply, radial_ball


def test_interval_nodes_uniform():
    g = build_grid(interval(1.0), 4)
    np.testing.assert_array_equal(g.nodes, [-1, -0.5, 0, 0.5, 1])
    assert g.h == 0.5


def test_radial_nodes_uniform():
    g = build_grid(radial_ball(1.0, 2), 2)
    np.testing.assert_array_equal(g.nodes, [0, 0.5, 1])
    assert g.h == 0.5


def test_two_cells_accepted_one_rejected():
    assert build_grid(interval(1.0), 2).size == 3
    with pytest.raises(ResolutionError):
        build_grid(interval(1.0), 1)


def test_boundary_masks():
    gi = build_grid(interval(1.0), 10)
    assert gi.boundary_mask[[0, -1]].all() and gi.boundary_mask.sum() == 2
    gr = build_grid(radial_ball(1.0, 3), 10)
    assert gr.boundary_mask[-1] and gr.boundary_mask.sum() == 1


@pytest.mark.parametrize("m", [3, 10, 101, 800])
def test_interval_nodes_exactly_antisymmetric(m):
    g = build_grid(interval(1.3), m)
    assert np.all(g.nodes == -g.nodes[::-1])
    assert g.nodes[0] == -1.3 and g.nodes[-1] == 1.3


def test_domain_validation():
    with pytest.raises(ValidationError):
        Domain("square", 1.0)
    with pytest.raises(ValidationError):
        interval(-1.0)
    with pytest.raises(ValidationError):
        Domain("interval", 1.0, 2)


def test_boundary_distance_examples():
    assert boundary_distance(interval(1.0), 0.0) == 1.0
    assert boundary_distance(radial_ball(2.0, 2), 2.0) == 0.0
    assert boundary_distance(interval(1.0), 0.3) == pytest.approx(0.7, abs=1e-15)
    np.testing.assert_allclose(boundary_distance(interval(1.0), [-0.5, 0.5]), [0.5, 0.5])


def test_boundary_distance_outside():
    with pytest.raises(DomainError):
        boundary_distance(interval(1.0), 1.5)
    with pytest.raises(DomainError):
        boundary_distance(radial_ball(1.0, 2), -0.1)


def test_laplacian_zero_state():
    g = build_grid(interval(1.0), 16)
    np.testing.assert_array_equal(laplacian_apply(g, np.zeros(g.size)), 0)


def test_laplacian_quadratic_interval_hand_stencil():
    g = build_grid(interval(1.0), 4)
    u = 1 - g.nodes**2
    # (u[i-1] - 2u[i] + u[i+1]) / h^2 by hand at x = -0.5, 0, 0.5
    hand = [(0 - 2 * 0.75 + 1) / 0.25, (0.75 - 2 + 0.75) / 0.25, (1 - 1.5 + 0) / 0.25]
    out = laplacian_apply(g, u)
    np.testing.assert_allclose(out[1:-1], hand, rtol=0, atol=1e-14)
    np.testing.assert_allclose(out[1:-1], -2.0, atol=1e-14)
    assert out[0] == 0 and out[-1] == 0


def test_laplacian_quadratic_radial_n3_including_origin():
    g = build_grid(radial_ball(1.0, 3), 4)
    r, h, n = g.nodes, 0.25, 3
    u = 1 - r**2
    origin = 2 * n * (u[1] - u[0]) / h**2
    interior = [(u[i + 1] - 2 * u[i] + u[i - 1]) / h**2 + (n - 1) / r[i] * (u[i + 1] - u[i - 1]) / (2 * h)
                for i in (1, 2, 3)]
    out = laplacian_apply(g, u)
    assert origin == pytest.approx(-6.0, abs=1e-13)
    np.testing.assert_allclose(out[:4], [origin, *interior], atol=1e-12)
    np.testing.assert_allclose(out[:4], -6.0, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_laplacian_quadratic_radial_every_dimension(n):
    g = build_grid(radial_ball(2.0, n), 50)
    out = laplacian_apply(g, 4 - g.nodes**2)
    np.testing.assert_allclose(out[:-1], -2 * n, atol=1e-9)


def test_laplacian_shape_error():
    g = build_grid(interval(1.0), 8)
    with pytest.raises(ShapeError):
        laplacian_apply(g, np.zeros(5))


@settings(max_examples=40, deadline=None)
@given(m=st.integers(3, 60), radial=st.booleans(), n=st.integers(1, 3),
       a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_laplacian_linear(m, radial, n, a, b, seed):
    g = build_grid(radial_ball(1.0, n) if radial else interval(1.0), m)
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, g.size))
    lhs = laplacian_apply(g, a * u + b * v)
    rhs = a * laplacian_apply(g, u) + b * laplacian_apply(g, v)
    scale = 1 + np.abs(laplacian_apply(g, np.abs(u) + np.abs(v))).max() * (abs(a) + abs(b))
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(m=st.integers(2, 200), R=st.floats(0.1, 10))
def test_grid_spacing_and_endpoints(m, R):
    for dom in (interval(R), radial_ball(R, 2)):
        g = build_grid(dom, m)
        assert g.size == m + 1
        assert np.allclose(np.diff(g.nodes), g.h, rtol=1e-9)
        assert g.nodes[-1] == R
