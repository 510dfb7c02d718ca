import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from uot.errors import GridError
from uot.grid import (
    FaceField,
    Grids,
    SpatialGrid,
    TimeGrid,
    divergence,
    divergence_field,
    dt_phi,
    dt_u,
    face_average,
    face_average_squared,
    grad,
    grad_field,
    integrate,
)


# ── Grid construction ─────────────────────────────────────────────────────

def test_grid_rejects_bad_sizes():
    with pytest.raises(GridError):
        SpatialGrid(3, 4)
    with pytest.raises(GridError):
        SpatialGrid(1, 1)
    with pytest.raises(GridError):
        SpatialGrid(2, 4, 1)
    with pytest.raises(GridError):
        TimeGrid(2)


def test_face_shapes():
    space = SpatialGrid(2, 4, 3)
    m = FaceField.zeros(space, n_t=5)
    assert m.x.shape == (5, 5, 3)
    assert m.y.shape == (5, 4, 4)
    assert FaceField.zeros(SpatialGrid(1, 4)).y is None


def test_time_index_out_of_range():
    grids = Grids(SpatialGrid(1, 3), TimeGrid(3))
    with pytest.raises(GridError):
        grad(np.zeros(grids.cell_shape), 3, grids)
    with pytest.raises(GridError):
        divergence(FaceField.zeros(grids.space, 3), -1, grids)


# ── Spatial operators ─────────────────────────────────────────────────────

def test_grad_of_linear_slice():
    grids = Grids(SpatialGrid(1, 3), TimeGrid(3))
    phi = np.tile([0.0, 1.0, 2.0], (3, 1))
    g = grad(phi, 1, grids)
    assert_allclose(g.x, [0.0, 3.0, 3.0, 0.0])


def test_grad_of_constant_is_zero():
    space = SpatialGrid(2, 4, 3)
    g = grad_field(np.full(space.shape, 7.0), space)
    assert not g.x.any() and not g.y.any()


def test_grad_of_square_is_exact():
    space = SpatialGrid(1, 10)
    (x,) = space.centers()
    g = grad_field(x ** 2, space)
    i = np.arange(1, 10)
    assert_allclose(g.x[1:-1], 2 * i * space.dx, rtol=0, atol=1e-12)


def test_divergence_examples():
    grids = Grids(SpatialGrid(1, 2), TimeGrid(3))
    m = FaceField(np.tile([0.0, 6.0, 0.0], (3, 1)))
    div = divergence(m, 0, grids)
    assert_allclose(div, [12.0, -12.0])
    assert integrate(div, grids.space) == pytest.approx(0.0)

    space = SpatialGrid(1, 3)
    c = 0.7
    assert_allclose(divergence_field(FaceField(np.array([0.0, c, c, 0.0])), space), [3 * c, 0.0, -3 * c])


def test_divergence_is_negative_adjoint_of_grad(rng):
    for space in (SpatialGrid(1, 9), SpatialGrid(2, 5, 7)):
        phi = rng.normal(size=space.shape)
        m = FaceField.zeros(space)
        m.x[1:-1] = rng.normal(size=m.x[1:-1].shape)
        if space.dims == 2:
            m.y[:, 1:-1] = rng.normal(size=m.y[:, 1:-1].shape)
        g = grad_field(phi, space)
        lhs = (phi * divergence_field(m, space)).sum()
        rhs = -sum((gc * mc).sum() for gc, mc in zip(g.components(), m.components()))
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_zero_boundary_flux_conserves_mass(rng):
    space = SpatialGrid(2, 6, 4)
    m = FaceField.zeros(space)
    m.x[1:-1] = rng.normal(size=m.x[1:-1].shape)
    m.y[:, 1:-1] = rng.normal(size=m.y[:, 1:-1].shape)
    assert integrate(divergence_field(m, space), space) == pytest.approx(0.0, abs=1e-12)


def test_face_average_sums_neighbours():
    space = SpatialGrid(1, 3)
    assert_allclose(face_average(np.array([1.0, 2.0, 4.0]), space).x, [0.0, 3.0, 6.0, 0.0])


def test_face_average_squared_uses_opposite_faces():
    space = SpatialGrid(1, 3)
    m = FaceField(np.array([0.0, 2.0, 4.0, 0.0]))
    assert_allclose(face_average_squared(m, space), [1.0, 9.0, 4.0])


# ── Time operators ────────────────────────────────────────────────────────

def test_dt_u_examples():
    time = TimeGrid(3)
    assert_allclose(dt_u(np.array([0.0, 1.0, 2.0]), time), [3.0, 3.0, 3.0])
    assert_allclose(dt_u(np.array([1.0, 4.0, 9.0]), time), [9.0, 12.0, 15.0])
    assert not dt_u(np.ones((3, 4)), time).any()


def test_dt_phi_three_slabs():
    time = TimeGrid(3)
    assert_allclose(dt_phi(np.array([0.0, 1.0, 2.0]), time), [1.5, 6.0, -7.5])
    c = 2.0
    assert_allclose(dt_phi(np.full(3, c), time), [4.5 * c, 0.0, -4.5 * c])


def test_dt_phi_five_case_stencil():
    time = TimeGrid(6)
    phi = np.arange(6, dtype=float) ** 2
    out = dt_phi(phi, time)
    dt = time.dt
    assert out[0] == pytest.approx((phi[1] / 2 + phi[0]) / dt)
    assert out[1] == pytest.approx((phi[2] / 2 - phi[0]) / dt)
    assert out[2] == pytest.approx((phi[3] - phi[1]) / (2 * dt))
    assert out[4] == pytest.approx((phi[5] - phi[3] / 2) / dt)
    assert out[5] == pytest.approx((-phi[5] - phi[4] / 2) / dt)


@pytest.mark.parametrize("n_t", [3, 4, 7, 15])
def test_summation_by_parts(n_t, rng):
    time = TimeGrid(n_t)
    u, phi = rng.normal(size=(2, n_t, 6))
    lhs = (phi * dt_u(u, time)).sum()
    rhs = -(dt_phi(phi, time) * u).sum()
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


def test_time_operators_check_slab_count():
    with pytest.raises(GridError):
        dt_u(np.zeros((4, 2)), TimeGrid(3))
    with pytest.raises(GridError):
        dt_phi(np.zeros((2, 2)), TimeGrid(3))


# ── Quadrature ────────────────────────────────────────────────────────────

def test_integrate_examples():
    square = SpatialGrid(2, 5, 7)
    assert integrate(np.ones(square.shape), square) == pytest.approx(1.0)
    assert integrate(np.array([1.0, -1.0, 1.0, -1.0]), TimeGrid(4)) == pytest.approx(0.0)
    line = SpatialGrid(1, 4)
    (x,) = line.centers()
    assert integrate(x, line) == pytest.approx(0.5)


def test_integrate_whole_field_per_slab():
    grids = Grids(SpatialGrid(1, 4), TimeGrid(3))
    field = np.arange(3, dtype=float)[:, None] * np.ones(grids.cell_shape)
    assert_array_equal(integrate(field, grids.space), [0.0, 1.0, 2.0])
