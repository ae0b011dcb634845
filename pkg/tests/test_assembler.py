import numpy as np
import pytest

from seedseg import GridField, GridSpec, assemble, build_q, corner_value, edge_gradient
from seedseg.edgemap import EdgeMap, EdgeStopParams, MollifierParams, build_edge_map
from seedseg.grid import ShapeError

from conftest import random_field


@pytest.fixture
def spec():
    return GridSpec(1.0, 1.0, 10, 10)


def test_corner_value_constant(spec):
    u = GridField.constant(spec, 3.5)
    assert corner_value(u, 2, 2, 3, 3) == 3.5


def test_corner_value_linear(spec):
    u = GridField.from_function(spec, lambda x1, x2: x1)
    # nodes at x1 = 0 and h1 in units of h1: mean of {0, 1, 0, 1} * h1
    assert corner_value(u, 0, 0, 1, 1) == pytest.approx(0.5 * spec.h1)


def test_corner_value_brute_force(spec, rng):
    u = random_field(spec, rng)
    g = u.as_grid()
    for _ in range(50):
        i = rng.integers(1, spec.N1)
        j = rng.integers(1, spec.N2)
        p = i + rng.choice([-1, 1])
        q = j + rng.choice([-1, 1])
        expected = np.mean([g[j, i], g[j, p], g[q, i], g[q, p]])
        assert corner_value(u, i, j, p, q) == pytest.approx(expected, rel=1e-14)


def test_corner_value_validation(spec):
    u = GridField.constant(spec, 0.0)
    with pytest.raises(IndexError):
        corner_value(u, 0, 0, -1, 1)
    with pytest.raises(IndexError):
        corner_value(u, 1, 1, 3, 2)  # not a diagonal neighbor


def test_edge_gradient_linear_fields(spec):
    ux = GridField.from_function(spec, lambda x1, x2: x1)
    uy = GridField.from_function(spec, lambda x1, x2: x2)
    const = GridField.constant(spec, 2.0)
    assert edge_gradient(ux, 3, 4, "east") == pytest.approx((1.0, 0.0))
    assert edge_gradient(uy, 3, 4, "east") == pytest.approx((0.0, 1.0))
    for d in ("east", "west", "north", "south"):
        assert edge_gradient(const, 5, 5, d) == (0.0, 0.0)
    # one-sided differences toward the neighbor: west edge of x1 carries -1
    assert edge_gradient(ux, 3, 4, "west")[0] == pytest.approx(-1.0)


def test_edge_gradient_interior_only(spec):
    u = GridField.constant(spec, 0.0)
    with pytest.raises(IndexError):
        edge_gradient(u, 0, 4, "east")
    with pytest.raises(ValueError):
        edge_gradient(u, 3, 3, "northeast")


def test_edge_gradient_matches_vectorized(spec, rng):
    from seedseg.assembler import _edge_gradients_vectorized

    u = random_field(spec, rng)
    e2, w2, n2, s2 = _edge_gradients_vectorized(u)
    for _ in range(30):
        i = int(rng.integers(1, spec.N1))
        j = int(rng.integers(1, spec.N2))
        for arr, d in ((e2, "east"), (w2, "west"), (n2, "north"), (s2, "south")):
            d1, d2 = edge_gradient(u, i, j, d)
            assert arr[j - 1, i - 1] == pytest.approx(d1**2 + d2**2, rel=1e-12)


def test_build_q_constant(spec):
    q = build_q(GridField.constant(spec, 1.0), 0.0001)
    for arr in (q.q_east, q.q_west, q.q_north, q.q_south, q.q_cell):
        np.testing.assert_allclose(arr, 0.0001)


def test_build_q_ramp(spec):
    q = build_q(GridField.from_function(spec, lambda x1, x2: x1), 1.0)
    np.testing.assert_allclose(q.q_east, np.sqrt(2.0))
    np.testing.assert_allclose(q.q_west, np.sqrt(2.0))
    np.testing.assert_allclose(q.q_cell, 0.25 * (q.q_east + q.q_west + q.q_north + q.q_south))


def test_build_q_rejects_zero_epsilon(spec):
    with pytest.raises(ValueError):
        build_q(GridField.constant(spec, 0.0), 0.0)
    assert (build_q(GridField.constant(spec, 0.0), 1e-8).q_cell > 0).all()


def test_assemble_uniform_case(spec):
    # g0 = 1, u_prev constant: every Q = eps, off-diagonals -tau/h^2,
    # center 1 + 4 tau/h^2
    tau, h = 0.01, spec.h1
    sys = assemble(GridField.constant(spec, 0.2), EdgeMap.uniform(spec), tau, 0.5)
    inner = (slice(1, -1), slice(1, -1))
    shape = spec.node_shape
    np.testing.assert_allclose(sys.east.reshape(shape)[inner], -tau / h**2, rtol=1e-13)
    np.testing.assert_allclose(sys.center.reshape(shape)[inner], 1 + 4 * tau / h**2,
                               rtol=1e-13)
    np.testing.assert_allclose(sys.rhs.reshape(shape)[inner], 0.2)


def test_assemble_tiny_tau(spec):
    sys = assemble(GridField.constant(spec, 0.0), EdgeMap.uniform(spec), 1e-300, 1.0)
    inner = (slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(sys.center.reshape(spec.node_shape)[inner], 1.0)
    assert np.abs(sys.east.reshape(spec.node_shape)[inner]).max() < 1e-290


def test_boundary_rows(spec, rng):
    sys = assemble(random_field(spec, rng), EdgeMap.uniform(spec), 0.01, 0.1)
    shape = spec.node_shape
    c, e, w, n, s = (a.reshape(shape) for a in
                     (sys.center, sys.east, sys.west, sys.north, sys.south))
    r = sys.rhs.reshape(shape)
    # left/right columns, including corners: horizontal condition
    assert (c[:, 0] == 1).all() and (e[:, 0] == -1).all()
    assert (w[:, 0] == 0).all() and (n[:, 0] == 0).all() and (s[:, 0] == 0).all()
    assert (c[:, -1] == 1).all() and (w[:, -1] == -1).all()
    # top/bottom rows between corners: vertical condition
    assert (c[0, 1:-1] == 1).all() and (n[0, 1:-1] == -1).all()
    assert (c[-1, 1:-1] == 1).all() and (s[-1, 1:-1] == -1).all()
    assert (r[:, 0] == 0).all() and (r[0, :] == 0).all()


def m_matrix_check(sys):
    shape = sys.spec.node_shape
    inner = (slice(1, -1), slice(1, -1))
    offs = [a.reshape(shape)[inner] for a in (sys.east, sys.west, sys.north, sys.south)]
    center = sys.center.reshape(shape)[inner]
    for off in offs:
        assert (off <= 0).all()
    assert (center >= 1).all()
    total = center - 1 + sum(offs)
    denom = np.maximum(1.0, np.abs(center))
    assert np.abs(total / denom).max() < 1e-13


def test_m_matrix_property(spec, rng):
    for _ in range(5):
        u = random_field(spec, rng)
        em = build_edge_map(
            GridField(spec, rng.uniform(0, 1, spec.num_nodes)),
            MollifierParams(0.03), EdgeStopParams(50.0),
        )
        m_matrix_check(assemble(u, em, 0.02, 1e-4))


def test_reflection_symmetry(spec, rng):
    # mirroring u_prev and the image about the vertical axis mirrors the
    # assembled coefficients (east <-> west)
    u = random_field(spec, rng)
    i0 = GridField(spec, rng.uniform(0, 1, spec.num_nodes))
    m, p = MollifierParams(0.03), EdgeStopParams(50.0)
    sys_a = assemble(u, build_edge_map(i0, m, p), 0.01, 0.01)
    flip = lambda f: GridField.from_grid(spec, f.as_grid()[:, ::-1])
    sys_b = assemble(flip(u), build_edge_map(flip(i0), m, p), 0.01, 0.01)
    shape = spec.node_shape
    inner = (slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(
        sys_a.center.reshape(shape)[inner],
        sys_b.center.reshape(shape)[:, ::-1][inner], rtol=1e-12)
    np.testing.assert_allclose(
        sys_a.east.reshape(shape)[inner],
        sys_b.west.reshape(shape)[:, ::-1][inner], rtol=1e-12)


def test_matvec_matches_dense(spec, rng):
    sys = assemble(random_field(spec, rng), EdgeMap.uniform(spec), 0.01, 0.1)
    x = rng.normal(size=spec.num_nodes)
    np.testing.assert_allclose(sys.matvec(x), sys.to_dense() @ x, atol=1e-12)


def test_consistency_against_dense_solve(rng):
    # solving the assembled system exactly reproduces one semi-implicit step
    spec = GridSpec(1.0, 1.0, 12, 12)
    u_prev = GridField.from_function(
        spec, lambda x1, x2: np.hypot(x1 - 0.5, x2 - 0.5) - 0.3
    )
    sys = assemble(u_prev, EdgeMap.uniform(spec), spec.h1 * spec.h2, 1e-3)
    u = np.linalg.solve(sys.to_dense(), sys.rhs)
    np.testing.assert_allclose(sys.matvec(u), sys.rhs, atol=1e-10)
    # Neumann rows force boundary = inward neighbor
    g = u.reshape(spec.node_shape)
    np.testing.assert_allclose(g[:, 0], g[:, 1], atol=1e-10)
    np.testing.assert_allclose(g[0, 1:-1], g[1, 1:-1], atol=1e-10)


def test_spec_mismatch(spec, rng):
    other = GridSpec(1.0, 1.0, 6, 6)
    with pytest.raises(ShapeError):
        assemble(GridField.constant(spec, 0.0), EdgeMap.uniform(other), 0.01, 0.1)
    with pytest.raises(ValueError):
        assemble(GridField.constant(spec, 0.0), EdgeMap.uniform(spec), -1.0, 0.1)


def test_dump_text(spec):
    sys = assemble(GridField.constant(spec, 0.0), EdgeMap.uniform(spec), 0.01, 0.1)
    lines = sys.dump_text().strip().splitlines()
    assert len(lines) == spec.num_nodes
    first = lines[0].split()
    assert first[0] == "0" and len(first) == 7
