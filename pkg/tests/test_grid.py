import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from susymembrane.eigensolver import dense_oracle
from susymembrane.grid import (
    BC,
    REGION_TAGS,
    RegionSpec,
    build_grid,
    check_cut_alignment,
    coordinate_diagonal,
    kinetic_map,
    restrict_region,
    second_difference_1d,
)


def test_small_grid_nodes():
    g = build_grid(1.0, 4)
    np.testing.assert_allclose(g.coords, [-0.75, -0.25, 0.25, 0.75])
    assert g.h == 0.5


@pytest.mark.parametrize("n", [3, 2, 0, 7])
def test_bad_n_rejected(n):
    with pytest.raises(ValueError, match="even integer >= 4"):
        build_grid(1.0, n)


@pytest.mark.parametrize("L", [0.0, -1.0, float("inf")])
def test_bad_L_rejected(L):
    with pytest.raises(ValueError):
        build_grid(L, 8)


@given(st.floats(0.1, 50.0), st.integers(2, 100).map(lambda k: 2 * k))
def test_layout_invariants(L, n):
    g = build_grid(L, n)
    c = g.coords
    assert g.h * g.n == 2 * g.half_length
    np.testing.assert_array_equal(c, -c[::-1])
    r = g.reflection_index()
    np.testing.assert_array_equal(r[r], np.arange(n))


def test_L8_symmetric():
    g = build_grid(8.0, 64)
    assert g.h == 0.25
    assert set(np.round(g.coords, 12)) == set(np.round(-g.coords, 12))


def test_bc_parse():
    assert BC.parse("N") is BC.NEUMANN
    assert BC.parse("dirichlet") is BC.DIRICHLET
    with pytest.raises(ValueError):
        BC.parse("periodic")


def test_second_difference_dense():
    a = second_difference_1d(2, 1.0, "dirichlet").to_dense()
    np.testing.assert_array_equal(a, [[2, -1], [-1, 2]])
    b = second_difference_1d(5, 0.5, "neumann").to_dense()
    assert b[0, 0] == b[-1, -1] == 4.0


@given(st.integers(2, 60), st.floats(0.01, 3.0))
def test_neumann_kills_constants(n, h):
    op = second_difference_1d(n, h, BC.NEUMANN)
    np.testing.assert_allclose(op(np.ones(n)), 0.0, atol=1e-12 / h**2)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_second_difference_symmetric(bc):
    op = second_difference_1d(40, 0.1, bc)
    rng = np.random.default_rng(0)
    for _ in range(10):
        u, v = rng.standard_normal(40), rng.standard_normal(40)
        assert abs(u @ op(v) - op(u) @ v) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(v) * op.bound


def test_dirichlet_definite_neumann_singular():
    d = dense_oracle(second_difference_1d(30, 0.2, "dirichlet"))
    n = dense_oracle(second_difference_1d(30, 0.2, "neumann"))
    assert d[0] > 0
    assert abs(n[0]) < 1e-10


def test_neumann_first_gap_matches_continuum():
    # oracle: -u'' on (-a, a) with Neumann ends has eigenvalues (k pi / 2a)^2
    a, n = 4.0, 256
    ev = dense_oracle(second_difference_1d(n, 2 * a / n, "neumann"))
    assert ev[1] == pytest.approx((np.pi / (2 * a)) ** 2, rel=1e-2)


def test_coordinate_diagonal_values():
    g = build_grid(1.0, 4)
    d = coordinate_diagonal(g, lambda x, y: (x * y) ** 2)
    x, y = g.node_xy()
    k = int(np.flatnonzero((x == 0.25) & (y == 0.75))[0])
    e = np.zeros(g.n_nodes)
    e[k] = 1.0
    assert d(e)[k] == 0.03515625
    one = coordinate_diagonal(g, lambda x, y: np.ones_like(x))
    v = np.arange(g.n_nodes, dtype=float)
    np.testing.assert_array_equal(one(v), v)
    assert not np.any(coordinate_diagonal(g, lambda x, y: 0 * x)(v))


def test_coordinate_diagonal_rejects_nonfinite():
    g = build_grid(1.0, 4)
    with pytest.raises(ValueError, match="not finite"), np.errstate(divide="ignore"):
        coordinate_diagonal(g, lambda x, y: 1.0 / (x - 0.25))


def test_region_I_full_and_central():
    g = build_grid(2.0, 8)
    full = restrict_region(g, RegionSpec("I", 2.0))
    np.testing.assert_array_equal(full.index, np.arange(64))
    central = restrict_region(g, RegionSpec("I", 1.0))
    assert central.n_nodes == 16


@settings(max_examples=40)
@given(st.integers(2, 30).map(lambda k: 2 * k), st.data())
def test_regions_partition(n, data):
    g = build_grid(3.0, n)
    j = data.draw(st.integers(1, n // 2 - 1))
    M = j * g.h
    counts = [restrict_region(g, RegionSpec(t, M)).n_nodes for t in REGION_TAGS]
    assert sum(counts) == n * n
    idx = np.concatenate([restrict_region(g, RegionSpec(t, M)).index for t in REGION_TAGS])
    assert np.unique(idx).size == n * n


def test_unaligned_cut_rejected():
    g = build_grid(2.0, 8)
    with pytest.raises(ValueError, match="multiple of h"):
        check_cut_alignment(g, 0.3)
    with pytest.raises(ValueError, match="multiple of h"):
        restrict_region(g, RegionSpec("II", 0.75))


def test_region_spec_validation():
    with pytest.raises(ValueError):
        RegionSpec("V", 1.0)
    with pytest.raises(ValueError):
        RegionSpec("I", 0.0)


def test_kinetic_full_matches_kron():
    g = build_grid(1.5, 6, "neumann", "dirichlet")
    k = kinetic_map(g).to_dense()
    ax = second_difference_1d(6, g.h, "neumann").to_dense()
    ay = second_difference_1d(6, g.h, "dirichlet").to_dense()
    np.testing.assert_allclose(k, np.kron(ax, np.eye(6)) + np.kron(np.eye(6), ay), atol=1e-12)


def test_region_kinetic_is_graph_laplacian():
    # Neumann cut: every region block equals the full Neumann Laplacian with cut edges dropped
    g = build_grid(2.0, 8, "neumann")
    total = 0.0
    for t in REGION_TAGS:
        sub = restrict_region(g, RegionSpec(t, 1.0))
        ops = kinetic_map(sub).to_dense()
        np.testing.assert_allclose(ops, ops.T)
        np.testing.assert_allclose(ops @ np.ones(sub.n_nodes), 0.0, atol=1e-12)
        total += sub.n_nodes
    assert total == 64


def test_dirichlet_cut_diagonal():
    g = build_grid(2.0, 8, "neumann")
    sub = restrict_region(g, RegionSpec("I", 1.0), cut_bc="dirichlet")
    d = np.diag(kinetic_map(sub).to_dense()) * g.h**2
    assert np.all(d == 4.0)
