import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from susymembrane import cutoffs as cf
from susymembrane import operators as ops
from susymembrane.grid import GridSpec, RegionSpec, build_grid
from susymembrane.maps import SIGMA, SpinorField, diagonal_map, pauli_action, spin_kron


@pytest.fixture(scope="module")
def grid():
    return build_grid(3.0, 24)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(7)


def rand(dim, rng):
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def test_hermitian_maps_pass_adjoint_test(grid):
    rng = np.random.default_rng(0)
    maps = [ops.build_Q(grid), ops.build_H_direct(grid), ops.build_H_susy(grid), ops.build_P(grid),
            ops.build_H_M(grid, 1.0), ops.momentum(grid, 0), ops.momentum(grid, 1)]
    maps += [ops.build_P_i(grid, i) for i in (1, 2, 3)]
    maps += [ops.build_region_operator(RegionSpec(t, 1.0), grid) for t in ("I", "II", "III", "IV")]
    for m in maps:
        assert m.hermitian, m.label
        assert m.adjoint_defect(rng, 10) <= 1e-12, m.label


def test_Q_zero_field(grid):
    assert not np.any(ops.build_Q(grid)(np.zeros(2 * grid.n_nodes)))


def test_Q_norm_squared_is_expectation_of_QQ():
    g = build_grid(6.0, 128)
    psi = SpinorField.gaussian(g)
    q = ops.build_Q(g)
    w = g.cell_volume
    lhs = np.vdot(q(psi.values), q(psi.values)).real * w
    rhs = np.vdot(psi.values, q(q(psi.values))).real * w
    assert lhs == pytest.approx(rhs, rel=1e-13)


def test_H_direct_on_constant_neumann_field():
    g = build_grid(1.0, 8, "neumann")
    x, y = g.node_xy()
    up = np.concatenate([np.ones(g.n_nodes), np.zeros(g.n_nodes)])
    out = ops.build_H_direct(g)(up)
    np.testing.assert_allclose(out[: g.n_nodes], (x * y) ** 2 + x, atol=1e-12)
    np.testing.assert_allclose(out[g.n_nodes:], y, atol=1e-12)


def test_H_direct_expectation_real(grid, rng):
    H = ops.build_H_direct(grid)
    for _ in range(5):
        psi = SpinorField.random(grid, rng, real=True).values
        assert abs(np.vdot(psi, H(psi)).imag) <= 1e-12


def test_H_susy_positive(grid, rng):
    Hs = ops.build_H_susy(grid)
    q = ops.build_Q(grid)
    for _ in range(100):
        v = rand(Hs.dim, rng)
        e = np.vdot(v, Hs(v)).real / np.vdot(v, v).real
        assert e >= -1e-12
    v = rand(Hs.dim, rng)
    assert np.linalg.norm(Hs(v) - q(q(v))) == 0.0


def test_H_susy_minus_H_direct_second_order():
    d = []
    for n in (32, 64, 128):
        g = build_grid(6.0, n)
        psi = SpinorField.gaussian(g, (0.5, 0.25)).values
        d.append(np.sqrt(g.cell_volume) * np.linalg.norm(ops.build_H_direct(g)(psi) - ops.build_H_susy(g)(psi)))
    orders = np.log2(np.array(d[:-1]) / np.array(d[1:]))
    assert np.all((orders > 1.5) & (orders < 2.5))


def test_reflections(grid, rng):
    P = ops.build_P(grid)
    Pi = [ops.build_P_i(grid, i) for i in (1, 2, 3)]
    for _ in range(5):
        v = rand(P.dim, rng)
        assert np.linalg.norm(P(P(v)) - v) <= 1e-15 * np.linalg.norm(v)
        for p in Pi:
            assert np.linalg.norm(p(p(v)) - v) == 0.0
        assert np.linalg.norm(Pi[0](Pi[1](v)) - Pi[1](Pi[0](v)) - 2j * Pi[2](v)) <= 1e-15 * np.linalg.norm(v)


def test_P_i_index_rejected(grid):
    with pytest.raises(ValueError):
        ops.build_P_i(grid, 4)


def test_P_matches_definition():
    # explicit oracle: (P psi)(x, y) = (s1 + s3)/sqrt2 psi(y, x)
    g = build_grid(1.0, 4)
    rng = np.random.default_rng(3)
    v = rand(2 * g.n_nodes, rng)
    a = v[:16].reshape(4, 4)
    b = v[16:].reshape(4, 4)
    u = (SIGMA[1] + SIGMA[3]) / np.sqrt(2)
    want = np.concatenate([(u[0, 0] * a.T + u[0, 1] * b.T).ravel(), (u[1, 0] * a.T + u[1, 1] * b.T).ravel()])
    np.testing.assert_allclose(ops.build_P(g)(v), want, atol=1e-15)


def test_supersymmetry_exact(grid, rng):
    Q, P = ops.build_Q(grid), ops.build_P(grid)
    P2 = ops.build_P_i(grid, 2)
    for _ in range(5):
        v = rand(Q.dim, rng)
        nv = np.linalg.norm(v)
        assert np.linalg.norm(Q(P(v)) + P(Q(v))) <= 1e-12 * Q.bound * nv
        assert np.linalg.norm(P(P2(v)) + P2(P(v))) <= 1e-15 * nv
        for i in (1, 2, 3):
            p = ops.build_P_i(grid, i)
            assert np.linalg.norm(Q(p(v)) - p(Q(v))) <= 1e-12 * Q.bound * nv


def test_asymmetric_grid_breaks_reflections(rng):
    g = GridSpec(2.0, 16, origin_shift=0.05)
    Q, p1 = ops.build_Q(g), ops.build_P_i(g, 1)
    v = rand(Q.dim, rng)
    assert np.linalg.norm(Q(p1(v)) - p1(Q(v))) > 1e-3 * Q.bound * np.linalg.norm(v)


def test_H_M_equals_scalar_when_M_covers_box(grid, rng):
    hm = ops.build_H_M(grid, grid.half_length, spinor=False)
    h0 = ops.build_scalar_hamiltonian(grid)
    v = rand(hm.dim, rng)
    np.testing.assert_array_equal(hm(v), h0(v))


def test_H_M_potential_value():
    M = 1.5
    assert ops.h_m_potential(np.array(M + 1), np.array(0.0), M) == -1.0


def test_region_potentials():
    assert ops.region_potential("IV", 2.0, 3.0, -2.5) == 9 * 6.25 - 3 - 2.5 + 4
    assert ops.region_potential("I", 2.0, 0.0, 0.3) == 0.0
    assert ops.region_potential("II", 2.0, 0.5, 3.0) == 2.25 - 3 + 2
    with pytest.raises(ValueError):
        ops.region_potential("V", 1.0, 0.0, 0.0)


def test_region_II_potential_agrees_with_H_M():
    # on region II, |g(y)| = |y| - M and g(x) = 0
    g = build_grid(4.0, 32)
    M = 1.0
    from susymembrane.grid import restrict_region

    sub = restrict_region(g, RegionSpec("II", M))
    x, y = sub.node_xy()
    np.testing.assert_allclose(ops.region_potential("II", M, x, y), ops.h_m_potential(x, y, M), atol=1e-12)


def test_region_operator_empty_rejected():
    g = build_grid(1.0, 4)
    with pytest.raises(ValueError, match="no grid nodes"):
        ops.build_region_operator(RegionSpec("IV", 1.0), g)


def test_spin_locality(grid, rng):
    s3 = pauli_action(3, grid.n_nodes, grid.cell_volume)
    for op in (ops.build_H_M(grid, 1.0), ops.lift_to_spinor(ops.build_scalar_hamiltonian(grid))):
        v = rand(op.dim, rng)
        assert np.linalg.norm(op(s3(v)) - s3(op(v))) <= 1e-13 * op.bound * np.linalg.norm(v)


def test_commutator_quadratic_is_x_s3_plus_y_s1(grid, rng):
    m = ops.apply_commutator_iQf(grid, cf.grad_f_quadratic)
    x, y = grid.node_xy()
    ref = spin_kron(SIGMA[3], diagonal_map(x)) + spin_kron(SIGMA[1], diagonal_map(y))
    v = rand(m.dim, rng)
    np.testing.assert_allclose(m(v), ref(v), atol=1e-14)


def test_commutator_const_is_zero(grid, rng):
    z = lambda x, y: (0 * x, 0 * y)
    assert not np.any(ops.apply_commutator_iQf(grid, z)(rand(2 * grid.n_nodes, rng)))


def test_commutator_eps_zero_limit(grid, rng):
    m = ops.apply_commutator_iQf(grid, lambda x, y: cf.grad_f_eps(x, y, 2.0, 0.0))
    v = rand(m.dim, rng)
    np.testing.assert_array_equal(m(v), ops.hprime_coupling(grid, 2.0)(v))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10).map(lambda k: 2 * k), st.floats(0.5, 5.0), st.integers(0, 2**31 - 1))
def test_linearity(n, L, seed):
    g = build_grid(L, n)
    r = np.random.default_rng(seed)
    for op in (ops.build_Q(g), ops.build_H_direct(g), ops.build_P(g)):
        u, v = rand(op.dim, r), rand(op.dim, r)
        a, b = complex(r.standard_normal(), r.standard_normal()), r.standard_normal()
        lhs = op(a * u + b * v)
        rhs = a * op(u) + b * op(v)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * op.bound * (np.linalg.norm(u) + np.linalg.norm(v)) * 4
