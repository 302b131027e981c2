import numpy as np
import pytest

from susymembrane.grid import build_grid
from susymembrane.maps import SIGMA, LinearMap, SpinorField, diagonal_map, identity_map, inner, pauli_action, spin_kron


def test_pauli_algebra():
    for i in (1, 2, 3):
        np.testing.assert_array_equal(SIGMA[i] @ SIGMA[i], np.eye(2))
    np.testing.assert_array_equal(SIGMA[1] @ SIGMA[2], 1j * SIGMA[3])
    np.testing.assert_array_equal(SIGMA[2] @ SIGMA[3], 1j * SIGMA[1])
    np.testing.assert_array_equal(SIGMA[3] @ SIGMA[1], 1j * SIGMA[2])


def test_pauli_action_index():
    with pytest.raises(ValueError):
        pauli_action(0, 4)
    p2 = pauli_action(2, 3)
    v = np.arange(6, dtype=complex)
    np.testing.assert_allclose(p2(p2(v)), v)


def test_arithmetic_and_flags():
    a = diagonal_map(np.array([1.0, 2.0]))
    b = identity_map(2)
    v = np.array([1.0, -1.0])
    np.testing.assert_array_equal((a + b)(v), [2.0, -3.0])
    np.testing.assert_array_equal((a - b)(v), [0.0, -1.0])
    np.testing.assert_array_equal((2.0 * a)(v), [2.0, -4.0])
    np.testing.assert_array_equal((-a)(v), [-1.0, 2.0])
    assert (a + b).hermitian
    assert not (1j * a).hermitian
    assert not (a @ b).hermitian
    assert (a + b).bound == 3.0


def test_shape_checks():
    a = identity_map(3)
    with pytest.raises(ValueError):
        a(np.ones(4))
    with pytest.raises(ValueError):
        a + identity_map(4)


def test_diagonal_rejects_nan():
    with pytest.raises(ValueError):
        diagonal_map(np.array([1.0, np.nan]))


def test_spin_kron_dense():
    a = diagonal_map(np.array([1.0, 3.0]))
    m = spin_kron(SIGMA[1], a).to_dense()
    np.testing.assert_array_equal(m, np.kron(SIGMA[1], np.diag([1.0, 3.0])))


def test_weighted_inner_product():
    g = build_grid(2.0, 8)
    psi = SpinorField.gaussian(g, width=0.7)
    assert psi.norm() == pytest.approx(1.0)
    assert inner(psi.values, psi.values, g.cell_volume) == pytest.approx(1.0)
    assert psi.density().shape == (g.n_nodes,)
    assert psi.component(1).shape == (g.n_nodes,)


def test_spinor_validation():
    g = build_grid(2.0, 8)
    with pytest.raises(ValueError):
        SpinorField(np.zeros(5), g)
    with pytest.raises(ValueError):
        SpinorField.zeros(g).normalized()


def test_apply_returns_field():
    g = build_grid(2.0, 8)
    psi = SpinorField.random(g, np.random.default_rng(0))
    out = identity_map(2 * g.n_nodes, g.cell_volume).apply(psi)
    np.testing.assert_array_equal(out.values, psi.values)


def test_adjoint_defect_detects_nonhermitian():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    m = LinearMap(2, lambda v: a @ v, bound=1.0)
    assert m.adjoint_defect(np.random.default_rng(0)) > 0.01
