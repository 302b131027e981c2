"""Model operators on spinor fields over a cell-centered grid.

Momentum is ``p = -i D`` with ``D`` the antisymmetric central difference,
truncated at the box edge. Because ``D`` changes sign exactly under
``x -> -x`` and the two axes share one node set, the reflections ``P`` and
``P_1, P_2, P_3`` act as exact symmetries of the discrete supercharge.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import cutoffs
from .grid import GridSpec, RegionSpec, SubGrid, coordinate_diagonal, kinetic_map, restrict_region
from .maps import SIGMA, LinearMap, identity_map, spin_kron

GradFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def _require_full(grid) -> GridSpec:
    if not isinstance(grid, GridSpec):
        raise TypeError("this operator needs a full square grid, not a region")
    return grid


def central_difference(grid: GridSpec, axis: int) -> LinearMap:
    """Real antisymmetric ``(u[k+1] - u[k-1]) / 2h`` along one axis."""
    grid = _require_full(grid)
    n, c = grid.n, 0.5 / grid.h
    shape = grid.shape

    def mv(v: np.ndarray) -> np.ndarray:
        u = v.reshape(shape)
        out = np.zeros_like(u)
        if axis == 0:
            out[:-1] += u[1:]
            out[1:] -= u[:-1]
        else:
            out[:, :-1] += u[:, 1:]
            out[:, 1:] -= u[:, :-1]
        return c * out.ravel()

    return LinearMap(n * n, mv, label="D" + "xy"[axis], bound=2 * c, weight=grid.cell_volume)


def momentum(grid: GridSpec, axis: int) -> LinearMap:
    return ((-1j) * central_difference(grid, axis)).with_flags(hermitian=True, label="p" + "xy"[axis])


def build_Q(grid: GridSpec) -> LinearMap:
    """Supercharge ``p_x s3 - p_y s1 - xy s2``."""
    grid = _require_full(grid)
    xy = coordinate_diagonal(grid, lambda x, y: x * y)
    q = (
        spin_kron(SIGMA[3], momentum(grid, 0))
        - spin_kron(SIGMA[1], momentum(grid, 1))
        - spin_kron(SIGMA[2], xy)
    )
    return q.with_flags(hermitian=True, label="Q")


def spin_coupling(grid: GridSpec | SubGrid, c3: np.ndarray, c1: np.ndarray, label: str = "C") -> LinearMap:
    """Pointwise ``c3(x,y) s3 + c1(x,y) s1`` with real coefficient arrays."""
    c3 = np.asarray(c3, dtype=float)
    c1 = np.asarray(c1, dtype=float)
    n = grid.n_nodes

    def mv(v: np.ndarray) -> np.ndarray:
        u0, u1 = v[:n], v[n:]
        return np.concatenate([c3 * u0 + c1 * u1, c1 * u0 - c3 * u1])

    bound = float(np.max(np.abs(c3) + np.abs(c1))) if n else 0.0
    return LinearMap(2 * n, mv, hermitian=True, label=label, bound=bound, weight=grid.cell_volume)


def build_scalar_hamiltonian(grid: GridSpec | SubGrid) -> LinearMap:
    """``p_x^2 + p_y^2 + x^2 y^2`` on the scalar node space."""
    h = kinetic_map(grid) + coordinate_diagonal(grid, lambda x, y: (x * y) ** 2)
    return h.with_flags(label="H0")


def build_H_direct(grid: GridSpec) -> LinearMap:
    """``p_x^2 + p_y^2 + x^2 y^2 + x s3 + y s1`` with the five-point kinetic stencil."""
    grid = _require_full(grid)
    k = kinetic_map(grid)
    x, y = grid.node_xy()
    v = (x * y) ** 2
    n = grid.n_nodes
    kmv = k.matvec

    def mv(w: np.ndarray) -> np.ndarray:
        u0, u1 = w[:n], w[n:]
        out = np.empty_like(w, dtype=np.result_type(w, float))
        out[:n] = kmv(u0) + (v + x) * u0 + y * u1
        out[n:] = kmv(u1) + (v - x) * u1 + y * u0
        return out

    bound = k.bound + float(np.max(v + np.abs(x) + np.abs(y)))
    return LinearMap(2 * n, mv, hermitian=True, label="H", bound=bound, weight=grid.cell_volume)


def build_H_susy(grid: GridSpec) -> LinearMap:
    """``Q`` applied twice; positive semidefinite by construction."""
    q = build_Q(grid)
    return (q @ q).with_flags(hermitian=True, label="Q^2")


def _swap(grid: GridSpec, unitary: np.ndarray, label: str) -> LinearMap:
    n, shape = grid.n_nodes, grid.shape
    u = unitary

    def mv(v: np.ndarray) -> np.ndarray:
        a = v[:n].reshape(shape).T.ravel()
        b = v[n:].reshape(shape).T.ravel()
        return np.concatenate([u[0, 0] * a + u[0, 1] * b, u[1, 0] * a + u[1, 1] * b])

    dt = np.float64 if np.all(u.imag == 0) else np.complex128
    return LinearMap(2 * n, mv, hermitian=bool(np.allclose(u, u.conj().T)), label=label,
                     bound=float(np.abs(u).sum(axis=1).max()), weight=grid.cell_volume, dtype=np.dtype(dt))


def build_P(grid: GridSpec) -> LinearMap:
    """``(P psi)(x, y) = (s1 + s3)/sqrt(2) psi(y, x)``."""
    grid = _require_full(grid)
    u = ((SIGMA[1] + SIGMA[3]) / np.sqrt(2.0)).real
    return _swap(grid, u, "P")


_REFLECT_AXES = {1: (0,), 2: (0, 1), 3: (1,)}


def build_P_i(grid: GridSpec, i: int) -> LinearMap:
    """``P_1 = s1 psi(-x,y)``, ``P_2 = s2 psi(-x,-y)``, ``P_3 = s3 psi(x,-y)``."""
    grid = _require_full(grid)
    if i not in _REFLECT_AXES:
        raise ValueError(f"i must be 1, 2 or 3, got {i}")
    axes = _REFLECT_AXES[i]
    n, shape = grid.n_nodes, grid.shape
    s = SIGMA[i]
    s = s.real if np.all(s.imag == 0) else s

    def mv(v: np.ndarray) -> np.ndarray:
        a = np.flip(v[:n].reshape(shape), axis=axes).ravel()
        b = np.flip(v[n:].reshape(shape), axis=axes).ravel()
        return np.concatenate([s[0, 0] * a + s[0, 1] * b, s[1, 0] * a + s[1, 1] * b])

    return LinearMap(2 * n, mv, hermitian=True, label=f"P{i}", bound=1.0, weight=grid.cell_volume,
                     dtype=np.dtype(s.dtype))


def lift_to_spinor(scalar: LinearMap) -> LinearMap:
    """``A`` acting identically on both spin components."""
    return spin_kron(SIGMA[0], scalar, label=scalar.label)


def h_m_potential(x: np.ndarray, y: np.ndarray, M: float) -> np.ndarray:
    return (x * y) ** 2 - np.abs(cutoffs.g(x, M)) - np.abs(cutoffs.g(y, M))


def build_H_M(grid: GridSpec, M: float, spinor: bool = True) -> LinearMap:
    """``p_x^2 + p_y^2 + x^2 y^2 - |g(x)| - |g(y)|``, spin-diagonal."""
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    grid = _require_full(grid)
    scalar = (kinetic_map(grid) + coordinate_diagonal(grid, lambda x, y: h_m_potential(x, y, M)))
    scalar = scalar.with_flags(label=f"H_M[{M}]")
    return lift_to_spinor(scalar) if spinor else scalar


def region_potential(tag: str, M: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    v = (x * y) ** 2
    if tag == "I":
        return v
    if tag == "II":
        return v - np.abs(y) + M
    if tag == "III":
        return v - np.abs(x) + M
    if tag == "IV":
        return v - np.abs(x) - np.abs(y) + 2 * M
    raise ValueError(f"unknown region {tag!r}")


def build_region_operator(
    region: RegionSpec,
    grid: GridSpec,
    spinor: bool = False,
    cut_bc: str = "neumann",
) -> LinearMap:
    """Regional piece of ``H_M`` on the nodes of one region.

    Cut boundaries carry ``cut_bc`` (Neumann for the lower bound); the outer
    box keeps the grid's own conditions. Scalar by default, since the
    operator does not touch the spin index.
    """
    sub = restrict_region(grid, region, cut_bc)
    if sub.n_nodes == 0:
        raise ValueError(f"region {region.tag} with M={region.M} contains no grid nodes")
    pot = coordinate_diagonal(sub, lambda x, y: region_potential(region.tag, region.M, x, y))
    scalar = (kinetic_map(sub) + pot).with_flags(label=f"H_{region.tag}[{region.M}]")
    return lift_to_spinor(scalar) if spinor else scalar


def apply_commutator_iQf(grid: GridSpec | SubGrid, grad: GradFn) -> LinearMap:
    """``s3 df/dx - s1 df/dy`` for a caller-supplied analytic gradient."""
    x, y = grid.node_xy()
    fx, fy = grad(x, y)
    return spin_coupling(grid, np.broadcast_to(fx, x.shape), -np.broadcast_to(fy, x.shape), label="i[Q,f]")


def multiplication(grid: GridSpec, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> LinearMap:
    """Scalar function ``f`` acting on both spin components."""
    return lift_to_spinor(coordinate_diagonal(grid, f))


def hprime_coupling(grid: GridSpec | SubGrid, M: float) -> LinearMap:
    """``h'(x) s3 + h'(y) s1``, the small-epsilon limit of the cutoff commutator."""
    x, y = grid.node_xy()
    return spin_coupling(grid, cutoffs.h_prime(x, M), cutoffs.h_prime(y, M), label="h'")


def spinor_identity(grid: GridSpec | SubGrid) -> LinearMap:
    return identity_map(2 * grid.n_nodes, grid.cell_volume)
