"""Cell-centered tensor grids, difference stencils and the four-region partition.

Nodes on ``[-L, L]`` sit at ``-L + (k + 1/2) h`` with ``h = 2L/n``. With ``n``
even the node set is closed under negation, both axes share it, and every
cut line at ``+-M`` with ``M`` a multiple of ``h`` falls on cell faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .maps import LinearMap, diagonal_map


class BC(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"

    @classmethod
    def parse(cls, value: str | BC) -> BC:
        if isinstance(value, BC):
            return value
        key = str(value).strip().lower()
        aliases = {"d": cls.DIRICHLET, "n": cls.NEUMANN}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown boundary condition {value!r} (expected dirichlet or neumann)") from None


@dataclass(frozen=True)
class GridSpec:
    """Square cell-centered grid on ``[-L, L]^2``.

    ``origin_shift`` displaces every node by a constant. It is zero for all
    grids made by :func:`build_grid` and exists only so tests can build a
    deliberately non-symmetric grid.
    """

    half_length: float
    n: int
    bc_x: BC = BC.DIRICHLET
    bc_y: BC = BC.DIRICHLET
    origin_shift: float = 0.0

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.n

    @property
    def coords(self) -> np.ndarray:
        # same as -L + (k + 1/2) h, written so that negation symmetry is exact in floating point
        return (np.arange(self.n) - 0.5 * (self.n - 1)) * self.h + self.origin_shift

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def n_nodes(self) -> int:
        return self.n * self.n

    @property
    def cell_volume(self) -> float:
        return self.h**2

    @property
    def mask(self) -> np.ndarray:
        return np.ones(self.shape, dtype=bool)

    def node_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened node coordinates; x runs along the first array axis."""
        c = self.coords
        x, y = np.meshgrid(c, c, indexing="ij")
        return x.ravel(), y.ravel()

    def reflection_index(self) -> np.ndarray:
        """Index permutation k -> n-1-k realizing x -> -x on one axis."""
        return np.arange(self.n)[::-1].copy()


def build_grid(L: float, n: int, bc_x: BC | str = BC.DIRICHLET, bc_y: BC | str | None = None) -> GridSpec:
    """Build a symmetric grid with ``n`` cells per axis on ``[-L, L]``.

    The stored half-length is ``h*n/2`` with ``h = 2L/n`` evaluated once, so
    that ``h * n == 2 * L`` holds exactly in floating point.
    """
    if isinstance(n, bool) or int(n) != n:
        raise ValueError(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 4 or n % 2:
        raise ValueError(f"n must be an even integer >= 4 (reflection-symmetric layout), got {n}")
    if not (L > 0 and math.isfinite(L)):
        raise ValueError(f"L must be positive and finite, got {L}")
    bx = BC.parse(bc_x)
    by = bx if bc_y is None else BC.parse(bc_y)
    h = 2.0 * L / n
    return GridSpec(h * n / 2.0, n, bx, by)


def _stencil_1d(n: int, h: float, bc: BC) -> tuple[np.ndarray, float]:
    diag = np.full(n, 2.0)
    if bc is BC.NEUMANN:
        diag[0] = diag[-1] = 1.0
    return diag, 1.0 / h**2


def second_difference_1d(n: int, h: float, bc: BC | str = BC.DIRICHLET) -> LinearMap:
    """Three-point approximation of ``-d^2/dx^2`` on ``n`` cell centers.

    Neumann ends use a mirrored ghost node, which leaves ``1/h^2`` on the
    boundary diagonal; Dirichlet ends keep ``2/h^2`` (ghost value zero).
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    bc = BC.parse(bc)
    diag, s = _stencil_1d(n, h, bc)
    diag = diag * s

    def mv(u: np.ndarray) -> np.ndarray:
        out = diag * u
        out[:-1] -= s * u[1:]
        out[1:] -= s * u[:-1]
        return out

    return LinearMap(n, mv, hermitian=True, label=f"D2[{bc.value}]", bound=4.0 * s, weight=h)


def coordinate_diagonal(grid: GridSpec | SubGrid, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> LinearMap:
    """Multiplication by ``func(x, y)`` on the scalar node space."""
    x, y = grid.node_xy()
    vals = np.broadcast_to(np.asarray(func(x, y)), x.shape).copy()
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"function is not finite at node ({x[k]}, {y[k]})")
    if np.iscomplexobj(vals) and np.all(vals.imag == 0):
        vals = vals.real
    return diagonal_map(vals, label="V", weight=grid.cell_volume)


REGION_TAGS = ("I", "II", "III", "IV")


@dataclass(frozen=True)
class RegionSpec:
    """One piece of the partition of the plane at scale ``M``.

    I is the square ``|x|,|y| <= M``; II the strips ``|x| <= M, |y| >= M``;
    III the strips ``|y| <= M, |x| >= M``; IV the four corners.
    """

    tag: str
    M: float

    def __post_init__(self) -> None:
        if self.tag not in REGION_TAGS:
            raise ValueError(f"region tag must be one of {REGION_TAGS}, got {self.tag!r}")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        inx = np.abs(x) < self.M
        iny = np.abs(y) < self.M
        return {
            "I": inx & iny,
            "II": inx & ~iny,
            "III": ~inx & iny,
            "IV": ~inx & ~iny,
        }[self.tag]


@dataclass(frozen=True, eq=False)
class SubGrid:
    """Nodes of a parent grid lying in one region.

    ``index`` maps subgrid node ``j`` to the parent's flat node index. Edges
    cut by the region boundary get ``cut_bc``; edges at the outer box keep
    the parent's conditions.
    """

    parent: GridSpec
    region: RegionSpec | None
    mask: np.ndarray
    index: np.ndarray = field(repr=False)
    cut_bc: BC = BC.NEUMANN

    @property
    def h(self) -> float:
        return self.parent.h

    @property
    def n_nodes(self) -> int:
        return int(self.index.size)

    @property
    def cell_volume(self) -> float:
        return self.parent.cell_volume

    @property
    def bc_x(self) -> BC:
        return self.parent.bc_x

    @property
    def bc_y(self) -> BC:
        return self.parent.bc_y

    def node_xy(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.parent.node_xy()
        return x[self.index], y[self.index]


def check_cut_alignment(grid: GridSpec, M: float) -> None:
    """Raise unless the lines ``|x| = M`` fall on cell faces."""
    q = (grid.half_length + M) / grid.h
    if abs(q - round(q)) > 1e-9 * max(1.0, abs(q)):
        raise ValueError(f"M={M} is not resolvable on a grid with h={grid.h}: M must be a multiple of h")


def restrict_region(grid: GridSpec, region: RegionSpec, cut_bc: BC | str = BC.NEUMANN) -> SubGrid:
    """Nodes of ``grid`` inside ``region`` plus the map back to the parent."""
    check_cut_alignment(grid, region.M)
    x, y = grid.node_xy()
    mask = region.contains(x, y).reshape(grid.shape)
    return SubGrid(grid, region, mask, np.flatnonzero(mask.ravel()), BC.parse(cut_bc))


def full_subgrid(grid: GridSpec) -> SubGrid:
    return SubGrid(grid, None, grid.mask, np.arange(grid.n_nodes))


def _laplacian_weights(mask: np.ndarray, bc_x: BC, bc_y: BC, cut_bc: BC):
    """Diagonal and active-edge weights of the graph Laplacian on ``mask``."""
    m = mask.astype(float)
    diag = np.zeros(mask.shape)
    edges = []
    for axis, bc in ((0, bc_x), (1, bc_y)):
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        lo, hi = tuple(lo), tuple(hi)
        both = m[lo] * m[hi]
        diag[lo] += both
        diag[hi] += both
        if cut_bc is BC.DIRICHLET:
            diag[lo] += m[lo] * (1.0 - m[hi])
            diag[hi] += m[hi] * (1.0 - m[lo])
        if bc is BC.DIRICHLET:
            first = [slice(None)] * 2
            last = [slice(None)] * 2
            first[axis] = 0
            last[axis] = -1
            diag[tuple(first)] += m[tuple(first)]
            diag[tuple(last)] += m[tuple(last)]
        edges.append((lo, hi, both))
    return diag * m, edges


def kinetic_map(grid: GridSpec | SubGrid) -> LinearMap:
    """Five-point ``-(d_x^2 + d_y^2)`` on a grid or on a region of one.

    On a region the operator is the graph Laplacian of the kept nodes: cut
    edges are dropped under Neumann cuts (mirror ghost) or replaced by a
    zero ghost under Dirichlet cuts.
    """
    sub = grid if isinstance(grid, SubGrid) else full_subgrid(grid)
    parent = sub.parent
    s = 1.0 / parent.h**2
    diag, edges = _laplacian_weights(sub.mask, parent.bc_x, parent.bc_y, sub.cut_bc)
    full = sub.n_nodes == parent.n_nodes
    shape = parent.shape
    idx = sub.index
    dflat = diag.ravel()[idx] * s

    def lap2(u: np.ndarray) -> np.ndarray:
        out = diag * u
        for lo, hi, w in edges:
            if full:
                out[lo] -= u[hi]
                out[hi] -= u[lo]
            else:
                out[lo] -= w * u[hi]
                out[hi] -= w * u[lo]
        return out

    if full:

        def mv(v: np.ndarray) -> np.ndarray:
            return (s * lap2(v.reshape(shape))).ravel()

    else:

        def mv(v: np.ndarray) -> np.ndarray:
            u = np.zeros(parent.n_nodes, dtype=v.dtype)
            u[idx] = v
            return s * lap2(u.reshape(shape)).ravel()[idx]

    bound = float(2.0 * dflat.max()) if dflat.size else 0.0
    return LinearMap(sub.n_nodes, mv, hermitian=True, label="K", bound=bound, weight=parent.cell_volume)

