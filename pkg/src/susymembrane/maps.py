"""Matrix-free linear maps, spinor fields and spin-space (Pauli) actions.

Vectors are flat numpy arrays. Spinor data is stored component-major:
``values[:N]`` holds spin component 0 (up) on every node, ``values[N:]``
holds component 1 (down). Inner products carry a constant volume weight
(``h**2`` on planar grids) so that norms approximate L2 integrals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

SIGMA = {
    0: np.eye(2, dtype=complex),
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _result_dtype(*dtypes: Any) -> np.dtype:
    return np.result_type(*dtypes, np.float64)


def inner(u: np.ndarray, v: np.ndarray, weight: float = 1.0) -> complex:
    """Weighted inner product, antilinear in the first slot."""
    return weight * np.vdot(u, v)


def norm(u: np.ndarray, weight: float = 1.0) -> float:
    return float(np.sqrt(weight) * np.linalg.norm(u))


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A linear operator known only through its action on vectors.

    Parameters
    ----------
    dim
        Length of the vectors the map acts on.
    matvec
        Callable taking a flat array of length ``dim`` and returning a new one.
    hermitian
        Whether the map is self-adjoint with respect to the weighted product.
    label
        Human readable name, used in reports.
    bound
        Upper bound on the operator norm (maximal absolute row sum).
    weight
        Volume element of the inner product.
    dtype
        Scalar type of the output for real input.

    Maps compose with ``@`` and combine with ``+``, ``-`` and scalar ``*``.
    """

    dim: int
    matvec: Callable[[np.ndarray], np.ndarray]
    hermitian: bool = False
    label: str = ""
    bound: float = np.inf
    weight: float = 1.0
    dtype: np.dtype = field(default=np.dtype(np.float64))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.dim,):
            raise ValueError(f"{self.label or 'map'}: expected shape ({self.dim},), got {x.shape}")
        return self.matvec(x)

    def apply(self, psi: SpinorField) -> SpinorField:
        return SpinorField(self(psi.values), psi.grid, psi.ncomp)

    def _check_compatible(self, other: LinearMap) -> None:
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: LinearMap) -> LinearMap:
        self._check_compatible(other)
        a, b = self.matvec, other.matvec
        return LinearMap(
            self.dim,
            lambda x: a(x) + b(x),
            hermitian=self.hermitian and other.hermitian,
            label=f"({self.label} + {other.label})",
            bound=self.bound + other.bound,
            weight=self.weight,
            dtype=_result_dtype(self.dtype, other.dtype),
        )

    def __sub__(self, other: LinearMap) -> LinearMap:
        self._check_compatible(other)
        a, b = self.matvec, other.matvec
        return LinearMap(
            self.dim,
            lambda x: a(x) - b(x),
            hermitian=self.hermitian and other.hermitian,
            label=f"({self.label} - {other.label})",
            bound=self.bound + other.bound,
            weight=self.weight,
            dtype=_result_dtype(self.dtype, other.dtype),
        )

    def __neg__(self) -> LinearMap:
        return (-1.0) * self

    def __mul__(self, c: complex) -> LinearMap:
        if not np.isscalar(c):
            return NotImplemented
        a = self.matvec
        return LinearMap(
            self.dim,
            lambda x: c * a(x),
            hermitian=self.hermitian and np.imag(c) == 0,
            label=f"{c}*{self.label}",
            bound=abs(c) * self.bound,
            weight=self.weight,
            dtype=_result_dtype(self.dtype, np.asarray(c).dtype),
        )

    __rmul__ = __mul__

    def __matmul__(self, other: LinearMap) -> LinearMap:
        if not isinstance(other, LinearMap):
            return NotImplemented
        self._check_compatible(other)
        a, b = self.matvec, other.matvec
        return LinearMap(
            self.dim,
            lambda x: a(b(x)),
            hermitian=False,
            label=f"{self.label}{other.label}",
            bound=self.bound * other.bound,
            weight=self.weight,
            dtype=_result_dtype(self.dtype, other.dtype),
        )

    def with_flags(self, *, hermitian: bool | None = None, label: str | None = None) -> LinearMap:
        """Copy with the Hermitian flag or label replaced."""
        return LinearMap(
            self.dim,
            self.matvec,
            hermitian=self.hermitian if hermitian is None else hermitian,
            label=self.label if label is None else label,
            bound=self.bound,
            weight=self.weight,
            dtype=self.dtype,
        )

    def to_dense(self) -> np.ndarray:
        """Materialize the matrix column by column."""
        cols = np.empty((self.dim, self.dim), dtype=self.dtype)
        e = np.zeros(self.dim)
        for j in range(self.dim):
            e[j] = 1.0
            cols[:, j] = self.matvec(e)
            e[j] = 0.0
        return cols

    def adjoint_defect(self, rng: np.random.Generator, trials: int = 10) -> float:
        """Largest relative |<u,Av> - <Au,v>| over random complex pairs."""
        worst = 0.0
        scale = self.bound if np.isfinite(self.bound) else 1.0
        for _ in range(trials):
            u = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            d = abs(np.vdot(u, self.matvec(v)) - np.vdot(self.matvec(u), v))
            worst = max(worst, d / (scale * np.linalg.norm(u) * np.linalg.norm(v)))
        return worst


def identity_map(dim: int, weight: float = 1.0) -> LinearMap:
    return LinearMap(dim, lambda x: x.copy(), hermitian=True, label="I", bound=1.0, weight=weight)


def diagonal_map(diag: np.ndarray, label: str = "D", weight: float = 1.0) -> LinearMap:
    diag = np.asarray(diag)
    if not np.all(np.isfinite(diag)):
        raise ValueError(f"{label}: diagonal contains non-finite entries")
    return LinearMap(
        diag.size,
        lambda x: diag * x,
        hermitian=not np.iscomplexobj(diag) or bool(np.all(diag.imag == 0)),
        label=label,
        bound=float(np.max(np.abs(diag))) if diag.size else 0.0,
        weight=weight,
        dtype=diag.dtype,
    )


def spin_kron(mat: np.ndarray, scalar: LinearMap, label: str | None = None) -> LinearMap:
    """The map ``mat (x) A`` on spinors, with ``mat`` a 2x2 spin matrix.

    ``A`` acts on each spin component; ``mat`` mixes the components.
    """
    mat = np.asarray(mat)
    n = scalar.dim
    a = scalar.matvec
    real_mat = bool(np.all(mat.imag == 0))
    m = mat.real if real_mat else mat

    def mv(x: np.ndarray) -> np.ndarray:
        y0 = a(x[:n])
        y1 = a(x[n:])
        out = np.empty(2 * n, dtype=np.result_type(y0, m))
        out[:n] = m[0, 0] * y0 + m[0, 1] * y1
        out[n:] = m[1, 0] * y0 + m[1, 1] * y1
        return out

    herm_mat = np.allclose(mat, mat.conj().T)
    return LinearMap(
        2 * n,
        mv,
        hermitian=scalar.hermitian and herm_mat,
        label=label or f"spin[{scalar.label}]",
        bound=float(np.max(np.abs(mat).sum(axis=1))) * scalar.bound,
        weight=scalar.weight,
        dtype=_result_dtype(scalar.dtype, m.dtype),
    )


def pauli_action(index: int, n_nodes: int, weight: float = 1.0) -> LinearMap:
    """Pauli matrix sigma_index acting on the spin index only."""
    if index not in (1, 2, 3):
        raise ValueError(f"Pauli index must be 1, 2 or 3, got {index}")
    return spin_kron(SIGMA[index], identity_map(n_nodes, weight), label=f"sigma{index}")


@dataclass
class SpinorField:
    """Field values on grid nodes with ``ncomp`` components per node."""

    values: np.ndarray
    grid: Any
    ncomp: int = 2

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values)
        expected = self.ncomp * self.grid.n_nodes
        if self.values.shape != (expected,):
            raise ValueError(f"field length {self.values.shape} does not match {expected}")

    @property
    def weight(self) -> float:
        return self.grid.cell_volume

    def norm(self) -> float:
        return norm(self.values, self.weight)

    def inner(self, other: SpinorField) -> complex:
        return inner(self.values, other.values, self.weight)

    def normalized(self) -> SpinorField:
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero field")
        return SpinorField(self.values / nrm, self.grid, self.ncomp)

    def component(self, s: int) -> np.ndarray:
        n = self.grid.n_nodes
        return self.values[s * n : (s + 1) * n]

    def density(self) -> np.ndarray:
        """Pointwise |psi|^2 summed over components."""
        return (np.abs(self.values.reshape(self.ncomp, -1)) ** 2).sum(axis=0)

    @classmethod
    def zeros(cls, grid: Any, ncomp: int = 2, dtype: Any = complex) -> SpinorField:
        return cls(np.zeros(ncomp * grid.n_nodes, dtype=dtype), grid, ncomp)

    @classmethod
    def random(cls, grid: Any, rng: np.random.Generator, ncomp: int = 2, real: bool = False) -> SpinorField:
        """Normalized field with i.i.d. Gaussian entries."""
        size = ncomp * grid.n_nodes
        v = rng.standard_normal(size)
        if not real:
            v = v + 1j * rng.standard_normal(size)
        return cls(v, grid, ncomp).normalized()

    @classmethod
    def gaussian(
        cls,
        grid: Any,
        center: tuple[float, float] = (0.0, 0.0),
        width: float = 1.0,
        spinor: tuple[complex, complex] = (1.0, 0.0),
    ) -> SpinorField:
        """Normalized bump exp(-|r - c|^2 / (2 width^2)) times a constant spinor."""
        x, y = grid.node_xy()
        bump = np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2) / (2.0 * width**2))
        s = np.asarray(spinor, dtype=complex)
        vals = np.concatenate([s[0] * bump, s[1] * bump])
        if np.all(s.imag == 0):
            vals = vals.real
        return cls(vals, grid, 2).normalized()
