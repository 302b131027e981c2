"""Lowest eigenpairs of Hermitian linear maps.

The iterative solver is a thick-restart Lanczos method run on the shifted map
``c I - A``, where ``c`` is the map's row-sum norm bound, so the wanted
smallest eigenvalues of ``A`` become the dominant ones. Basis vectors are
reorthogonalized against the whole basis and against already locked
eigenvectors: always twice under ``reorth="full"``, and under
``reorth="selective"`` a second pass only when the first one cancels most
of the vector. Eigenpairs are locked one at a time, and each new search starts
from a fresh seeded random direction mixed with the previous Ritz vectors, so
degenerate eigenvalues are found with their full multiplicity.

Convergence is certified only by explicitly computed residuals
``||A v - lambda v|| / ||v||``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .maps import LinearMap, SpinorField

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096
# second Gram-Schmidt pass needed when the first one removes more than this share of the norm
_DGKS = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class SolverConfig:
    k: int = 1
    tol: float = 1e-8
    max_iter: int = 5000
    reorth: Literal["full", "selective"] = "full"
    seed: int = 42
    basis_size: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.reorth not in ("full", "selective"):
            raise ValueError(f"reorth must be 'full' or 'selective', got {self.reorth!r}")


@dataclass
class SpectralResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    iterations: int
    seed: int
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    weight: float = 1.0

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))

    @property
    def lowest(self) -> float:
        return float(self.eigenvalues[0])

    def field(self, j: int, grid, ncomp: int = 2) -> SpinorField:
        if self.eigenvectors is None:
            raise ValueError("eigenvectors were not kept")
        return SpinorField(self.eigenvectors[j], grid, ncomp)


def rayleigh_quotient(op: LinearMap, psi: np.ndarray | SpinorField) -> float:
    v = psi.values if isinstance(psi, SpinorField) else np.asarray(psi)
    nn = np.vdot(v, v).real
    if nn == 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    q = np.vdot(v, op(v)) / nn
    if op.hermitian and abs(q.imag) > 1e-12 * max(1.0, abs(q.real)):
        raise ArithmeticError(f"Rayleigh quotient of Hermitian map {op.label} has imaginary part {q.imag:.3e}")
    return float(q.real)


def residual_norm(op: LinearMap, lam: float, psi: np.ndarray | SpinorField) -> float:
    v = psi.values if isinstance(psi, SpinorField) else np.asarray(psi)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("residual of the zero vector")
    return float(np.linalg.norm(op(v) - lam * v) / nv)


def dense_oracle(op: LinearMap) -> np.ndarray:
    """All eigenvalues, ascending, from the materialized matrix."""
    if op.dim > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to dim <= {DENSE_LIMIT}, got {op.dim}")
    a = op.to_dense()
    if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError(f"{op.label}: matrix is not Hermitian")
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def _orthogonalize(w: np.ndarray, basis: np.ndarray, passes: int = 2) -> np.ndarray:
    for _ in range(passes):
        if basis.shape[0] == 0:
            break
        w = w - basis.T @ (basis.conj() @ w)
    return w


class _Lanczos:
    """One thick-restart run for the dominant eigenpair of ``c I - A`` off the locked space."""

    def __init__(self, op: LinearMap, shift: float, locked: np.ndarray, m: int, reorth: str, dtype, rng):
        self.op = op
        self.c = shift
        self.locked = locked
        self.m = m
        self.reorth = reorth
        self.dtype = dtype
        self.rng = rng
        self.matvecs = 0

    def apply(self, v: np.ndarray) -> np.ndarray:
        self.matvecs += 1
        return self.c * v - self.op.matvec(v)

    def random_direction(self, V: np.ndarray) -> np.ndarray | None:
        for _ in range(3):
            w = self.rng.standard_normal(self.op.dim).astype(self.dtype)
            if np.iscomplexobj(w):
                w = w + 1j * self.rng.standard_normal(self.op.dim)
            w = _orthogonalize(_orthogonalize(w, self.locked), V)
            nw = np.linalg.norm(w)
            if nw > 1e-8:
                return w / nw
        return None

    def run(self, v0: np.ndarray, budget: int, tol: float):
        n = self.op.dim
        free = n - self.locked.shape[0]
        m = max(2, min(self.m, free))
        V = np.zeros((m + 1, n), dtype=self.dtype)
        T = np.zeros((m, m), dtype=self.dtype)
        V[0] = v0
        start, kept = 0, 0
        theta = y = None
        beta = 0.0
        while True:
            size = m
            for j in range(start, m):
                w = self.apply(V[j])
                w = _orthogonalize(w, self.locked)
                nw0 = np.linalg.norm(w)
                coef = V[: j + 1].conj() @ w
                w = w - V[: j + 1].T @ coef
                if self.reorth == "full" or np.linalg.norm(w) < _DGKS * nw0:
                    c2 = V[: j + 1].conj() @ w
                    w = w - V[: j + 1].T @ c2
                    coef = coef + c2
                T[: j + 1, j] = coef
                T[j, : j + 1] = coef.conj()
                T[j, j] = coef[j].real
                beta = float(np.linalg.norm(w))
                if j + 1 + self.locked.shape[0] >= n:
                    size = j + 1
                    beta = 0.0
                    break
                if beta <= 1e-12 * max(self.c, 1.0):
                    # invariant subspace: continue with an independent direction
                    nxt = self.random_direction(V[: j + 1])
                    if nxt is None:
                        size, beta = j + 1, 0.0
                        break
                    V[j + 1] = nxt
                    beta = 0.0
                    if j + 1 < m:
                        T[j + 1, : j + 1] = 0
                        T[: j + 1, j + 1] = 0
                else:
                    V[j + 1] = w / beta
                if self.matvecs >= budget:
                    size = j + 1
                    break
            theta, y = np.linalg.eigh(T[:size, :size])
            order = np.argsort(theta)[::-1]
            theta, y = theta[order], y[:, order]
            est = np.abs(beta * y[size - 1, :])
            ritz = y[:, 0] @ V[:size]
            if est[0] <= 0.5 * tol or self.matvecs >= budget or size < m:
                ritz /= np.linalg.norm(ritz)
                lam = self.c - theta[0]
                res = residual_norm(self.op, lam, ritz)
                if res <= tol or self.matvecs >= budget or size < m:
                    extra = (y[:, 1 : min(4, size)].T @ V[:size]) if size > 1 else np.zeros((0, n))
                    return lam, ritz, res, extra
            # thick restart: keep the leading half of the Ritz vectors
            kept = max(1, min(m // 2, size - 1))
            U = y[:, :kept].T @ V[:size]
            V[:kept] = U
            if beta > 0:
                V[kept] = V[size]
            else:
                nxt = self.random_direction(U)
                if nxt is None:
                    lam = self.c - theta[0]
                    return lam, ritz / np.linalg.norm(ritz), residual_norm(self.op, lam, ritz), U[1:4]
                V[kept] = nxt
            T[:] = 0
            T[np.arange(kept), np.arange(kept)] = theta[:kept]
            start = kept


def smallest_eigenpairs(op: LinearMap, cfg: SolverConfig = SolverConfig(), keep_vectors: bool = True) -> SpectralResult:
    """The ``cfg.k`` lowest eigenpairs of a Hermitian map.

    Non-convergence within ``cfg.max_iter`` applications of the map is
    reported through ``converged``; the partial data is still returned.
    """
    if not op.hermitian:
        raise ValueError(f"{op.label or 'map'} is not flagged Hermitian")
    if cfg.k > op.dim:
        raise ValueError(f"k={cfg.k} exceeds the dimension {op.dim}")
    rng = np.random.default_rng(cfg.seed)
    dtype = np.result_type(op.dtype, np.float64)
    shift = float(op.bound) if np.isfinite(op.bound) else _power_bound(op, rng)
    m = cfg.basis_size or int(min(max(2 * cfg.k + 40, 80), op.dim))
    locked = np.zeros((0, op.dim), dtype=dtype)
    vals, res, conv = [], [], []
    total = 0
    warm = np.zeros((0, op.dim), dtype=dtype)
    for _ in range(cfg.k):
        run = _Lanczos(op, shift, locked, m, cfg.reorth, dtype, rng)
        v0 = run.random_direction(locked)
        if v0 is None:
            break
        if warm.shape[0]:
            mix = _orthogonalize(warm.sum(axis=0), locked)
            if np.linalg.norm(mix) > 1e-8:
                v0 = v0 + mix / np.linalg.norm(mix)
                v0 = _orthogonalize(v0, locked)
                v0 /= np.linalg.norm(v0)
        lam, vec, r, warm = run.run(v0, max(1, cfg.max_iter - total), cfg.tol)
        total += run.matvecs
        vec = _orthogonalize(vec, locked)
        vec /= np.linalg.norm(vec)
        locked = np.vstack([locked, vec[None, :]])
        vals.append(lam)
        res.append(r)
        conv.append(r <= cfg.tol)
        log.debug("eigenpair %d of %s: %.12g (residual %.2e, %d matvecs)", len(vals), op.label, lam, r, run.matvecs)
        if total >= cfg.max_iter:
            break
    vals = np.asarray(vals)
    order = np.argsort(vals, kind="stable")
    return SpectralResult(
        eigenvalues=vals[order],
        residuals=np.asarray(res)[order],
        converged=np.asarray(conv, dtype=bool)[order],
        iterations=total,
        seed=cfg.seed,
        eigenvectors=locked[order] / np.sqrt(op.weight) if keep_vectors else None,
        weight=op.weight,
    )


def _power_bound(op: LinearMap, rng: np.random.Generator, steps: int = 50) -> float:
    v = rng.standard_normal(op.dim)
    est = 0.0
    for _ in range(steps):
        w = op.matvec(v)
        est = np.linalg.norm(w) / np.linalg.norm(v)
        v = w / np.linalg.norm(w)
    return 1.5 * est


def spectral_projector_trace(
    op: LinearMap,
    p_map: LinearMap,
    energy_window: float | tuple[float, float],
    cfg: SolverConfig | None = None,
    result: SpectralResult | None = None,
) -> tuple[float, float]:
    """Trace of ``p_map`` over the eigenvectors of ``op`` with energy in the window.

    Returns ``(trace, tolerance)``. The tolerance bounds how far the computed
    value can sit from the trace over the exact spectral subspace: each Ritz
    vector is within angle ``residual / gap`` of it, where ``gap`` separates
    the window's eigenvalues from the first computed eigenvalue above it.
    """
    lo, hi = (-np.inf, float(energy_window)) if np.isscalar(energy_window) else map(float, energy_window)
    if result is None:
        result = smallest_eigenpairs(op, cfg or SolverConfig())
    if result.eigenvectors is None:
        raise ValueError("eigenvectors are required")
    lam = result.eigenvalues
    inside = (lam >= lo) & (lam <= hi)
    if not inside.any():
        return 0.0, 0.0
    if not np.all(result.converged[inside]):
        raise ValueError("energy window contains unconverged eigenpairs")
    above = lam[lam > hi]
    if above.size == 0:
        raise ValueError("energy window not resolved: no computed eigenvalue above it; increase k")
    gap = float(above.min() - lam[inside].max())
    total = 0.0
    for j in np.flatnonzero(inside):
        v = result.eigenvectors[j]
        total += (np.vdot(v, p_map(v)) * op.weight).real
    tol = 2.0 * inside.sum() * float(result.residuals[inside].max()) / gap + 1e-12 * inside.sum()
    return float(total), tol
