"""Numerical checks of the operator identities, form bounds and spectral bounds.

Every check returns a :class:`VerificationReport` whose ``passed`` flag is
exactly ``measured_defect <= tolerance``. Checks with several conditions fold
them into one defect; the individual numbers are kept in ``artifacts``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from . import cutoffs
from . import operators as ops
from .eigensolver import SolverConfig, SpectralResult, smallest_eigenpairs, spectral_projector_trace
from .grid import BC, REGION_TAGS, GridSpec, RegionSpec, build_grid, check_cut_alignment, restrict_region, second_difference_1d
from .maps import LinearMap, SpinorField, diagonal_map, inner, norm


@dataclass
class VerificationReport:
    check_name: str
    parameters: dict[str, Any]
    measured_defect: float
    tolerance: float
    artifacts: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.measured_defect <= self.tolerance)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["passed"] = self.passed
        return _jsonable(d)


@dataclass
class BoundFit:
    """Samples ``(parameter, lambda_min)`` and the smallest constant that bounds them.

    For ``bound_form == "1-C/a^2"`` the constant is ``max (1 - lambda) a^2``;
    for ``"M-C/M^2"`` it is ``max (M - lambda) M^2``.
    """

    samples: list[tuple[float, float]]
    bound_form: str
    n: int | None = None

    @property
    def fitted_C(self) -> float:
        return max(self.implied_constants())

    def implied_constants(self) -> list[float]:
        if self.bound_form == "1-C/a^2":
            return [(1.0 - lam) * p * p for p, lam in self.samples]
        if self.bound_form == "M-C/M^2":
            return [(p - lam) * p * p for p, lam in self.samples]
        raise ValueError(f"unknown bound form {self.bound_form!r}")

    def bound(self, p: float, C: float | None = None) -> float:
        C = self.fitted_C if C is None else C
        return (1.0 if self.bound_form == "1-C/a^2" else p) - C / (p * p)

    def to_dict(self) -> dict[str, Any]:
        return _jsonable({"samples": self.samples, "bound_form": self.bound_form, "n": self.n,
                          "fitted_C": self.fitted_C})


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, BC):
        return obj.value
    return obj


def observed_orders(hs: Sequence[float], defects: Sequence[float]) -> list[float]:
    """``log(d_i / d_{i+1}) / log(h_i / h_{i+1})`` for consecutive resolutions."""
    out = []
    for (h0, d0), (h1, d1) in zip(zip(hs, defects), zip(hs[1:], defects[1:])):
        if d0 <= 0 or d1 <= 0:
            out.append(float("nan"))
        else:
            out.append(math.log(d0 / d1) / math.log(h0 / h1))
    return out


# ---------------------------------------------------------------- test fields


@dataclass(frozen=True)
class Bump:
    """Gaussian test field exp(-|r-c|^2 / 2w^2) times a constant spinor."""

    center: tuple[float, float] = (0.0, 0.0)
    width: float = 1.0
    spinor: tuple[complex, complex] = (1.0, 0.0)

    def sample(self, grid: GridSpec) -> SpinorField:
        psi = SpinorField.gaussian(grid, self.center, self.width, self.spinor)
        frac = boundary_fraction(grid, psi)
        if frac > 1e-8:
            raise ValueError(f"test field touches the box boundary (norm fraction {frac:.2e} in the outer 2 cells)")
        return psi


def boundary_fraction(grid: GridSpec, psi: SpinorField, cells: int = 2) -> float:
    """Share of ``|psi|^2`` on nodes within ``cells`` cells of the outer box."""
    x, y = grid.node_xy()
    edge = grid.half_length - cells * grid.h
    rho = psi.density()
    total = rho.sum()
    return float(rho[(np.abs(x) > edge) | (np.abs(y) > edge)].sum() / total) if total else 0.0


def compact_bump(grid: GridSpec, radius: float = 1.0, spinor=(1.0, 1.0)) -> SpinorField:
    """Normalized ``cos^2`` bump supported in the square ``|x|, |y| <= radius``."""
    x, y = grid.node_xy()
    b = np.where(np.abs(x) < radius, np.cos(0.5 * np.pi * x / radius) ** 2, 0.0)
    b = b * np.where(np.abs(y) < radius, np.cos(0.5 * np.pi * y / radius) ** 2, 0.0)
    s = np.asarray(spinor, dtype=complex)
    vals = np.concatenate([s[0] * b, s[1] * b])
    return SpinorField(vals.real if np.all(s.imag == 0) else vals, grid).normalized()


DEFAULT_PHI = Bump(center=(0.5, 0.25))
DEFAULT_PSI = Bump(center=(-0.25, 0.5), spinor=(1 / math.sqrt(2), 1j / math.sqrt(2)))


# ---------------------------------------------------------------- algebra


def _rand_fields(dim: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(count)]


def _relative_defect(fields: list[np.ndarray], action: Callable[[np.ndarray], np.ndarray], scale: float) -> float:
    return max(float(np.linalg.norm(action(v)) / (scale * np.linalg.norm(v))) for v in fields)


def algebra_defects(grid: GridSpec, n_fields: int = 20, seed: int = 42) -> dict[str, float]:
    """Relative defects of the supersymmetry and reflection identities."""
    Q = ops.build_Q(grid)
    Hs = ops.build_H_susy(grid)
    P = ops.build_P(grid)
    Pi = {i: ops.build_P_i(grid, i) for i in (1, 2, 3)}
    fields = _rand_fields(Q.dim, n_fields, seed)
    qs = Q.bound
    d = {
        "H_susy - QQ": _relative_defect(fields, lambda v: Hs(v) - Q(Q(v)), qs * qs),
        "PP - 1": _relative_defect(fields, lambda v: P(P(v)) - v, 1.0),
        "QP + PQ": _relative_defect(fields, lambda v: Q(P(v)) + P(Q(v)), qs),
        "PP2 + P2P": _relative_defect(fields, lambda v: P(Pi[2](v)) + Pi[2](P(v)), 1.0),
    }
    for i in (1, 2, 3):
        d[f"[Q,P{i}]"] = _relative_defect(fields, lambda v, i=i: Q(Pi[i](v)) - Pi[i](Q(v)), qs)
        d[f"P{i}P{i} - 1"] = _relative_defect(fields, lambda v, i=i: Pi[i](Pi[i](v)) - v, 1.0)
    for i, j, k in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
        d[f"[P{i},P{j}] - 2iP{k}"] = _relative_defect(
            fields, lambda v, i=i, j=j, k=k: Pi[i](Pi[j](v)) - Pi[j](Pi[i](v)) - 2j * Pi[k](v), 1.0)
    return d


def check_susy_algebra(grid: GridSpec, tol: float = 1e-11, n_fields: int = 20, seed: int = 42) -> VerificationReport:
    d = algebra_defects(grid, n_fields, seed)
    return VerificationReport(
        "susy_algebra",
        {"L": grid.half_length, "n": grid.n, "fields": n_fields, "seed": seed},
        max(d.values()),
        tol,
        {"defects": d},
    )


def nonuniqueness_algebra_check(grid: GridSpec, tol: float = 1e-12, n_fields: int = 20, seed: int = 42) -> VerificationReport:
    """[Q, P_i] = 0 together with ||[P1, P2] psi|| = 2 ||P3 psi|| = 2 ||psi||.

    No common eigenvector of P1 and P2 exists, because their commutator is
    twice a unitary; a unique kernel vector of Q would have to be one.
    """
    Q = ops.build_Q(grid)
    Pi = {i: ops.build_P_i(grid, i) for i in (1, 2, 3)}
    fields = _rand_fields(Q.dim, n_fields, seed)
    comm = 0.0
    for i in (1, 2, 3):
        comm = max(comm, _relative_defect(fields, lambda v, i=i: Q(Pi[i](v)) - Pi[i](Q(v)), Q.bound))
    witness = 0.0
    for v in fields:
        nv = np.linalg.norm(v)
        a = np.linalg.norm(Pi[1](Pi[2](v)) - Pi[2](Pi[1](v)))
        b = 2 * np.linalg.norm(Pi[3](v))
        witness = max(witness, abs(a - b) / nv, abs(b - 2 * nv) / nv)
    return VerificationReport(
        "nonuniqueness_algebra",
        {"L": grid.half_length, "n": grid.n, "fields": n_fields, "seed": seed},
        max(comm, witness),
        tol,
        {"commutator_defect": comm, "witness_defect": witness},
    )


def check_discretization_consistency(
    L: float = 6.0,
    schedule: Sequence[int] = (32, 64, 128),
    psi: Bump = Bump(center=(0.5, 0.25), spinor=(1.0, 0.0)),
    order: float = 2.0,
    order_tol: float = 0.5,
) -> VerificationReport:
    """Observed order of ``||(H_direct - H_susy) psi||`` for a fixed smooth field."""
    hs, defects = [], []
    for n in schedule:
        grid = build_grid(L, n)
        v = psi.sample(grid).values
        hs.append(grid.h)
        defects.append(norm(ops.build_H_direct(grid)(v) - ops.build_H_susy(grid)(v), grid.cell_volume))
    orders = observed_orders(hs, defects)
    dev = max((abs(o - order) if math.isfinite(o) else math.inf) for o in orders)
    return VerificationReport("discretization_consistency", {"L": L, "schedule": list(schedule), "psi": asdict(psi)},
                              dev, order_tol, {"h": hs, "defects": defects, "orders": orders})


def high_frequency_fraction(grid: GridSpec, values: np.ndarray) -> float:
    """Norm share of a field in the upper half of the discrete frequency range.

    Values above 0.5 mark grid-scale (checkerboard) modes, such as the
    spurious near-null directions of the wide-stencil ``Q`` squared.
    """
    k = np.abs(np.fft.fftfreq(grid.n))
    high = (k[:, None] > 0.25) | (k[None, :] > 0.25)
    total = hi = 0.0
    for comp in np.asarray(values).reshape(-1, grid.n, grid.n):
        power = np.abs(np.fft.fft2(comp)) ** 2
        total += power.sum()
        hi += power[high].sum()
    return float(hi / total) if total else 0.0


# ---------------------------------------------------------------- commutator identity


@dataclass(frozen=True)
class CutoffChoice:
    """Which real function f enters the commutator i[Q, f]."""

    kind: str = "f_eps"
    M: float = 2.0
    eps: float = 0.1
    value: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("const", "quadratic", "f_eps"):
            raise ValueError(f"unknown cutoff kind {self.kind!r}")

    def f(self, x, y):
        if self.kind == "const":
            return np.full(np.shape(x), self.value)
        if self.kind == "quadratic":
            return cutoffs.f_quadratic(x, y)
        return cutoffs.f_eps(x, y, self.M, self.eps)

    def grad(self, x, y):
        if self.kind == "const":
            z = np.zeros(np.shape(x))
            return z, z
        if self.kind == "quadratic":
            return cutoffs.grad_f_quadratic(x, y)
        return cutoffs.grad_f_eps(x, y, self.M, self.eps)


def commutator_identity_defect(grid: GridSpec, f: CutoffChoice, phi: SpinorField, psi: SpinorField) -> tuple[complex, complex]:
    """Both sides of ``i[(Q phi, f psi) - (f phi, Q psi)] = (phi, (s3 f_x - s1 f_y) psi)``."""
    Q = ops.build_Q(grid)
    F = ops.multiplication(grid, f.f)
    w = grid.cell_volume
    a, b = phi.values, psi.values
    lhs = 1j * (inner(Q(a), F(b), w) - inner(F(a), Q(b), w))
    rhs = inner(a, ops.apply_commutator_iQf(grid, f.grad)(b), w)
    return lhs, rhs


def check_commutator_identity(
    L: float = 6.0,
    schedule: Sequence[int] = (32, 64, 128),
    f: CutoffChoice = CutoffChoice(),
    phi: Bump = DEFAULT_PHI,
    psi: Bump = DEFAULT_PSI,
    order: float = 2.0,
    order_tol: float = 0.5,
    exact_tol: float = 1e-14,
) -> VerificationReport:
    """Discrete defect of the commutator identity under grid refinement.

    For constant f both sides vanish identically and the defect itself is
    compared with ``exact_tol``. Otherwise the measured quantity is the
    largest deviation of the observed convergence order from ``order``.
    """
    hs, defects, sides = [], [], []
    for n in schedule:
        grid = build_grid(L, n)
        lhs, rhs = commutator_identity_defect(grid, f, phi.sample(grid), psi.sample(grid))
        hs.append(grid.h)
        defects.append(abs(lhs - rhs))
        sides.append((lhs, rhs))
    orders = observed_orders(hs, defects)
    params = {"L": L, "schedule": list(schedule), "f": asdict(f), "phi": asdict(phi), "psi": asdict(psi)}
    arts = {"h": hs, "defects": defects, "orders": orders, "lhs": [s[0] for s in sides], "rhs": [s[1] for s in sides]}
    if f.kind == "const":
        return VerificationReport("commutator_identity", params, max(defects), exact_tol, arts)
    dev = max((abs(o - order) if math.isfinite(o) else math.inf) for o in orders)
    return VerificationReport("commutator_identity", params, dev, order_tol, arts)


# ---------------------------------------------------------------- strong limit


def strong_limit_defect(grid: GridSpec, M: float, eps: float, psi: SpinorField) -> float:
    """``||(s3 d_x f_eps - s1 d_y f_eps) psi - (h'(x) s3 + h'(y) s1) psi||``."""
    c = CutoffChoice("f_eps", M, eps)
    diff = ops.apply_commutator_iQf(grid, c.grad)(psi.values) - ops.hprime_coupling(grid, M)(psi.values)
    return norm(diff, grid.cell_volume)


def check_strong_limit(
    grid: GridSpec,
    M: float = 2.0,
    eps_sequence: Sequence[float] = (0.5, 0.25, 0.1, 0.01),
    psi: SpinorField | None = None,
    final_ratio: float = 0.05,
) -> VerificationReport:
    """Defects along a decreasing epsilon sequence.

    Passes when the defects decrease strictly and the last one is below
    ``final_ratio`` times the first. The measured value is the last/first
    ratio, or infinity if the sequence is not strictly decreasing.
    """
    eps = list(eps_sequence)
    if any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] < 0:
        raise ValueError("eps_sequence must decrease strictly towards 0")
    if psi is None:
        psi = Bump(center=(0.5, 0.25), spinor=(1 / math.sqrt(2), 1 / math.sqrt(2))).sample(grid)
    d = [strong_limit_defect(grid, M, e, psi) for e in eps]
    decreasing = all(b < a for a, b in zip(d, d[1:]))
    ratio = d[-1] / d[0] if d[0] > 0 else math.inf
    return VerificationReport(
        "strong_limit",
        {"L": grid.half_length, "n": grid.n, "M": M, "eps": eps},
        ratio if decreasing else math.inf,
        final_ratio,
        {"defects": d, "strictly_decreasing": decreasing},
    )


def strong_limit_bound_check(grid: GridSpec, M: float, eps_sequence: Sequence[float], radius: float = 1.0) -> VerificationReport:
    """Defect on a field supported in ``|x|,|y| <= radius`` against the branchwise estimate.

    ``|h_eps' - h'| <= eps b`` pointwise (see :func:`cutoffs.damping_defect_envelope`),
    so the defect is at most ``eps (max b(x) + max b(y))`` over the support.
    """
    psi = compact_bump(grid, radius)
    x, y = grid.node_xy()
    on = psi.density() > 0
    bx = float(cutoffs.damping_defect_envelope(x[on], M).max())
    by = float(cutoffs.damping_defect_envelope(y[on], M).max())
    sup_h = float(max(cutoffs.h(x[on], M).max(), cutoffs.h(y[on], M).max()))
    ratios, defects, bounds, sup_h_ratios = [], [], [], []
    for e in eps_sequence:
        dft = strong_limit_defect(grid, M, e, psi)
        bnd = e * (bx + by)
        defects.append(dft)
        bounds.append(bnd)
        ratios.append(dft / bnd if bnd > 0 else (0.0 if dft == 0 else math.inf))
        # the cruder estimate 2 eps sup|h|, reported only: it is not a pointwise bound
        sup_h_ratios.append(dft / (2 * e * sup_h) if e > 0 and sup_h > 0 else 0.0)
    return VerificationReport(
        "strong_limit_bound",
        {"L": grid.half_length, "n": grid.n, "M": M, "eps": list(eps_sequence), "support_radius": radius},
        max(ratios),
        1.0,
        {"defects": defects, "bounds": bounds, "sup_h_ratios": sup_h_ratios},
    )


# ---------------------------------------------------------------- form bound


def check_form_bound(grid: GridSpec, M: float = 1.0, trials: int = 50, seed: int = 42, tol: float = 1e-10) -> VerificationReport:
    """``(psi, (H - h'(x) s3 - h'(y) s1) psi) >= (psi, H_M psi)`` on random fields.

    The gap is also recomputed from the pointwise expression
    ``(g(x) s3 + |g(x)|) + (g(y) s1 + |g(y)|)``; the measured defect is the
    larger of the most negative gap and the disagreement between the two.
    """
    H = ops.build_H_direct(grid)
    lhs_op = H - ops.hprime_coupling(grid, M)
    HM = ops.build_H_M(grid, M)
    x, y = grid.node_xy()
    gx, gy = cutoffs.g(x, M), cutoffs.g(y, M)
    n = grid.n_nodes
    rng = np.random.default_rng(seed)
    w = grid.cell_volume
    gaps, mismatch = [], 0.0
    for _ in range(trials):
        psi = SpinorField.random(grid, rng).values
        gap = (inner(psi, lhs_op(psi), w) - inner(psi, HM(psi), w)).real
        u0, u1 = psi[:n], psi[n:]
        # expectation of g s3 + |g| and g s1 + |g| evaluated node by node
        pw = (np.abs(gx) + gx) * np.abs(u0) ** 2 + (np.abs(gx) - gx) * np.abs(u1) ** 2
        pw = pw + np.abs(gy) * (np.abs(u0) ** 2 + np.abs(u1) ** 2) + 2 * gy * (np.conj(u0) * u1).real
        formula = w * pw.sum()
        gaps.append(float(gap))
        mismatch = max(mismatch, abs(gap - formula))
    return VerificationReport(
        "form_bound",
        {"L": grid.half_length, "n": grid.n, "M": M, "trials": trials, "seed": seed},
        max(-min(gaps), mismatch),
        tol,
        {"min_gap": min(gaps), "max_gap": max(gaps), "formula_mismatch": mismatch,
         "gaps": gaps},
    )


# ---------------------------------------------------------------- spectral checks


def _lowest(op: LinearMap, cfg: SolverConfig) -> SpectralResult:
    return smallest_eigenpairs(op, cfg)


def oscillator_map(a: float, n: int) -> LinearMap:
    """``p^2 + x^2`` on ``(-a, a)`` with Neumann ends, ``n`` cells."""
    h = 2.0 * a / n
    x = -a + (np.arange(n) + 0.5) * h
    op = second_difference_1d(n, h, BC.NEUMANN) + diagonal_map(x * x, weight=h)
    return op.with_flags(label=f"osc[a={a}]")


def neumann_oscillator_bound(a_list: Sequence[float], n: int = 1024, cfg: SolverConfig | None = None) -> BoundFit:
    """Ground values of the Neumann oscillator and the constant ``max (1 - lambda) a^2``."""
    a_list = [float(a) for a in a_list]
    if any(a <= 0 for a in a_list) or any(b <= a for a, b in zip(a_list, a_list[1:])):
        raise ValueError("a_list must be positive and increasing")
    cfg = cfg or SolverConfig(k=1, max_iter=20000)
    samples = [(a, _lowest(oscillator_map(a, n), cfg).lowest) for a in a_list]
    return BoundFit(samples, "1-C/a^2", n)


def check_oscillator_bound(
    a_list: Sequence[float] = (1, 2, 4, 8, 16),
    schedule: Sequence[int] = (512, 1024),
    stability: float = 0.10,
    large_a_tol: float = 1e-4,
    cfg: SolverConfig | None = None,
) -> tuple[VerificationReport, list[BoundFit]]:
    """Positivity of ``1 - lambda(a)``, stability of the fitted constant, and ``lambda`` at the largest ``a``.

    The measured defect is the relative change of the fitted constant between
    the two finest resolutions (tolerance ``stability``); it is set to
    infinity if any deficit is non-positive or the largest-``a`` value at the
    finest resolution misses ``[1 - large_a_tol, 1]``.
    """
    fits = [neumann_oscillator_bound(a_list, n, cfg) for n in schedule]
    c0, c1 = fits[-2].fitted_C, fits[-1].fitted_C
    change = abs(c1 - c0) / abs(c1)
    deficits = [1.0 - lam for _, lam in fits[-1].samples]
    lam_large = fits[-1].samples[-1][1]
    failures = []
    if not all(d > 0 for d in deficits):
        failures.append("non-positive deficit")
    if not all(d <= c1 / a**2 * (1 + 1e-12) for d, (a, _) in zip(deficits, fits[-1].samples)):
        failures.append("deficit above C/a^2")
    if not (1 - large_a_tol <= lam_large <= 1):
        failures.append(f"lambda(a={a_list[-1]}) = {lam_large} outside [1-{large_a_tol}, 1]")
    rep = VerificationReport(
        "oscillator_bound",
        {"a": list(a_list), "schedule": list(schedule)},
        math.inf if failures else change,
        stability,
        {"fits": [ft.to_dict() for ft in fits], "C_change": change, "deficits": deficits, "failures": failures},
    )
    return rep, fits


def scaled_oscillator_check(M: float, y0_list: Sequence[float], C_hat: float, n: int = 512, cfg: SolverConfig | None = None) -> VerificationReport:
    """``p_x^2 + y0^2 x^2`` on ``|x| <= M`` (Neumann) against ``|y0| - C M^-2``.

    By scaling this is ``|y0|`` times the oscillator on ``(-a, a)``,
    ``a = M |y0|^(1/2)``; ``C_hat`` must cover the range of ``a`` sampled.
    """
    cfg = cfg or SolverConfig(k=1, max_iter=20000)
    h = 2.0 * M / n
    x = -M + (np.arange(n) + 0.5) * h
    rows, worst = [], -math.inf
    for y0 in y0_list:
        op = (second_difference_1d(n, h, BC.NEUMANN) + diagonal_map(y0 * y0 * x * x, weight=h)).with_flags(hermitian=True)
        lam = _lowest(op, cfg).lowest
        bound = abs(y0) - C_hat / M**2
        rows.append((y0, lam, bound))
        worst = max(worst, bound - lam)
    return VerificationReport("scaled_oscillator", {"M": M, "y0": list(y0_list), "C": C_hat, "n": n}, worst, 0.0,
                              {"rows": rows})


def region_ground_state(grid: GridSpec, region: RegionSpec, cfg: SolverConfig, cut_bc: str = "neumann") -> tuple[SpectralResult, float]:
    """Lowest regional eigenpair and its norm fraction in the outer two cell layers."""
    op = ops.build_region_operator(region, grid, cut_bc=cut_bc)
    res = smallest_eigenpairs(op, cfg)
    sub = restrict_region(grid, region, cut_bc)
    x, y = sub.node_xy()
    rho = np.abs(res.eigenvectors[0]) ** 2
    edge = grid.half_length - 2 * grid.h
    frac = float(rho[(np.abs(x) > edge) | (np.abs(y) > edge)].sum() / rho.sum())
    return res, frac


CONTAMINATION_LIMIT = 1e-2


def region_positivity(grid: GridSpec, M: float, tags: Sequence[str] = REGION_TAGS, cfg: SolverConfig | None = None,
                      residual_tol: float = 1e-8) -> list[VerificationReport]:
    """``lambda_min(H_a) > 0`` with residual certificate, one report per region.

    The defect is ``-lambda_min`` against tolerance 0; it is infinite when the
    residual exceeds ``residual_tol`` or the ground state leans on the outer
    box (inconclusive, a larger box is needed).
    """
    cfg = cfg or SolverConfig(k=1, tol=residual_tol)
    out = []
    for tag in tags:
        res, frac = region_ground_state(grid, RegionSpec(tag, M), cfg)
        lam, r = res.lowest, float(res.residuals[0])
        inconclusive = frac > CONTAMINATION_LIMIT
        defect = -lam if (r <= residual_tol and not inconclusive) else math.inf
        out.append(VerificationReport(
            f"region_{tag}_positivity",
            {"L": grid.half_length, "n": grid.n, "M": M, "region": tag},
            defect,
            0.0,
            {"lambda_min": lam, "residual": r, "boundary_fraction": frac, "inconclusive": inconclusive},
        ))
    return out


def region_IV_potential_check(M: float, samples: int = 100_000, extent: float = 10.0, seed: int = 42) -> VerificationReport:
    """Sampled ``x^2 y^2 - |x| - |y| + 2M >= (M^3/2 - 1) 2M + 2M`` on ``|x|, |y| >= M``."""
    rng = np.random.default_rng(seed)
    ax = M + (extent * M - M) * rng.random(samples)
    ay = M + (extent * M - M) * rng.random(samples)
    x = ax * rng.choice([-1.0, 1.0], samples)
    y = ay * rng.choice([-1.0, 1.0], samples)
    pot = ops.region_potential("IV", M, x, y)
    chain = (0.5 * M**3 - 1.0) * (np.abs(x) + np.abs(y))
    floor = (0.5 * M**3 - 1.0) * 2 * M + 2 * M
    step1 = float(np.max(chain - ((x * y) ** 2 - np.abs(x) - np.abs(y))))
    step2 = float(np.max(floor - pot))
    return VerificationReport(
        "region_IV_pointwise",
        {"M": M, "samples": samples, "extent": extent, "seed": seed},
        max(step1, step2),
        0.0,
        {"floor": floor, "min_potential": float(pot.min()), "positive_floor": floor > 0},
    )


@dataclass
class RegionScan:
    reports: list[VerificationReport]
    fits: list[BoundFit]
    values: dict[int, dict[float, dict[str, float]]]
    threshold_M: float | None

    @property
    def fit(self) -> BoundFit:
        return self.fits[-1]


def region_positivity_scan(
    M_list: Sequence[float] = (1.0, 1.5, 2.0, 3.0, 4.0),
    L: float = 8.0,
    schedule: Sequence[int] = (64, 128),
    tags: Sequence[str] = REGION_TAGS,
    cfg: SolverConfig | None = None,
    stability: float = 0.10,
) -> RegionScan:
    """Regional ground values over ``M`` at each resolution, plus the region II fit.

    ``threshold_M`` is the smallest scanned ``M`` from which on every region
    is positive at the finest resolution. The last report checks that the
    region II constant changes by less than ``stability`` between the two
    finest resolutions.
    """
    values: dict[int, dict[float, dict[str, float]]] = {}
    reports: list[VerificationReport] = []
    fits = []
    for n in schedule:
        grid = build_grid(L, n)
        values[n] = {}
        for M in M_list:
            reps = region_positivity(grid, M, tags, cfg)
            values[n][M] = {r.parameters["region"]: r.artifacts["lambda_min"] for r in reps}
            if n == schedule[-1]:
                reports.extend(reps)
        if "II" in tags:
            fits.append(BoundFit([(M, values[n][M]["II"]) for M in M_list], "M-C/M^2", n))
    finest = values[schedule[-1]]
    threshold = None
    for M in sorted(M_list, reverse=True):
        if all(v > 0 for v in finest[M].values()):
            threshold = M
        else:
            break
    if len(fits) >= 2:
        c0, c1 = fits[-2].fitted_C, fits[-1].fitted_C
        change = abs(c1 - c0) / max(abs(c1), 1e-300)
        reports.append(VerificationReport(
            "region_II_fit_stability",
            {"L": L, "schedule": list(schedule), "M": list(M_list)},
            change,
            stability,
            {"C": [c0, c1]},
        ))
    return RegionScan(reports, fits, values, threshold)


def region_II_bound_check(values: dict[float, float], C_hat: float, source: str = "oscillator") -> VerificationReport:
    """``lambda_min(H_II(M)) >= M - C M^-2`` for every scanned ``M``."""
    rows = [(M, lam, M - C_hat / M**2) for M, lam in sorted(values.items())]
    worst = max(b - lam for _, lam, b in rows)
    return VerificationReport("region_II_bound", {"C": C_hat, "C_source": source}, worst, 0.0, {"rows": rows})


def bracketing_test(
    L: float = 8.0,
    M: float = 2.0,
    schedule: Sequence[int] = (32, 64, 128),
    cfg: SolverConfig | None = None,
    min_order: float = 1.0,
) -> VerificationReport:
    """``lambda_min(H_M) >= min_a lambda_min(H_a) - tol_disc`` with Neumann box and cuts.

    ``tol_disc`` at resolution ``h`` is the larger change of either side
    under ``h -> h/2``; at the finest resolution the last measured value is
    reused. The observed order of ``tol_disc`` must be at least
    ``min_order``, otherwise the defect is infinite.
    """
    if len(schedule) < 3:
        raise ValueError("need at least three resolutions to measure the order of tol_disc")
    cfg = cfg or SolverConfig(k=1)
    rows = []
    for n in schedule:
        grid = build_grid(L, n, BC.NEUMANN)
        check_cut_alignment(grid, M)
        if not M < grid.half_length:
            raise ValueError(f"M={M} must be smaller than L={L}")
        lam_M = _lowest(ops.build_H_M(grid, M, spinor=False), cfg)
        regional = {t: _lowest(ops.build_region_operator(RegionSpec(t, M), grid), cfg).lowest for t in REGION_TAGS}
        rows.append({"n": n, "h": grid.h, "lambda_H_M": lam_M.lowest, "residual": float(lam_M.residuals[0]),
                     "regional": regional, "min_regional": min(regional.values())})
    tol = [max(abs(a["lambda_H_M"] - b["lambda_H_M"]), abs(a["min_regional"] - b["min_regional"]))
           for a, b in zip(rows, rows[1:])]
    tol.append(tol[-1])
    hs = [r["h"] for r in rows]
    orders = observed_orders(hs[:-1], tol[:-1])
    for r, t in zip(rows, tol):
        r["tol_disc"] = t
        r["margin"] = r["lambda_H_M"] - r["min_regional"]
    defect = max(r["min_regional"] - r["lambda_H_M"] - r["tol_disc"] for r in rows)
    if not all(math.isfinite(o) and o >= min_order for o in orders):
        defect = math.inf
    return VerificationReport(
        "bracketing",
        {"L": L, "M": M, "schedule": list(schedule), "min_order": min_order},
        defect,
        0.0,
        {"rows": rows, "tol_disc_orders": orders},
    )


def dirichlet_control(L: float = 8.0, M: float = 2.0, n: int = 64, cfg: SolverConfig | None = None,
                      tol: float = 1e-10) -> VerificationReport:
    """With Dirichlet cuts the comparison reverses: ``lambda(H_M) <= min_a lambda(H_a^D)``."""
    cfg = cfg or SolverConfig(k=1)
    grid = build_grid(L, n, BC.NEUMANN)
    lam_M = _lowest(ops.build_H_M(grid, M, spinor=False), cfg).lowest
    neu = {t: _lowest(ops.build_region_operator(RegionSpec(t, M), grid), cfg).lowest for t in REGION_TAGS}
    dir_ = {t: _lowest(ops.build_region_operator(RegionSpec(t, M), grid, cut_bc="dirichlet"), cfg).lowest
            for t in REGION_TAGS}
    return VerificationReport(
        "dirichlet_control",
        {"L": L, "M": M, "n": n},
        lam_M - min(dir_.values()),
        tol,
        {"lambda_H_M": lam_M, "neumann": neu, "dirichlet": dir_},
    )


# ---------------------------------------------------------------- zero modes


def ground_space_density(res: SpectralResult, rel: float = 1e-6) -> np.ndarray:
    """|psi|^2 summed over the computed ground eigenspace (basis independent)."""
    lam0 = res.lowest
    cluster = np.flatnonzero(res.eigenvalues <= lam0 + rel * max(1.0, abs(lam0)) + 10 * res.residuals.max())
    vecs = res.eigenvectors[cluster]
    ncomp = 2
    return sum((np.abs(v.reshape(ncomp, -1)) ** 2).sum(axis=0) for v in vecs) / len(cluster)


def delocalization_fraction(grid: GridSpec, density: np.ndarray, radius: float) -> float:
    x, y = grid.node_xy()
    return float(density[np.hypot(x, y) > radius].sum() / density.sum())


@dataclass
class ZeroModeScan:
    rows: list[dict[str, float]]
    results: list[SpectralResult]
    reports: list[VerificationReport]


def zero_mode_search(
    L_list: Sequence[float] = (4.0, 6.0, 8.0),
    h: float = 0.125,
    k: int = 2,
    cfg: SolverConfig | None = None,
    scalar_change: float = 0.01,
) -> ZeroModeScan:
    """Lowest eigenvalues of H on growing Dirichlet boxes at fixed spacing.

    Reports positivity, monotone decrease in L, growth of the ground-space
    norm fraction outside radius ``L/2`` and outside the fixed radius
    ``min(L_list)/2``, and stabilization of the scalar operator
    ``p^2 + x^2 y^2`` (relative change over the last step at most
    ``scalar_change``).
    """
    cfg = cfg or SolverConfig(k=k)
    if cfg.k != k:
        cfg = SolverConfig(k=k, tol=cfg.tol, max_iter=cfg.max_iter, reorth=cfg.reorth, seed=cfg.seed)
    L_list = [float(L) for L in L_list]
    r_fixed = min(L_list) / 2
    rows, results = [], []
    for L in L_list:
        n = 2 * L / h
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"L={L} is not a multiple of h={h}")
        grid = build_grid(L, int(round(n)))
        res = smallest_eigenpairs(ops.build_H_direct(grid), cfg)
        rho = ground_space_density(res)
        scalar = smallest_eigenpairs(ops.build_scalar_hamiltonian(grid), SolverConfig(k=1, tol=cfg.tol, seed=cfg.seed))
        rows.append({
            "L": L,
            "n": grid.n,
            "lambda_min": res.lowest,
            "residual": float(res.residuals[0]),
            "converged": res.all_converged,
            "eigenvalues": res.eigenvalues.tolist(),
            "deloc_half_box": delocalization_fraction(grid, rho, L / 2),
            "deloc_fixed_radius": delocalization_fraction(grid, rho, r_fixed),
            "scalar_lambda_min": scalar.lowest,
        })
        results.append(res)
    lam = [r["lambda_min"] for r in rows]
    res_tol = [r["residual"] for r in rows]
    params = {"L": L_list, "h": h, "k": k}
    reports = [
        VerificationReport("zero_mode_positivity", params, -min(lam) if all(r["converged"] for r in rows) else math.inf,
                           0.0, {"lambda_min": lam}),
        VerificationReport("zero_mode_monotone", params,
                           max((b - a - (ra + rb) for a, b, ra, rb in zip(lam, lam[1:], res_tol, res_tol[1:])),
                               default=-math.inf),
                           1e-10, {"lambda_min": lam}),
    ]
    for key, name in (("deloc_half_box", "delocalization_half_box"), ("deloc_fixed_radius", "delocalization_fixed_radius")):
        f = [r[key] for r in rows]
        # strictly increasing: every step a - b must be negative
        reports.append(VerificationReport(name, {**params, "radius": "L/2" if key == "deloc_half_box" else r_fixed},
                                          max((a - b for a, b in zip(f, f[1:])), default=-math.inf), -1e-15,
                                          {"fractions": f}))
    sc = [r["scalar_lambda_min"] for r in rows]
    change = abs(sc[-1] - sc[-2]) / abs(sc[-2]) if len(sc) > 1 else 0.0
    reports.append(VerificationReport("scalar_stabilization", params,
                                      change if min(sc) > 0 else math.inf, scalar_change, {"scalar_lambda_min": sc}))
    return ZeroModeScan(rows, results, reports)


def supertrace_check(grid: GridSpec, k: int = 6, cfg: SolverConfig | None = None) -> VerificationReport:
    """Trace of ``P`` over the lowest eigenspace of H, which should vanish.

    The window holds the eigenvalues clustered at the bottom; its upper edge
    is halfway to the next computed eigenvalue.
    """
    cfg = cfg or SolverConfig(k=k)
    H = ops.build_H_direct(grid)
    res = smallest_eigenpairs(H, SolverConfig(k=k, tol=cfg.tol, max_iter=cfg.max_iter, reorth=cfg.reorth, seed=cfg.seed))
    lam = res.eigenvalues
    jumps = np.diff(lam)
    scale = max(1.0, abs(lam[0]))
    cut = int(np.argmax(jumps > 1e-6 * scale))
    if jumps.size == 0 or jumps[cut] <= 1e-6 * scale:
        raise ValueError("no spectral gap among the computed eigenvalues; increase k")
    window = 0.5 * (lam[cut] + lam[cut + 1])
    tr, tol = spectral_projector_trace(H, ops.build_P(grid), window, result=res)
    return VerificationReport(
        "supertrace",
        {"L": grid.half_length, "n": grid.n, "k": k, "window": window},
        abs(tr),
        tol,
        {"trace": tr, "eigenvalues": lam.tolist(), "window_size": cut + 1},
    )
