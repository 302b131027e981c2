"""Piecewise cutoff functions and their exponentially damped versions.

``h`` is quadratic on ``[-M, M]`` and continues linearly with matching slope,
so ``h'`` is the clip of ``x`` to ``[-M, M]`` and ``g = x - h'`` is the part of
``x`` sticking out of that interval. All derivatives are analytic per branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CutoffParams:
    M: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")


def h(x, M: float):
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    return np.where(ax <= M, 0.5 * x * x, M * ax - 0.5 * M * M)


def h_prime(x, M: float):
    return np.clip(np.asarray(x, dtype=float), -M, M)


def g(x, M: float):
    x = np.asarray(x, dtype=float)
    return np.where(x > M, x - M, np.where(x < -M, x + M, 0.0))


def _damping(x, eps: float):
    s = np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)
    return np.exp(-eps * s), s


def h_eps(x, M: float, eps: float):
    d, _ = _damping(x, eps)
    return h(x, M) * d


def h_eps_prime(x, M: float, eps: float):
    """Derivative of ``h(x) exp(-eps sqrt(1+x^2))``."""
    x = np.asarray(x, dtype=float)
    d, s = _damping(x, eps)
    return d * (h_prime(x, M) - eps * h(x, M) * x / s)


def f_eps(x, y, M: float, eps: float):
    return h_eps(x, M, eps) - h_eps(y, M, eps)


def grad_f_eps(x, y, M: float, eps: float):
    return h_eps_prime(x, M, eps), -h_eps_prime(y, M, eps)


def f_quadratic(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * (x * x - y * y)


def grad_f_quadratic(x, y):
    return np.asarray(x, dtype=float), -np.asarray(y, dtype=float)


def damping_defect_envelope(x, M: float):
    """Pointwise ``b(x)`` with ``|h_eps'(x) - h'(x)| <= eps * b(x)``.

    Uses ``1 - exp(-t) <= t`` on the damping factor and ``exp(-t) <= 1`` on
    the product-rule term.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(1.0 + x * x)
    return np.abs(h_prime(x, M)) * s + np.abs(h(x, M)) * np.abs(x) / s
