"""Closed-form success statistics of the protocol.

Everything is parameterized by ``alpha_sq`` = |alpha|^2 with alpha taken real
and positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "SweepPoint",
    "x_of",
    "normalization",
    "p_success",
    "p_fail",
    "p_success_n",
    "sweep",
    "default_grid",
    "DEFAULT_N_LIST",
    "fidelity",
]

DEFAULT_N_LIST = (1, 2, 3, 5)


@dataclass(frozen=True)
class SweepPoint:
    alpha_sq: float
    n: int
    p_success_n: float


def x_of(alpha_sq: float) -> float:
    """Vacuum overlap factor exp(-|alpha|^2)."""
    if alpha_sq < 0:
        raise ValueError("alpha_sq must be >= 0")
    return math.exp(-alpha_sq)


def normalization(alpha_sq: float, sign: int = 1) -> float:
    """Normalization constant of the two-mode entangled coherent states, [2(1 +- x^4)]^(-1/2)."""
    x = x_of(alpha_sq)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign == -1 and alpha_sq == 0:
        raise ValueError("odd entangled coherent state vanishes at alpha_sq = 0")
    return (2 * (1 + sign * x**4)) ** -0.5


def p_success(alpha_sq: float) -> float:
    x2 = x_of(alpha_sq) ** 2
    return (1 - x2) ** 2 / (1 + x2**2)


def p_fail(alpha_sq: float) -> float:
    x2 = x_of(alpha_sq) ** 2
    return 2 * x2 / (1 + x2**2)


def p_success_n(alpha_sq: float, n: int) -> float:
    """Probability of at least one success within ``n`` attempts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1 - p_fail(alpha_sq) ** n


def default_grid(lo: float = 0.0, hi: float = 4.0, step: float = 0.05) -> np.ndarray:
    """Inclusive grid from ``lo`` to ``hi``, built from an integer count to avoid drift."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError("empty grid: max below min")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def sweep(alpha_sq_grid: Iterable[float], n_list: Iterable[int]) -> list:
    grid = [float(a) for a in alpha_sq_grid]
    ns = [int(n) for n in n_list]
    if not grid or not ns:
        raise ValueError("sweep needs a non-empty grid and n list")
    return [SweepPoint(a, n, p_success_n(a, n)) for a in grid for n in ns]


def fidelity(state, target) -> float:
    """Overlap |<target|psi>|^2, or <target|rho|target> if ``state`` is a density matrix.

    ``target`` may be a vector or anything with a ``vector`` attribute.
    """
    t = np.asarray(getattr(target, "vector", target), dtype=complex).reshape(-1)
    s = np.asarray(state, dtype=complex)
    if s.ndim == 2:
        f = np.vdot(t, s @ t).real
    else:
        f = abs(np.vdot(t, s.reshape(-1))) ** 2
    return float(min(max(f, 0.0), 1.0))
