"""Closed-form GDoF-per-user curves of the symmetric K-user interference channel.

Two curves are provided:

* ``gdof_finite_precision`` -- finite precision CSIT, five linear pieces
  with breakpoints 1/2, K/(K+1), 1 and K.
* ``gdof_perfect_csit`` -- perfect CSIT ("W" curve), independent of K,
  breakpoints 1/2, 2/3, 1 and 2.

All regime intervals are closed on the right. Breakpoint comparisons are
exact IEEE comparisons.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np


class Regime(str, enum.Enum):
    VERY_WEAK = "VeryWeak"
    WEAK = "Weak"
    MODERATE = "Moderate"
    STRONG = "Strong"
    VERY_STRONG = "VeryStrong"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SystemParams:
    """Symmetric network: ``k_users`` pairs, cross links of strength ``alpha``.

    Direct links carry exponent 1, cross links exponent ``alpha``.
    """

    k_users: int
    alpha: float

    def __post_init__(self):
        if isinstance(self.k_users, bool) or int(self.k_users) != self.k_users:
            raise ValueError(f"k_users must be an integer, got {self.k_users!r}")
        if self.k_users < 2:
            raise ValueError(f"k_users must be >= 2, got {self.k_users}")
        _check_alpha(self.alpha)
        object.__setattr__(self, "k_users", int(self.k_users))
        object.__setattr__(self, "alpha", float(self.alpha))

    def strength(self, k: int, l: int) -> float:
        """Exponent of the link from transmitter ``l`` to receiver ``k``."""
        return 1.0 if k == l else self.alpha


@dataclass(frozen=True)
class GdofPoint:
    alpha: float
    d_per_user: float
    regime: Regime


def _check_alpha(alpha: float) -> None:
    if isinstance(alpha, bool):
        raise ValueError("alpha must be a real number")
    try:
        a = float(alpha)
    except (TypeError, ValueError):
        raise ValueError(f"alpha must be a real number, got {alpha!r}") from None
    if not math.isfinite(a):
        raise ValueError(f"alpha must be finite, got {alpha!r}")
    if a < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha!r}")


def breakpoints(k_users: int) -> tuple:
    """Regime boundaries of the finite-precision curve, left to right."""
    return (0.5, k_users / (k_users + 1), 1.0, float(k_users))


def _classify(k: int, alpha: float) -> Regime:
    if alpha <= 0.5:
        return Regime.VERY_WEAK
    if alpha <= k / (k + 1):
        return Regime.WEAK
    if alpha <= 1.0:
        return Regime.MODERATE
    if alpha <= k:
        return Regime.STRONG
    return Regime.VERY_STRONG


def _finite_formula(k: int, alpha: float, regime: Regime) -> float:
    if regime is Regime.VERY_WEAK:
        return 1.0 - alpha
    if regime is Regime.WEAK:
        return (k - 2 - (k - 3) * alpha) / (k - 1)
    if regime is Regime.MODERATE:
        return 1.0 - (k - 1) / k * alpha
    if regime is Regime.STRONG:
        return alpha / k
    return 1.0


def classify_regime(p: SystemParams) -> Regime:
    """Interference regime of ``p.alpha`` for ``p.k_users`` users."""
    return _classify(p.k_users, p.alpha)


def gdof_finite_precision(p: SystemParams) -> GdofPoint:
    """GDoF per user under finite precision CSIT."""
    regime = _classify(p.k_users, p.alpha)
    return GdofPoint(p.alpha, _finite_formula(p.k_users, p.alpha, regime), regime)


def gdof_perfect_csit(alpha: float) -> GdofPoint:
    """GDoF per user under perfect CSIT (the K-independent W curve).

    The regime tag uses the 2-user breakpoints, where both curves coincide.
    """
    _check_alpha(alpha)
    a = float(alpha)
    if a <= 0.5:
        d = 1.0 - a
    elif a <= 2.0 / 3.0:
        d = a
    elif a <= 1.0:
        d = 1.0 - a / 2.0
    elif a <= 2.0:
        d = a / 2.0
    else:
        d = 1.0
    return GdofPoint(a, d, _classify(2, a))


def gdof_gap(p: SystemParams) -> float:
    """Loss of GDoF per user from perfect to finite precision CSIT (>= 0)."""
    return gdof_perfect_csit(p.alpha).d_per_user - gdof_finite_precision(p).d_per_user


def _validate_grid(alpha_grid: Sequence[float]) -> List[float]:
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise ValueError("alpha grid is empty")
    for a in grid:
        _check_alpha(a)
    for lo, hi in zip(grid, grid[1:]):
        if not hi > lo:
            raise ValueError("alpha grid must be strictly increasing")
    return grid


def curve_sweep(p: SystemParams, alpha_grid: Sequence[float],
                curve: str = "finite") -> List[GdofPoint]:
    """Evaluate one curve pointwise over ``alpha_grid``.

    ``p.alpha`` is ignored; only ``p.k_users`` matters. ``curve`` is
    ``"finite"`` or ``"perfect"``.
    """
    grid = _validate_grid(alpha_grid)
    if curve == "finite":
        return [gdof_finite_precision(SystemParams(p.k_users, a)) for a in grid]
    if curve == "perfect":
        return [gdof_perfect_csit(a) for a in grid]
    raise ValueError(f"unknown curve {curve!r}; expected 'finite' or 'perfect'")


def finite_precision_array(k_users: int, alpha: Iterable[float]) -> np.ndarray:
    """Vectorized finite-precision curve, same boundary convention."""
    a = np.asarray(alpha, dtype=float)
    k = k_users
    conds = [a <= 0.5, a <= k / (k + 1), a <= 1.0, a <= k]
    vals = [1.0 - a, (k - 2 - (k - 3) * a) / (k - 1), 1.0 - (k - 1) / k * a, a / k]
    return np.select(conds, vals, default=1.0)


def perfect_csit_array(alpha: Iterable[float]) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    conds = [a <= 0.5, a <= 2.0 / 3.0, a <= 1.0, a <= 2.0]
    vals = [1.0 - a, a, 1.0 - a / 2.0, a / 2.0]
    return np.select(conds, vals, default=1.0)
