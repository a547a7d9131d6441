"""Channel gains: magnitude bounds, bounded-density laws and realizations.

Gains are real, with magnitude in ``[delta1, delta2]`` and an independent
uniform sign. Rows of a ``ChannelMatrix`` index receivers, columns index
transmitters. The power exponents are not stored here; they are applied
where SINRs or deterministic outputs are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gdof import SystemParams

LAWS = ("uniform", "triangular")


@dataclass(frozen=True)
class ChannelBounds:
    """Gain magnitude bounds and the density bound ``f_max``.

    When ``f_max`` is omitted it is taken from the uniform-magnitude law,
    ``1 / (delta2 - delta1)``, or ``inf`` for the degenerate interval
    ``delta1 == delta2`` (which has no bounded density).
    """

    delta1: float = 0.5
    delta2: float = 2.0
    f_max: float | None = None

    def __post_init__(self):
        d1, d2 = float(self.delta1), float(self.delta2)
        if not (math.isfinite(d1) and math.isfinite(d2)):
            raise ValueError("channel bounds must be finite")
        if not 0 < d1 <= d2:
            raise ValueError(f"need 0 < delta1 <= delta2, got ({d1}, {d2})")
        f = self.f_max
        if f is None:
            f = 1.0 / (d2 - d1) if d2 > d1 else math.inf
        f = float(f)
        if not f > 0:
            raise ValueError(f"f_max must be positive, got {f}")
        object.__setattr__(self, "delta1", d1)
        object.__setattr__(self, "delta2", d2)
        object.__setattr__(self, "f_max", f)

    @property
    def bounded_density(self) -> bool:
        return math.isfinite(self.f_max)


@dataclass(frozen=True)
class GainLaw:
    """Magnitude law on ``[delta1, delta2]`` with an independent uniform sign.

    ``kind`` is ``"uniform"`` or ``"triangular"`` (symmetric, mode at the
    midpoint). ``f_max`` bounds the magnitude density.
    """

    kind: str
    bounds: ChannelBounds = field(default_factory=ChannelBounds)

    def __post_init__(self):
        if self.kind not in LAWS:
            raise ValueError(f"unknown gain law {self.kind!r}; expected one of {LAWS}")

    @property
    def f_max(self) -> float:
        width = self.bounds.delta2 - self.bounds.delta1
        if width <= 0:
            return math.inf
        return (1.0 if self.kind == "uniform" else 2.0) / width

    def require_bounded_density(self) -> None:
        if not math.isfinite(self.f_max):
            raise ValueError(
                f"{self.kind} law on a degenerate interval has no bounded density")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        lo, hi = self.bounds.delta1, self.bounds.delta2
        if self.kind == "uniform":
            mag = rng.uniform(lo, hi, size)
        elif hi > lo:
            mag = rng.triangular(lo, 0.5 * (lo + hi), hi, size)
        else:
            mag = np.full(size, lo)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * mag


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """One static realization of the K x K gains ``g[k, l]``."""

    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 2:
            raise ValueError(f"gain matrix must be square with K >= 2, got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @property
    def k_users(self) -> int:
        return self.g.shape[0]

    def __getitem__(self, idx):
        return self.g[idx]

    def __eq__(self, other):
        return isinstance(other, ChannelMatrix) and np.array_equal(self.g, other.g)

    def within(self, b: ChannelBounds, tol: float = 0.0) -> bool:
        mag = np.abs(self.g)
        return bool(np.all(mag >= b.delta1 - tol) and np.all(mag <= b.delta2 + tol))

    @classmethod
    def constant(cls, k_users: int, value: float = 1.0) -> "ChannelMatrix":
        return cls(np.full((k_users, k_users), float(value)))

    @classmethod
    def extremes(cls, k_users: int, b: ChannelBounds) -> "ChannelMatrix":
        """Weakest direct links and strongest cross links."""
        g = np.full((k_users, k_users), b.delta2)
        np.fill_diagonal(g, b.delta1)
        return cls(g)


def trial_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for a sub-stream keyed by ``(seed, *stream)``."""
    return np.random.default_rng([int(seed), *map(int, stream)])


def draw_gains(rng: np.random.Generator, k_users: int, b: ChannelBounds,
               law: str = "uniform") -> ChannelMatrix:
    return ChannelMatrix(GainLaw(law, b).sample(rng, (k_users, k_users)))


def draw_channel(p: SystemParams, b: ChannelBounds, seed: int) -> ChannelMatrix:
    """Draw i.i.d. gains: magnitude uniform on the bounds, random sign."""
    return draw_gains(np.random.default_rng(int(seed)), p.k_users, b)
