"""Quantized deterministic channel model (real setting, one channel use).

Receiver ``k`` observes

    y_k = sum_{l != k} ceil(pbar**(alpha - m) * g[k, l] * x_l)
          + ceil(pbar**(1 - m) * g[k, k] * x_k),        m = max(1, alpha)

with integer inputs ``x_l`` in ``{0, 1, ..., ceil(pbar**m)}``. Here ``pbar``
plays the role of sqrt(P).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelBounds, ChannelMatrix

# integer snapping of pbar**m, which is often an exact integer mathematically
_SNAP = 1e-9


def _ceil_snap(v: float) -> int:
    r = round(v)
    if abs(v - r) <= _SNAP * max(1.0, abs(v)):
        return int(r)
    return math.ceil(v)


@dataclass(frozen=True)
class DetParams:
    """Deterministic-model instance.

    ``input_max`` defaults to ``ceil(p_bar**max(1, alpha))``; an explicit
    value (>= 0) shrinks the alphabet for degenerate checks.
    """

    p_bar: int
    alpha: float
    k_users: int = 2
    input_max: int | None = None

    def __post_init__(self):
        if int(self.p_bar) != self.p_bar or self.p_bar < 2:
            raise ValueError(f"p_bar must be an integer >= 2, got {self.p_bar!r}")
        a = float(self.alpha)
        if not (math.isfinite(a) and a >= 0):
            raise ValueError(f"alpha must be finite and nonnegative, got {self.alpha!r}")
        if int(self.k_users) != self.k_users or self.k_users < 2:
            raise ValueError(f"k_users must be an integer >= 2, got {self.k_users!r}")
        object.__setattr__(self, "p_bar", int(self.p_bar))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "k_users", int(self.k_users))
        if self.input_max is None:
            object.__setattr__(self, "input_max", _ceil_snap(self.p_bar ** self.top_exponent))
        elif int(self.input_max) != self.input_max or self.input_max < 0:
            raise ValueError(f"input_max must be a nonnegative integer, got {self.input_max!r}")
        else:
            object.__setattr__(self, "input_max", int(self.input_max))

    @property
    def top_exponent(self) -> float:
        return max(1.0, self.alpha)

    @property
    def cross_scale(self) -> float:
        """Multiplier on cross-link gains, pbar**(alpha - max(1, alpha))."""
        return float(self.p_bar) ** (self.alpha - self.top_exponent)

    @property
    def direct_scale(self) -> float:
        """Multiplier on direct-link gains, pbar**(1 - max(1, alpha))."""
        return float(self.p_bar) ** (1.0 - self.top_exponent)

    @property
    def alphabet_size(self) -> int:
        return self.input_max + 1

    def link_scale(self, k: int, l: int) -> float:
        return self.direct_scale if k == l else self.cross_scale

    def alphabet(self) -> np.ndarray:
        return np.arange(self.input_max + 1, dtype=np.int64)


@dataclass(frozen=True)
class DetCodeword:
    """One integer input per transmitter, single channel use."""

    x: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.x)
        if any(v != orig for v, orig in zip(vals, self.x)):
            raise ValueError(f"codeword entries must be integers, got {self.x!r}")
        object.__setattr__(self, "x", vals)

    def check(self, d: DetParams) -> None:
        if len(self.x) != d.k_users:
            raise ValueError(f"codeword has {len(self.x)} entries, expected {d.k_users}")
        for v in self.x:
            if not 0 <= v <= d.input_max:
                raise ValueError(f"input {v} outside alphabet [0, {d.input_max}]")


def quantized_term(scale: float, gain: float, x) -> np.ndarray:
    """ceil(scale * gain * x), elementwise, as int64."""
    return np.ceil(scale * gain * np.asarray(x, dtype=float)).astype(np.int64)


def det_output(ch: ChannelMatrix, cw: DetCodeword | Sequence[int], d: DetParams, k: int) -> int:
    """Output of receiver ``k`` for codeword ``cw``."""
    if not isinstance(cw, DetCodeword):
        cw = DetCodeword(tuple(cw))
    cw.check(d)
    if ch.k_users != d.k_users:
        raise ValueError(f"channel has {ch.k_users} users, params have {d.k_users}")
    total = 0
    for l, x in enumerate(cw.x):
        total += int(quantized_term(d.link_scale(k, l), ch.g[k, l], x))
    return total


def output_range(d: DetParams, b: ChannelBounds) -> int:
    """Upper bound Q_y on |y_k| over every input and admissible channel.

    Each quantized term satisfies |ceil(v)| <= |v| + 1.
    """
    cross = b.delta2 * d.cross_scale * d.input_max + 1.0
    direct = b.delta2 * d.direct_scale * d.input_max + 1.0
    return math.ceil((d.k_users - 1) * cross + direct)
