"""Finite-SNR evaluation of the rate-splitting schemes that achieve the
finite-precision GDoF curve.

Every transmitter splits its message into a private layer (power
``P^-alpha``, treated as noise at unintended receivers) and a public layer
(remaining power, decoded by every receiver). Decodability at a finite
``P`` is judged with Gaussian capacity inequalities: each decoding step is
a Gaussian MAC (one message for single-user steps) whose noise is the
residual interference plus unit noise, at its exact power.

Rates are in bits per real channel use and normalized by
``C_o(P) = 0.5 * log2(P)``. All powers are handled as natural logarithms.
"""

from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from .channel import ChannelBounds, ChannelMatrix, draw_gains, trial_rng
from .gdof import Regime, SystemParams, classify_regime

LN10 = math.log(10.0)
LN2 = math.log(2.0)
MAX_MAC_USERS = 16
SCALINGS = ("layered", "uniform")


@dataclass(frozen=True)
class LayeredScheme:
    """Per-user power split and GDoF targets of the two layers.

    ``private_power_exponent`` is ``-alpha`` when a private layer exists and
    ``None`` otherwise. The public layer takes the rest of the unit power.
    """

    regime: Regime
    alpha: float
    private_gdof: float
    public_gdof: float
    private_power_exponent: float | None

    @property
    def has_private(self) -> bool:
        return self.private_power_exponent is not None

    @property
    def has_public(self) -> bool:
        return self.regime is not Regime.VERY_WEAK

    @property
    def total_gdof(self) -> float:
        return self.private_gdof + self.public_gdof

    def log_private_power(self, ln_p: float) -> float:
        if not self.has_private:
            return -math.inf
        return self.private_power_exponent * ln_p

    def log_public_power(self, ln_p: float) -> float:
        if not self.has_public:
            return -math.inf
        if not self.has_private:
            return 0.0
        # ln(1 - P^-alpha)
        return math.log(-math.expm1(self.private_power_exponent * ln_p))

    def public_power(self, p_exponent: float) -> float:
        return math.exp(self.log_public_power(p_exponent * LN10))


class DecodeStep(NamedTuple):
    receiver: int
    label: str
    messages: Tuple[str, ...]
    sinr_db: float
    ok: bool
    max_scale: float


@dataclass(frozen=True)
class SimResult:
    p_exponent: float
    per_user_normalized_rate: float
    layer_sinrs_db: List[float]
    decode_ok: List[bool]
    trials: int
    seed: int | None
    public_scale: float
    private_scale: float
    uniform_scale: float
    steps: Tuple[DecodeStep, ...] = ()


class GdofEstimate(NamedTuple):
    p_exponent: float
    mean: float
    std: float
    trials: int

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.trials)


class MacVariant(str, enum.Enum):
    WEAK_REMAINDER = "WeakRemainder"
    MODERATE_PUBLIC = "ModeratePublic"
    STRONG_ALL = "StrongAll"


def scheme_for_regime(p: SystemParams) -> LayeredScheme:
    """Layer split and targets for the regime of ``p``."""
    k, a = p.k_users, p.alpha
    regime = classify_regime(p)
    if regime is Regime.VERY_WEAK:
        return LayeredScheme(regime, a, 1.0 - a, 0.0, -a)
    if regime is Regime.WEAK:
        return LayeredScheme(regime, a, 1.0 - a, (2.0 * a - 1.0) / (k - 1), -a)
    if regime is Regime.MODERATE:
        return LayeredScheme(regime, a, 1.0 - a, a / k, -a)
    if regime is Regime.STRONG:
        return LayeredScheme(regime, a, 0.0, a / k, None)
    # every receiver decodes all messages; cross links only help
    return LayeredScheme(regime, a, 0.0, 1.0, None)


def reference_capacity(p_exponent: float) -> float:
    """C_o(P) in bits per real channel use, without the o(log P) term."""
    return 0.5 * p_exponent * LN10 / LN2


def _check_p(p_exponent: float) -> float:
    p_exponent = float(p_exponent)
    if not (math.isfinite(p_exponent) and p_exponent > 0):
        raise ValueError(f"p_exponent must be positive and finite, got {p_exponent}")
    return p_exponent * LN10


def _layer_powers(ch: ChannelMatrix, k: int, ln_p: float, alpha: float,
                  s: LayeredScheme) -> Tuple[np.ndarray, np.ndarray]:
    """Received log-powers of every private and public layer at receiver k."""
    K = ch.k_users
    expo = np.full(K, alpha)
    expo[k] = 1.0
    with np.errstate(divide="ignore"):
        base = expo * ln_p + 2.0 * np.log(np.abs(ch.g[k]))
    return base + s.log_private_power(ln_p), base + s.log_public_power(ln_p)


def _lse(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return -math.inf
    m = np.max(v)
    if m == -math.inf:
        return -math.inf
    return float(m + math.log(np.sum(np.exp(v - m))))


def _others(k: int, K: int) -> List[int]:
    return [l for l in range(K) if l != k]


def sinr_private_tin(ch: ChannelMatrix, k: int, p_exponent: float, alpha: float,
                     s: LayeredScheme) -> float:
    """Linear SINR of user k's private layer, public layers removed."""
    if not s.has_private:
        raise ValueError(f"{s.regime} scheme has no private layer")
    ln_p = _check_p(p_exponent)
    priv, _ = _layer_powers(ch, k, ln_p, alpha, s)
    noise = _lse([0.0] + [priv[l] for l in _others(k, ch.k_users)])
    return math.exp(priv[k] - noise)


def sinr_own_public(ch: ChannelMatrix, k: int, p_exponent: float, alpha: float,
                    s: LayeredScheme) -> float:
    """Linear SINR of user k's own public layer, everything else as noise.

    Only the weak regime decodes its own public layer on its own.
    """
    if s.regime is not Regime.WEAK:
        raise ValueError(f"own-public TIN step only exists in the Weak regime, not {s.regime}")
    ln_p = _check_p(p_exponent)
    priv, pub = _layer_powers(ch, k, ln_p, alpha, s)
    others = _others(k, ch.k_users)
    noise = _lse([0.0, priv[k]] + [pub[l] for l in others] + [priv[l] for l in others])
    return math.exp(pub[k] - noise)


def _subset_masks(m: int) -> np.ndarray:
    idx = np.arange(1, 1 << m)
    return ((idx[:, None] >> np.arange(m)) & 1).astype(bool)


def mac_subset_caps(signal_ln: Sequence[float], noise_ln: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian MAC sum-rate caps (bits) for every nonempty subset.

    Returns ``(masks, caps)`` with ``masks[i]`` the boolean membership of
    subset ``i``.
    """
    s = np.asarray(signal_ln, dtype=float)
    masks = _subset_masks(s.size)
    top = np.max(s)
    ratio = masks @ np.exp(s - top)
    with np.errstate(divide="ignore"):
        snr_ln = top + np.log(ratio) - noise_ln
    caps = 0.5 * np.logaddexp(0.0, snr_ln) / LN2
    return masks, caps


def _step(receiver, label, names, signal_ln, noise_ln, targets_bits) -> DecodeStep:
    t = np.asarray(targets_bits, dtype=float)
    masks, caps = mac_subset_caps(signal_ln, noise_ln)
    need = masks @ t
    pos = need > 0
    max_scale = float(np.min(caps[pos] / need[pos])) if np.any(pos) else math.inf
    sinr_db = 10.0 * (_lse(signal_ln) - noise_ln) / LN10
    return DecodeStep(receiver, label, tuple(names), sinr_db, max_scale >= 1.0, max_scale)


def receiver_steps(ch: ChannelMatrix, k: int, p_exponent: float, p: SystemParams,
                   s: LayeredScheme | None = None) -> List[DecodeStep]:
    """Decoding steps of receiver ``k`` in the regime's order."""
    s = s or scheme_for_regime(p)
    ln_p = _check_p(p_exponent)
    K, a = p.k_users, p.alpha
    if ch.k_users != K:
        raise ValueError(f"channel has {ch.k_users} users, params have {K}")
    co = reference_capacity(p_exponent)
    priv, pub = _layer_powers(ch, k, ln_p, a, s)
    others = _others(k, K)
    priv_noise = _lse([0.0] + list(priv))
    tin_noise = _lse([0.0] + [priv[l] for l in others])
    r_priv, r_pub = s.private_gdof * co, s.public_gdof * co
    steps = []
    if s.regime is Regime.VERY_WEAK:
        steps.append(_step(k, "private_tin", [f"V{k + 1}"], [priv[k]], tin_noise, [r_priv]))
    elif s.regime is Regime.WEAK:
        own_noise = _lse([0.0] + list(priv) + [pub[l] for l in others])
        steps.append(_step(k, "own_public_tin", [f"U{k + 1}"], [pub[k]], own_noise, [r_pub]))
        steps.append(_step(k, "mac_other_publics", [f"U{l + 1}" for l in others],
                           [pub[l] for l in others], priv_noise, [r_pub] * (K - 1)))
        steps.append(_step(k, "private_tin", [f"V{k + 1}"], [priv[k]], tin_noise, [r_priv]))
    elif s.regime is Regime.MODERATE:
        steps.append(_step(k, "mac_all_publics", [f"U{l + 1}" for l in range(K)],
                           list(pub), priv_noise, [r_pub] * K))
        steps.append(_step(k, "private_tin", [f"V{k + 1}"], [priv[k]], tin_noise, [r_priv]))
    else:
        steps.append(_step(k, "mac_all_publics", [f"U{l + 1}" for l in range(K)],
                           list(pub), 0.0, [r_pub] * K))
    return steps


def evaluate_decoding_chain(ch: ChannelMatrix, p_exponent: float, p: SystemParams,
                            seed: int | None = None, scaling: str = "layered") -> SimResult:
    """Run every receiver's decoding chain at ``P = 10**p_exponent``.

    When a step fails at the nominal targets the rates are backed off by
    the largest factor in [0, 1] that makes every step pass. The factor is
    exact, since each subset constraint is linear in the targets.

    ``scaling="layered"`` backs off the public layers by one common factor
    (every receiver decodes them) and each private layer by its own
    receiver's factor; the reported rate averages users. ``"uniform"``
    applies a single factor to all layers of all users.
    """
    if scaling not in SCALINGS:
        raise ValueError(f"unknown scaling {scaling!r}; expected one of {SCALINGS}")
    s = scheme_for_regime(p)
    steps = []
    for k in range(p.k_users):
        steps.extend(receiver_steps(ch, k, p_exponent, p, s))
    uniform = max(0.0, min([1.0] + [st.max_scale for st in steps]))
    public = max(0.0, min([1.0] + [st.max_scale for st in steps
                                   if st.label != "private_tin"]))
    own = [min(1.0, st.max_scale) for st in steps if st.label == "private_tin"]
    private = max(0.0, float(np.mean(own))) if own else 1.0
    if scaling == "uniform":
        rate = uniform * s.total_gdof
    else:
        rate = public * s.public_gdof + private * s.private_gdof
    return SimResult(
        p_exponent=float(p_exponent),
        per_user_normalized_rate=rate,
        layer_sinrs_db=[st.sinr_db for st in steps],
        decode_ok=[st.ok for st in steps],
        trials=1,
        seed=seed,
        public_scale=public,
        private_scale=private,
        uniform_scale=uniform,
        steps=tuple(steps),
    )


def trial_channel(p: SystemParams, b: ChannelBounds, seed: int, trial: int) -> ChannelMatrix:
    return draw_gains(trial_rng(seed, trial), p.k_users, b)


def _trial_rates(p, b, p_exponents, seed, trial, scaling) -> List[float]:
    ch = trial_channel(p, b, seed, trial)
    return [evaluate_decoding_chain(ch, e, p, seed, scaling).per_user_normalized_rate
            for e in p_exponents]


def estimate_gdof(p: SystemParams, b: ChannelBounds, p_exponents: Sequence[float],
                  trials: int, seed: int = 0, threads: int = 1,
                  scaling: str = "layered") -> List[GdofEstimate]:
    """Average normalized per-user rate over independent channel draws.

    Trial ``t`` uses the channel drawn from the stream ``(seed, t)`` at every
    ``P``, so the sweep follows fixed realizations as ``P`` grows.
    """
    exps = [float(e) for e in p_exponents]
    if not exps:
        raise ValueError("p_exponents is empty")
    for e in exps:
        _check_p(e)
    if scaling not in SCALINGS:
        raise ValueError(f"unknown scaling {scaling!r}; expected one of {SCALINGS}")
    if int(trials) < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    trials = int(trials)

    def run(t):
        return _trial_rates(p, b, exps, seed, t, scaling)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, range(trials)))
    else:
        rows = [run(t) for t in range(trials)]
    rates = np.array(rows)
    mean = rates.mean(axis=0)
    std = rates.std(axis=0, ddof=1) if trials > 1 else np.zeros(len(exps))
    return [GdofEstimate(e, float(m), float(sd), trials) for e, m, sd in zip(exps, mean, std)]


def mac_feasible(d_targets: Sequence[float], alpha: float, variant,
                 tol: float = 1e-12) -> bool:
    """GDoF-level membership test for the MAC regions of the joint steps.

    ``WeakRemainder``: the K-1 other publics, every subset sum <= 2a - 1.
    ``ModeratePublic``: index 0 is the receiver's own public; subsets of
    the others sum to <= 2a - 1, subsets containing index 0 to <= a.
    ``StrongAll``: d[0] <= 1 and every subset sum <= a.

    Checked by exhaustive subset enumeration.
    """
    variant = MacVariant(variant)
    d = [float(x) for x in d_targets]
    if any(x < 0 or not math.isfinite(x) for x in d):
        raise ValueError("GDoF targets must be finite and nonnegative")
    if len(d) > MAX_MAC_USERS:
        raise ValueError(f"at most {MAX_MAC_USERS} messages, got {len(d)}")
    a = float(alpha)
    if variant is MacVariant.STRONG_ALL and d and d[0] > 1.0 + tol:
        return False
    for r in range(1, len(d) + 1):
        for subset in itertools.combinations(range(len(d)), r):
            total = sum(d[i] for i in subset)
            if variant is MacVariant.MODERATE_PUBLIC:
                cap = a if 0 in subset else 2.0 * a - 1.0
            elif variant is MacVariant.WEAK_REMAINDER:
                cap = 2.0 * a - 1.0
            else:
                cap = a
            if total > cap + tol:
                return False
    return True
