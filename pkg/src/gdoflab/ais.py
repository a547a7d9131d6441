"""Aligned-image-set and entropy oracles on the deterministic model.

Everything here is exact enumeration for a fixed channel; the only Monte
Carlo layer is the average over channel draws. Inputs are independent and
uniform over the alphabet.

Conditioning on ``x_1`` only shifts every output by user 1's own quantized
term, so conditional entropies and aligned-set sizes given ``x_1`` do not
depend on its value. The oracles below still take ``x1`` explicitly where
the table itself is returned.

Receivers and users are 0-based in code: receiver 0 is "receiver 1" (the
one where images should align) and receiver 1 is "receiver 2".
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from .channel import ChannelBounds, ChannelMatrix, GainLaw, trial_rng
from .detmodel import DetCodeword, DetParams, quantized_term

MAX_TABLE = 10 ** 7
MAX_PAIRS = 5 * 10 ** 7


@dataclass(frozen=True)
class AisStats:
    """Aligned-image-set sizes, averaged over ``trials`` channel draws.

    ``mean_set_size`` is the plain mean over receiver-2 images;
    ``weighted_mean_set_size`` weights each image by its probability under
    uniform inputs (the expectation that enters the entropy bound).
    """

    p_bar: int
    alpha: float
    mean_set_size: float
    max_set_size: int
    trials: int
    seed: int | None
    weighted_mean_set_size: float = float("nan")
    n_codewords: int = 0


@dataclass(frozen=True)
class EntropyGap:
    p_bar: int
    alpha: float
    h_y2_given_x1: float
    h_y1_given_x1: float
    gap: float
    bound: float
    draws: int = 1


@dataclass(frozen=True)
class FirstBound:
    p_bar: int
    alpha: float
    h_y1: float
    h_input: float
    diff: float
    reference: float
    draws: int = 1


class AlignmentEstimate(NamedTuple):
    probability: float
    bound: float
    trials: int

    @property
    def stderr(self) -> float:
        """Binomial standard error at the bound (clamped to [0, 1])."""
        q = min(1.0, max(0.0, self.bound))
        return math.sqrt(q * (1.0 - q) / self.trials)


class Lemma2Row(NamedTuple):
    p_bar: int
    h_a: float
    h_b: float
    abs_diff: float


@dataclass(frozen=True)
class Lemma2Result:
    beta: float
    law_a: str
    law_b: str
    rows: Tuple[Lemma2Row, ...]
    slope: float


# ---------------------------------------------------------------------------
# exact distributions


def fit_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``y`` against ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.size != y.size:
        raise ValueError("need at least two (x, y) points of equal length")
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def entropy_from_counts(counts) -> float:
    """Shannon entropy in bits of the distribution proportional to ``counts``."""
    c = np.asarray(counts, dtype=float)
    c = c[c > 0]
    total = c.sum()
    if total <= 0:
        raise ValueError("empty distribution")
    return float(math.log2(total) - np.dot(c, np.log2(c)) / total)


def term_counts(values) -> Tuple[np.ndarray, np.ndarray]:
    """Support and multiplicities of an integer-valued table."""
    return np.unique(np.asarray(values, dtype=np.int64), return_counts=True)


def convolve_counts(a: Tuple[np.ndarray, np.ndarray],
                    b: Tuple[np.ndarray, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Distribution of the sum of two independent integer variables."""
    va, ca = a
    vb, cb = b
    if va.size * vb.size > MAX_PAIRS:
        raise ValueError(f"convolution of {va.size} x {vb.size} atoms is too large")
    sums = (va[:, None] + vb[None, :]).ravel()
    weights = (ca[:, None].astype(float) * cb[None, :]).ravel()
    support, inv = np.unique(sums, return_inverse=True)
    counts = np.rint(np.bincount(inv.ravel(), weights=weights)).astype(np.int64)
    return support, counts


def sum_entropy(tables: Sequence[np.ndarray]) -> float:
    """Entropy of the sum of independent terms, each uniform over its table."""
    if not tables:
        return 0.0
    dist = term_counts(tables[0])
    for t in tables[1:]:
        dist = convolve_counts(dist, term_counts(t))
    return entropy_from_counts(dist[1])


def receiver_tables(ch: ChannelMatrix, d: DetParams, k: int, users) -> List[np.ndarray]:
    """Quantized term of each listed user at receiver ``k``, over the alphabet."""
    xs = d.alphabet()
    return [quantized_term(d.link_scale(k, l), ch.g[k, l], xs) for l in users]


# ---------------------------------------------------------------------------
# image tables and aligned sets


def _check_table(d: DetParams) -> int:
    if d.k_users not in (2, 3):
        raise ValueError(f"exhaustive image tables need K in (2, 3), got {d.k_users}")
    size = d.alphabet_size ** (d.k_users - 1)
    if size > MAX_TABLE:
        raise ValueError(f"{size} interferer codewords exceed the enumeration limit {MAX_TABLE}")
    return size


def image_arrays(ch: ChannelMatrix, d: DetParams, x1: int = 0):
    """Interferer codewords in lexicographic order with their two images.

    Returns ``(codewords, y1, y2)``; ``codewords`` has shape ``(N, K - 1)``.
    """
    _check_table(d)
    if ch.k_users != d.k_users:
        raise ValueError(f"channel has {ch.k_users} users, params have {d.k_users}")
    if not 0 <= int(x1) <= d.input_max:
        raise ValueError(f"x1={x1} outside alphabet [0, {d.input_max}]")
    m = d.k_users - 1
    grids = np.meshgrid(*([d.alphabet()] * m), indexing="ij")
    cw = np.stack([g.ravel() for g in grids], axis=1)
    ys = []
    for k in (0, 1):
        y = np.full(cw.shape[0], int(quantized_term(d.link_scale(k, 0), ch.g[k, 0], x1)),
                    dtype=np.int64)
        for j in range(m):
            y += quantized_term(d.link_scale(k, j + 1), ch.g[k, j + 1], cw[:, j])
        ys.append(y)
    return cw, ys[0], ys[1]


def enumerate_images(ch: ChannelMatrix, d: DetParams, x1: int = 0) -> Dict[tuple, Tuple[int, int]]:
    """Map every interferer codeword ``(x_2, ..., x_K)`` to ``(y_1, y_2)``."""
    cw, y1, y2 = image_arrays(ch, d, x1)
    return {tuple(int(v) for v in row): (int(a), int(b)) for row, a, b in zip(cw, y1, y2)}


def _aligned_sets(y1: np.ndarray, y2: np.ndarray):
    """Per receiver-2 image: its probability and aligned-set size.

    The representative of each receiver-2 image is its lexicographically
    smallest codeword (first occurrence, rows are in lexicographic order).
    Two images are aligned when their representatives share a receiver-1
    image.
    """
    images, first, mult = np.unique(y2, return_index=True, return_counts=True)
    rep_y1 = y1[first]
    _, bucket, bucket_size = np.unique(rep_y1, return_inverse=True, return_counts=True)
    sizes = bucket_size[bucket.ravel()]
    return images, mult / y2.size, sizes, rep_y1


def aligned_set_stats(ch: ChannelMatrix, d: DetParams, x1: int = 0) -> AisStats:
    """Mean and max aligned-set size over receiver-2 images for one channel."""
    _, y1, y2 = image_arrays(ch, d, x1)
    _, prob, sizes, _ = _aligned_sets(y1, y2)
    return AisStats(
        p_bar=d.p_bar,
        alpha=d.alpha,
        mean_set_size=float(sizes.mean()),
        max_set_size=int(sizes.max()),
        trials=1,
        seed=None,
        weighted_mean_set_size=float(np.dot(prob, sizes)),
        n_codewords=int(y2.size),
    )


def aligned_entropy_terms(ch: ChannelMatrix, d: DetParams, x1: int = 0) -> Dict[str, float]:
    """Exact terms of the aligned-set entropy decomposition for one channel.

    ``h_y1_surrogate`` is the entropy of receiver 1's image of the
    representative codeword, a function of receiver 2's output. The chain
    ``h_y2 - h_y1_surrogate <= e_log_set <= log_e_set`` must hold.
    """
    _, y1, y2 = image_arrays(ch, d, x1)
    _, prob, sizes, rep_y1 = _aligned_sets(y1, y2)
    _, bucket = np.unique(rep_y1, return_inverse=True)
    bucket_prob = np.bincount(bucket.ravel(), weights=prob)
    return {
        "h_y2": entropy_from_counts(term_counts(y2)[1]),
        "h_y1": entropy_from_counts(term_counts(y1)[1]),
        "h_y1_surrogate": entropy_from_counts(bucket_prob),
        "e_log_set": float(np.dot(prob, np.log2(sizes))),
        "log_e_set": float(math.log2(np.dot(prob, sizes))),
    }


def _draw_x1(rng: np.random.Generator, d: DetParams) -> int:
    return int(rng.integers(0, d.input_max + 1))


def _map_draws(fn, draws: int, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, range(draws)))
    return [fn(t) for t in range(draws)]


def _check_draws(draws: int) -> int:
    if int(draws) < 1:
        raise ValueError(f"need at least one channel draw, got {draws}")
    return int(draws)


def aligned_set_average(d: DetParams, b: ChannelBounds, draws: int, seed: int = 0,
                        law: str = "uniform", threads: int = 1) -> AisStats:
    """Aligned-set statistics averaged over ``draws`` channel realizations."""
    draws = _check_draws(draws)
    gl = GainLaw(law, b)

    def one(t):
        rng = trial_rng(seed, d.p_bar, t)
        ch = ChannelMatrix(gl.sample(rng, (d.k_users, d.k_users)))
        return aligned_set_stats(ch, d, _draw_x1(rng, d))

    stats = _map_draws(one, draws, threads)
    return AisStats(
        p_bar=d.p_bar,
        alpha=d.alpha,
        mean_set_size=float(np.mean([s.mean_set_size for s in stats])),
        max_set_size=max(s.max_set_size for s in stats),
        trials=draws,
        seed=seed,
        weighted_mean_set_size=float(np.mean([s.weighted_mean_set_size for s in stats])),
        n_codewords=stats[0].n_codewords,
    )


# ---------------------------------------------------------------------------
# probability that two images align


def _interferer_part(cw, d: DetParams) -> np.ndarray:
    if isinstance(cw, DetCodeword):
        cw.check(d)
        vals = cw.x[1:]
    else:
        vals = tuple(int(v) for v in cw)
        if len(vals) != d.k_users - 1:
            raise ValueError(f"interferer codeword needs {d.k_users - 1} entries, got {len(vals)}")
        for v in vals:
            if not 0 <= v <= d.input_max:
                raise ValueError(f"input {v} outside alphabet [0, {d.input_max}]")
    return np.asarray(vals, dtype=float)


def alignment_bound(lam_minus_nu, d: DetParams, b: ChannelBounds) -> np.ndarray:
    """Bound on the probability that two receiver-2 images align at receiver 1.

    ``2 (K-1) Delta2 f_max pbar**(1-alpha) / (|lam - nu| - (K-1))`` when
    ``|lam - nu| > K - 1`` and 1 otherwise, clamped to 1. For alpha > 1 the
    pbar factor is absent.
    """
    km1 = d.k_users - 1
    factor = float(d.p_bar) ** (1.0 - d.alpha) if d.alpha <= 1 else 1.0
    gap = np.abs(np.asarray(lam_minus_nu, dtype=float)) - km1
    with np.errstate(divide="ignore"):
        raw = np.where(gap > 0, 2.0 * km1 * b.delta2 * factor * b.f_max / np.maximum(gap, 1e-300), 1.0)
    return np.minimum(raw, 1.0)


def alignment_probability(cw_a, cw_b, d: DetParams, b: ChannelBounds, trials: int,
                          seed: int = 0) -> AlignmentEstimate:
    """Monte Carlo frequency that two interferer codewords align at receiver 1.

    ``cw_a``/``cw_b`` are interferer codewords ``(x_2, ..., x_K)`` or full
    ``DetCodeword`` objects (user 1's entry is ignored; it cancels). The
    alignment bound is evaluated per draw from the receiver-2 images and
    averaged.
    """
    lam = _interferer_part(cw_a, d)
    nu = _interferer_part(cw_b, d)
    if np.array_equal(lam, nu):
        raise ValueError("codewords must differ in the interferer coordinates")
    if not b.bounded_density:
        raise ValueError("alignment bound needs a bounded gain density")
    trials = _check_draws(trials)
    K = d.k_users
    g = GainLaw("uniform", b).sample(np.random.default_rng(int(seed)), (trials, K, K))

    def image(k, vec):
        total = np.zeros(trials, dtype=np.int64)
        for j in range(1, K):
            total += np.ceil(d.link_scale(k, j) * g[:, k, j] * vec[j - 1]).astype(np.int64)
        return total

    hit = image(0, lam) == image(0, nu)
    bound = alignment_bound(image(1, lam) - image(1, nu), d, b)
    return AlignmentEstimate(float(hit.mean()), float(bound.mean()), trials)


# ---------------------------------------------------------------------------
# entropy differences


def entropy_gap_one(ch: ChannelMatrix, d: DetParams) -> Tuple[float, float]:
    """Exact ``H(y2 | x1, G)`` and ``H(y1 | x1, G)`` for one channel."""
    users = range(1, d.k_users)
    h2 = sum_entropy(receiver_tables(ch, d, 1, users))
    h1 = sum_entropy(receiver_tables(ch, d, 0, users))
    return h2, h1


def entropy_gap(d: DetParams, b: ChannelBounds, draws: int, seed: int = 0,
                law: str = "uniform", threads: int = 1) -> EntropyGap:
    """Average conditional entropy difference between receivers 2 and 1.

    ``bound`` is ``(1 - alpha) log2(pbar)`` for alpha <= 1 and 0 above.
    """
    draws = _check_draws(draws)
    gl = GainLaw(law, b)

    def one(t):
        ch = ChannelMatrix(gl.sample(trial_rng(seed, d.p_bar, t), (d.k_users, d.k_users)))
        return entropy_gap_one(ch, d)

    vals = np.array(_map_draws(one, draws, threads))
    h2, h1 = (float(v) for v in vals.mean(axis=0))
    bound = (1.0 - d.alpha) * math.log2(d.p_bar) if d.alpha <= 1 else 0.0
    return EntropyGap(d.p_bar, d.alpha, h2, h1, h2 - h1, bound, draws)


def entropy_lemma_first_bound(d: DetParams, b: ChannelBounds, draws: int, seed: int = 0,
                              law: str = "uniform", threads: int = 1) -> FirstBound:
    """``H(y1 | G) - H(x)`` against the reference ``alpha log2(pbar)``.

    With uniform inputs and a nonzero known gain, ``H(g x) = log2`` of the
    alphabet size.
    """
    draws = _check_draws(draws)
    gl = GainLaw(law, b)

    def one(t):
        ch = ChannelMatrix(gl.sample(trial_rng(seed, d.p_bar, t), (d.k_users, d.k_users)))
        return sum_entropy(receiver_tables(ch, d, 0, range(d.k_users)))

    h_y1 = float(np.mean(_map_draws(one, draws, threads)))
    h_x = math.log2(d.alphabet_size)
    return FirstBound(d.p_bar, d.alpha, h_y1, h_x, h_y1 - h_x,
                      d.alpha * math.log2(d.p_bar), draws)


def swap_entropy(beta: float, d: DetParams, law: GainLaw, draws: int, seed: int) -> float:
    """Mean over draws of ``H(sum_k ceil(pbar**beta F_k x_k) | F)``."""
    xs = d.alphabet()
    scale = float(d.p_bar) ** beta
    total = 0.0
    for t in range(draws):
        f = law.sample(trial_rng(seed, d.p_bar, t), d.k_users)
        total += sum_entropy([quantized_term(scale, fk, xs) for fk in f])
    return total / draws


def lemma2_density_swap(beta: float, alpha: float, k_users: int, p_bars: Sequence[int],
                        law_a: str, law_b: str, b: ChannelBounds, draws: int,
                        seed: int = 0) -> Lemma2Result:
    """Entropy of a quantized gain-weighted sum under two gain laws.

    Both laws see the same random stream, so identical laws give identical
    entropies. Returns per-``pbar`` rows and the least-squares slope of
    ``|H_A - H_B|`` against ``log2(pbar)``.
    """
    draws = _check_draws(draws)
    la, lb = GainLaw(law_a, b), GainLaw(law_b, b)
    la.require_bounded_density()
    lb.require_bounded_density()
    rows = []
    for pb in p_bars:
        d = DetParams(int(pb), alpha, k_users)
        ha = swap_entropy(beta, d, la, draws, seed)
        hb = swap_entropy(beta, d, lb, draws, seed)
        rows.append(Lemma2Row(d.p_bar, ha, hb, abs(ha - hb)))
    if len(rows) >= 2:
        slope = fit_slope([math.log2(r.p_bar) for r in rows], [r.abs_diff for r in rows])
    else:
        slope = float("nan")
    return Lemma2Result(float(beta), law_a, law_b, tuple(rows), slope)
