"""Computable entropy functionals: window-measure and return-time
estimators, the normalized-Hamming d-bar upper bound, and a weighted
total-variation surrogate for the weak* distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoverageError, NoReturnError
from .measures import MarkovMeasure
from .shiftspace import Word

DW_DEFAULT_BOUND = 10 ** 7


def binary_entropy(eta: float) -> float:
    """H(eta) = -eta log eta - (1-eta) log(1-eta), endpoints 0, in nats."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    if eta in (0.0, 1.0):
        return 0.0
    return -eta * math.log(eta) - (1.0 - eta) * math.log(1.0 - eta)


def dbar_entropy_bound(eta: float, alphabet_size: int) -> float:
    """Entropy-difference bound H(eta) + eta log |alphabet| valid whenever
    two processes are within d-bar distance eta."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    return binary_entropy(eta) + eta * math.log(alphabet_size)


def dbar_sample_upper(u: Word, v: Word) -> float:
    """Normalized Hamming distance: the identity-time coupling upper bound
    for d-bar between the empirical processes of two equal-length words."""
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} vs {len(v)}")
    if len(u) == 0:
        raise ValueError("words must be non-empty")
    return float(np.mean(u.symbols != v.symbols))


def bk_estimate(measure: MarkovMeasure, x: Word, n: int, radius: int = 0) -> float:
    """Finite-n window-measure entropy estimate.

    Returns -(1/n) log mu(cylinder of x on [-radius, n+radius)), the exact
    measure of the Bowen window around the sample.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = -radius, n + radius
    if not x.covers(lo, hi):
        raise CoverageError(f"x covers [{x.lo}, {x.hi}), needs [{lo}, {hi})")
    lp = measure.log_cylinder_probability(x.window(lo, hi))
    return -lp / n


def dw_estimate(z: Word, n: int, radius: int = 0, search_bound: int | None = None) -> float:
    """Return-time entropy estimate: (1/n) log of the first shift i > 0
    whose window [-radius, n+radius) agrees with the unshifted one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = -radius, n + radius
    if not z.covers(lo, hi):
        raise CoverageError(f"z covers [{z.lo}, {z.hi}), needs [{lo}, {hi})")
    avail = z.hi - hi
    bound = min(search_bound if search_bound is not None else DW_DEFAULT_BOUND,
                avail, DW_DEFAULT_BOUND)
    if bound < 1:
        raise NoReturnError(bound)
    hay = z.symbols.tobytes()
    start = lo - z.lo
    pattern = hay[start:hi - z.lo]
    pos = hay.find(pattern, start + 1, start + bound + len(pattern))
    if pos < 0:
        raise NoReturnError(bound)
    return math.log(pos - start) / n


@dataclass
class BlockDistribution:
    """Empirical distribution of length-k blocks of a sample."""

    k: int
    freqs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("block length must be >= 1")
        if self.freqs:
            total = math.fsum(self.freqs.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"frequencies sum to {total}, not 1")

    @classmethod
    def from_word(cls, word, k: int) -> "BlockDistribution":
        symbols = word.symbols if isinstance(word, Word) else word
        symbols = [tuple(s) if isinstance(s, (list, np.ndarray)) else s
                   for s in (symbols.tolist() if isinstance(symbols, np.ndarray) else list(symbols))]
        n = len(symbols) - k + 1
        if n < 1:
            raise ValueError("word shorter than block length")
        counts: dict = {}
        block = tuple(symbols[:k])
        counts[block] = 1
        for i in range(1, n):
            block = block[1:] + (symbols[i + k - 1],)
            counts[block] = counts.get(block, 0) + 1
        return cls(k, {b: c / n for b, c in counts.items()})

    @classmethod
    def exact(cls, measure: MarkovMeasure, k: int) -> "BlockDistribution":
        """The true k-block distribution of a Markov measure."""
        from .shiftspace import enumerate_words
        freqs = {}
        for w in enumerate_words(measure.sft, k):
            p = measure.cylinder_probability(w)
            if p > 0:
                freqs[tuple(int(a) for a in w.symbols)] = p
        return cls(k, freqs)


def total_variation(a: BlockDistribution, b: BlockDistribution) -> float:
    if a.k != b.k:
        raise ValueError("block lengths differ")
    keys = set(a.freqs) | set(b.freqs)
    return 0.5 * math.fsum(abs(a.freqs.get(x, 0.0) - b.freqs.get(x, 0.0)) for x in keys)


def weakstar_surrogate(a, b, kmax: int) -> float:
    """sum_{k=1}^{kmax} 2^-k TV(a_k, b_k) between two block-distribution
    families; a computable stand-in for the Lipschitz weak* distance."""
    a_by_k = {d.k: d for d in a}
    b_by_k = {d.k: d for d in b}
    needed = set(range(1, kmax + 1))
    if not needed <= set(a_by_k) or not needed <= set(b_by_k):
        raise ValueError(f"both families must cover k = 1..{kmax}")
    return math.fsum(2.0 ** (-k) * total_variation(a_by_k[k], b_by_k[k])
                     for k in needed)


def empirical_family(word, kmax: int):
    """Block distributions of a sample for k = 1..kmax."""
    return [BlockDistribution.from_word(word, k) for k in range(1, kmax + 1)]


def estimator_report(estimator: str, n: int, value: float,
                     seed: int | None = None) -> str:
    """One key=value report line, e.g. ``estimator=bk n=100 value=0.69``."""
    line = f"estimator={estimator} n={n} value={value:.12g}"
    if seed is not None:
        line += f" seed={seed}"
    return line
