"""Parameter selection and the boys/girls marriage dictionary.

Boys are high-probability source N-blocks, girls are admissible target
segments of length N - 11M that avoid the marker detection windows, and
the dictionary is an injection boys -> girls.  Two modes: enumerative
rank/unrank (scalable, injective by construction) and explicit Hall
matching over a sampled relation (tiny scale, faithful to the relation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .automata import avoider_dfa, product_dfa
from .errors import (CapacityError, DegreeError, NoGirlsError, ParameterError,
                     ShiftcodeError)
from .markers import MarkerScheme
from .measures import MarkovMeasure
from .shiftspace import Sft, Word

WILSON_Z99 = 2.5758293035489004  # two-sided 0.99 normal quantile

# delta bound from 4(1-delta)(1-15delta) >= 3, the positive root of
# 60 d^2 - 64 d + 1 = 0
STUPID_DELTA_BOUND = (64.0 - math.sqrt(64.0 ** 2 - 240.0)) / 120.0


def log_bigint(n: int) -> float:
    """log of a positive big integer, accurate to ~1e-15 relative."""
    if n <= 0:
        raise ValueError("need a positive integer")
    b = n.bit_length()
    if b <= 512:
        return math.log(n)
    shift = b - 64
    return math.log(n >> shift) + shift * math.log(2.0)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z99):
    if trials <= 0:
        return 0.0, 1.0
    p = successes / trials
    d = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / d
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / d
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class CheckItem:
    passed: bool | None
    detail: str


@dataclass
class ParameterPack:
    """The full constant set with a reproducible per-inequality checklist."""

    eps: float
    Delta: float
    delta: float
    eta: float
    r: float
    eta_radius: int
    r_radius: int
    ell: int
    M: int
    N: int
    alpha: float
    mode: str
    h_source: float
    h_target: float
    h_joint_bound: float
    source_alphabet: int
    gap: int
    binding: str = ""
    checklist: dict = field(default_factory=dict)

    @property
    def girl_length(self) -> int:
        return self.N - 11 * self.M

    @property
    def info_region(self):
        """Relative info window [M, N-10M) within an N-block."""
        return self.M, self.N - 10 * self.M

    def scalars(self) -> dict:
        return {
            "mode": self.mode, "eps": self.eps, "Delta": self.Delta,
            "delta": self.delta, "eta": self.eta, "r": self.r,
            "eta_radius": self.eta_radius, "r_radius": self.r_radius,
            "ell": self.ell, "M": self.M, "N": self.N, "alpha": self.alpha,
            "h_source": self.h_source, "h_target": self.h_target,
            "h_joint_bound": self.h_joint_bound,
            "source_alphabet": self.source_alphabet, "gap": self.gap,
            "binding": self.binding,
        }


def _radius_for(threshold: float) -> int:
    """The integer t with threshold in (2^-(t+1), 2^-t]."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    t = int(math.floor(-math.log2(threshold)))
    if 2.0 ** (-t) < threshold:
        t -= 1
    return max(t, 0)


def max_log_cylinder(measure: MarkovMeasure, length: int) -> float:
    """max over length-n words of log mu([w]), by max-plus DP."""
    if length == 0:
        return 0.0
    v = measure._log_pi.copy()
    step = measure._log_p
    for _ in range(length - 1):
        v = np.max(v[:, None] + step, axis=0)
    return float(np.max(v))


def min_log_cylinder(measure: MarkovMeasure, length: int) -> float:
    """min over admissible length-n words of log mu([w]) (support only)."""
    if length == 0:
        return 0.0
    mask = measure.transition > 0
    step = np.where(mask, measure._log_p, math.inf)
    v = np.where(measure.stationary > 0, measure._log_pi, math.inf)
    for _ in range(length - 1):
        v = np.min(v[:, None] + step, axis=0)
    return float(np.min(v))


def choose_parameters(h_source: float, h_target: float, eps: float,
                      mode: str = "strict", overrides: dict | None = None, *,
                      source_alphabet: int = 2, gap: int = 1,
                      mu: MarkovMeasure | None = None,
                      nu: MarkovMeasure | None = None,
                      mc_samples: int = 400, kmax: int = 3,
                      seed: int = 0) -> ParameterPack:
    """Pick (Delta, delta, eta, r, ell, M, N) and evaluate the checklist.

    Strict mode derives every constant from the entropy gap: Delta is a
    tenth of the gap, delta the largest value below eps/80 admitted by the
    three delta inequalities, and N the smallest integer whose derived
    M = floor(delta N / 11) passes the decidable checklist items.
    Practical mode accepts user N, M, delta, alpha and only records the
    checklist outcomes.
    """
    if not h_target > h_source > 0:
        raise ParameterError(
            f"need h_target > h_source > 0, got {h_source} vs {h_target}")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    if mode not in ("strict", "practical"):
        raise ParameterError(f"unknown mode {mode!r}")
    overrides = dict(overrides or {})

    Delta = (h_target - h_source) / 10.0
    h_joint_bound = h_source + h_target
    bounds = {
        "en-cap-delta": Delta / (1.0 + h_joint_bound),
        "part-cap-delta": eps * Delta / (16.0 * (1.0 + math.log(source_alphabet))),
        "stupid": STUPID_DELTA_BOUND,
        "eps-over-80": eps / 80.0,
    }
    binding = min(bounds, key=bounds.get)
    delta_star = bounds[binding]
    if binding != "stupid":
        delta_star *= 1.0 - 1e-12  # those three inequalities are strict
    delta = overrides.get("delta", delta_star)

    eta = eps / 13.0          # paper range eta < eps/12
    r = eta / 11.0            # paper range r < eta/10
    eta_radius = _radius_for(eta)
    r_radius = _radius_for(r)
    ell = int(math.floor(10.0 / eta)) + 1
    alpha = overrides.get("alpha", delta * delta / 22.0)

    def m_of(n):
        return int(math.floor(delta * n / 11.0))

    m_floor = max(gap + 1, int(math.floor(math.log2(1.0 / r))) + 1)
    if nu is not None:
        m = m_floor
        while max_log_cylinder(nu, 2 * m) >= math.log(alpha / m):
            m += 1
            if m > 10 ** 6:
                raise ParameterError("marker condition (e) unattainable")
        m_floor = m

    if mode == "strict":
        if delta <= 0:
            raise ParameterError("derived delta is non-positive")
        n = max(int(math.ceil(math.log(2.0) / Delta)) + 1,
                int(math.ceil(1.0 / delta)) + 1,
                int(math.ceil(11.0 * m_floor / delta)))
        while m_of(n) < m_floor and n <= 10 ** 9:
            n += 1
        if n > 10 ** 9:
            raise ParameterError(
                f"strict mode infeasible within N <= 1e9; binding constraint "
                f"is {binding} (delta = {delta:.3e})")
        N = n
        M = m_of(N)
    else:
        if "N" not in overrides:
            raise ParameterError("practical mode requires an N override")
        N = int(overrides["N"])
        M = int(overrides.get("M", max(1, m_of(N))))
    if N - 11 * M < 1:
        raise ParameterError(f"N - 11M = {N - 11 * M} < 1")

    pack = ParameterPack(eps=eps, Delta=Delta, delta=delta, eta=eta, r=r,
                         eta_radius=eta_radius, r_radius=r_radius, ell=ell,
                         M=M, N=N, alpha=alpha, mode=mode,
                         h_source=h_source, h_target=h_target,
                         h_joint_bound=h_joint_bound,
                         source_alphabet=source_alphabet, gap=gap,
                         binding=binding)
    _fill_checklist(pack, bounds, mu=mu, nu=nu, mc_samples=mc_samples,
                    kmax=kmax, seed=seed)
    if mode == "strict":
        failed = [k for k in ("a", "b", "c", "d", "e")
                  if pack.checklist[k].passed is False]
        if failed:
            raise ParameterError(f"strict checklist items failed: {failed}")
    return pack


def _fill_checklist(pack, bounds, *, mu, nu, mc_samples, kmax, seed):
    cl = pack.checklist
    d, D, e = pack.delta, pack.Delta, pack.eps

    cl["en-cap-delta"] = CheckItem(
        d * (1 + pack.h_joint_bound) < D,
        f"delta(1+h_joint) = {d * (1 + pack.h_joint_bound):.6g} < Delta = {D:.6g} "
        f"(bound {bounds['en-cap-delta']:.6g})")
    cl["part-cap-delta"] = CheckItem(
        16 * d * (1 + math.log(pack.source_alphabet)) < e * D,
        f"16 delta (1+log|P|) = {16 * d * (1 + math.log(pack.source_alphabet)):.6g} "
        f"< eps Delta = {e * D:.6g} (bound {bounds['part-cap-delta']:.6g})")
    cl["stupid"] = CheckItem(
        4 * (1 - d) * (1 - 15 * d) >= 3,
        f"4(1-delta)(1-15delta) = {4 * (1 - d) * (1 - 15 * d):.6g} >= 3")
    cl["choice-of-con"] = CheckItem(
        120 * pack.r < e and 80 * d < e and 12 * pack.eta < e,
        f"120r = {120 * pack.r:.6g}, 80delta = {80 * d:.6g}, "
        f"12eta = {12 * pack.eta:.6g} all < eps = {e:.6g}")
    cl["theM"] = CheckItem(
        pack.mode == "practical" or pack.M == int(math.floor(d * pack.N / 11)),
        f"M = {pack.M}, floor(delta N / 11) = {int(math.floor(d * pack.N / 11))}")

    cl["a"] = CheckItem(pack.N * D > math.log(2),
                        f"N Delta = {pack.N * D:.6g} > log 2")
    cl["b"] = CheckItem(2.0 ** (-pack.M) < pack.r,
                        f"2^-M = {2.0 ** (-pack.M):.3e} < r = {pack.r:.3e}")
    cl["c"] = CheckItem(1.0 / pack.N < d, f"1/N = {1.0 / pack.N:.3e} < delta = {d:.3e}")
    cl["d"] = CheckItem(pack.gap < pack.M,
                        f"gap L = {pack.gap} < M = {pack.M}")
    if nu is not None:
        worst = max_log_cylinder(nu, 2 * pack.M)
        ok = worst < math.log(pack.alpha / pack.M)
        cl["e"] = CheckItem(ok,
                            f"max 2M-cylinder log-prob {worst:.6g} "
                            f"{'<' if ok else '>='} log(alpha/M) = "
                            f"{math.log(pack.alpha / pack.M):.6g}")
    else:
        cl["e"] = CheckItem(None, "alpha/M bound not evaluated (no target measure)")

    if mu is not None and nu is not None:
        _estimate_condition_sets(pack, mu, nu, mc_samples, kmax, seed)
    else:
        for i in range(1, 6):
            cl[f"s{i}"] = CheckItem(None, "not estimated (measures not supplied)")
    cl["s6"] = CheckItem(True, "cylinder partitions have empty boundary in "
                               "subshift targets; the Cesaro average is 0")


def _estimate_condition_sets(pack, mu, nu, samples, kmax, seed):
    """Monte-Carlo masses of the five sampled condition sets, with 0.99
    Wilson intervals; an item passes when the interval lower bound clears
    1 - delta."""
    from .estimators import BlockDistribution, weakstar_surrogate
    N, M = pack.N, pack.M
    t = pack.eta_radius
    t2 = max(pack.eta_radius - 1, 0)   # radius for threshold 2 eta
    d = pack.delta
    win_lo, win_hi = M - t2, N - 10 * M + t2
    hits = {k: 0 for k in ("s1", "s2", "s3", "s4", "s5")}
    exact_joint = None
    if kmax >= 1:
        exact_mu = [BlockDistribution.exact(mu, k) for k in range(1, kmax + 1)]
        exact_nu = [BlockDistribution.exact(nu, k) for k in range(1, kmax + 1)]
        exact_joint = []
        for k in range(kmax):
            freqs = {}
            for wa, pa in exact_mu[k].freqs.items():
                for wb, pb in exact_nu[k].freqs.items():
                    freqs[tuple(zip(wa, wb))] = pa * pb
            exact_joint.append(BlockDistribution(k + 1, freqs))
    for i in range(samples):
        x = mu.sample_path(N + 2 * t + 1, seed=(seed, 1, i))
        y = nu.sample_path(N + 2 * t + 1, seed=(seed, 2, i))
        x = Word(x.symbols, -t)
        y = Word(y.symbols, -t)
        lmx = mu.log_cylinder_probability(x.window(-t, N + t))
        lny = nu.log_cylinder_probability(y.window(-t, N + t))
        lmx2 = mu.log_cylinder_probability(x.window(win_lo, win_hi))
        lny2 = nu.log_cylinder_probability(y.window(win_lo, win_hi))
        if lmx > -(pack.h_source + pack.Delta) * N:
            hits["s1"] += 1
        if lny2 < -(pack.h_target - pack.Delta) * N:
            hits["s2"] += 1
        if lmx2 + lny2 < -(pack.h_joint_bound - pack.Delta) * N:
            hits["s3"] += 1
        if lmx + lny > -(pack.h_joint_bound + pack.Delta) * N:
            hits["s4"] += 1
        if exact_joint is not None:
            pair = [(int(a), int(b)) for a, b in
                    zip(x.window(M, N - 10 * M).symbols,
                        y.window(M, N - 10 * M).symbols)]
            emp = [BlockDistribution.from_word(pair, k) for k in range(1, kmax + 1)]
            if weakstar_surrogate(emp, exact_joint, kmax) < pack.eps / 12:
                hits["s5"] += 1
    for key, h in hits.items():
        lo, hi = wilson_interval(h, samples)
        pack.checklist[key] = CheckItem(
            lo > 1 - d,
            f"estimate {h}/{samples} = {h / samples:.4f}, "
            f"0.99 CI [{lo:.4f}, {hi:.4f}] vs 1-delta = {1 - d:.4f}")


# ---------------------------------------------------------------------------
# boys


class BoySet:
    """Source N-blocks whose cylinder probability clears the threshold."""

    def __init__(self, mu: MarkovMeasure, N: int, log_threshold: float):
        self.mu = mu
        self.N = N
        self.log_threshold = log_threshold

    # subclasses: count, mass, member, rank, unrank

    def iter_members(self):
        for i in range(self.count):
            yield self.unrank(i)


class _UniformBoys(BoySet):
    """Every admissible N-block is a boy (threshold below the minimum)."""

    def __init__(self, mu, N, log_threshold):
        super().__init__(mu, N, log_threshold)
        from .shiftspace import count_words
        self.count = count_words(mu.sft, N)
        self.mass = 1.0
        self._full = mu.sft.is_full_shift()
        self._m = mu.sft.alphabet_size

    def member(self, word: Word) -> bool:
        return len(word) == self.N and self.mu.sft.is_admissible(word)

    def rank(self, word: Word) -> int:
        if not self.member(word):
            raise ValueError("not a boy")
        if self._full:
            r = 0
            for a in word.symbols.tolist():
                r = r * self._m + a
            return r
        return self.mu.sft.factor_dfa().rank(word.symbols.tolist())

    def unrank(self, r: int) -> Word:
        if self._full:
            if not 0 <= r < self.count:
                raise ValueError("rank out of range")
            digits = np.zeros(self.N, dtype=np.uint8)
            v = r
            for pos in range(self.N - 1, -1, -1):
                digits[pos] = v % self._m
                v //= self._m
            return Word(digits)
        return Word(np.array(self.mu.sft.factor_dfa().unrank(self.N, r),
                             dtype=np.uint8))


class _BinomialBoys(BoySet):
    """Bernoulli(p) on two symbols: membership is a one-count range."""

    def __init__(self, mu, N, log_threshold):
        super().__init__(mu, N, log_threshold)
        p = mu.transition[0]
        self.lp0, self.lp1 = math.log(p[0]), math.log(p[1])
        ks = [k for k in range(N + 1)
              if k * self.lp1 + (N - k) * self.lp0 >= log_threshold]
        if not ks:
            raise ParameterError("threshold excludes every block")
        self.k_lo, self.k_hi = min(ks), max(ks)
        assert self.k_hi - self.k_lo + 1 == len(ks), "one-count set not contiguous"
        self.count = sum(math.comb(N, k) for k in ks)
        self.mass = math.fsum(
            math.comb(N, k) * math.exp(k * self.lp1 + (N - k) * self.lp0)
            for k in ks)
        self._cum = {}

    def _cum_row(self, m: int):
        row = self._cum.get(m)
        if row is None:
            row = [0] * (m + 2)
            for j in range(m + 1):
                row[j + 1] = row[j] + math.comb(m, j)
            self._cum[m] = row
        return row

    def _completions(self, m: int, ones: int) -> int:
        """Number of length-m suffixes keeping the total one-count in range."""
        lo = max(0, self.k_lo - ones)
        hi = min(m, self.k_hi - ones)
        if hi < lo:
            return 0
        row = self._cum_row(m)
        return row[hi + 1] - row[lo]

    def member(self, word: Word) -> bool:
        if len(word) != self.N:
            return False
        ones = int(np.sum(word.symbols == 1))
        return self.k_lo <= ones <= self.k_hi

    def rank(self, word: Word) -> int:
        if not self.member(word):
            raise ValueError("not a boy")
        r = 0
        ones = 0
        for i, b in enumerate(word.symbols.tolist()):
            if b == 1:
                r += self._completions(self.N - i - 1, ones)
                ones += 1
        return r

    def unrank(self, r: int) -> Word:
        if not 0 <= r < self.count:
            raise ValueError("rank out of range")
        out = np.zeros(self.N, dtype=np.uint8)
        ones = 0
        for i in range(self.N):
            c0 = self._completions(self.N - i - 1, ones)
            if r < c0:
                out[i] = 0
            else:
                r -= c0
                out[i] = 1
                ones += 1
        return Word(out)


class _EnumeratedBoys(BoySet):
    """Explicit small-N member list; supports joining-guided filtering."""

    MAX_N = 24

    def __init__(self, mu, N, log_threshold, u_samples=None):
        super().__init__(mu, N, log_threshold)
        if N > self.MAX_N:
            raise ParameterError(
                f"enumerated boys limited to N <= {self.MAX_N}, got {N}")
        from .shiftspace import enumerate_words
        counts = {}
        if u_samples is not None:
            for x, _y in u_samples:
                key = x.window(x.lo, x.lo + N).symbols.tobytes()
                counts[key] = counts.get(key, 0) + 1
        members = []
        self.mass = 0.0
        for w in enumerate_words(mu.sft, N):
            lp = mu.log_cylinder_probability(w)
            if lp < log_threshold:
                continue
            if u_samples is not None:
                est = counts.get(w.symbols.tobytes(), 0) / max(len(u_samples), 1)
                if est < 0.5 * math.exp(lp):
                    continue
            members.append(w)
            self.mass += math.exp(lp)
        self._members = members
        self._index = {w.symbols.tobytes(): i for i, w in enumerate(members)}
        self.count = len(members)

    def member(self, word) -> bool:
        return len(word) == self.N and word.symbols.tobytes() in self._index

    def rank(self, word) -> int:
        try:
            return self._index[word.symbols.tobytes()]
        except KeyError:
            raise ValueError("not a boy") from None

    def unrank(self, r: int) -> Word:
        return self._members[r]


def boys(mu: MarkovMeasure, pack: ParameterPack, u_samples=None) -> BoySet:
    """The boy set for the pack: plain measure-threshold mode, or
    joining-guided when aligned samples are supplied."""
    log_threshold = -pack.N * (pack.h_source + pack.Delta)
    if u_samples is not None:
        return _EnumeratedBoys(mu, pack.N, log_threshold, u_samples)
    if min_log_cylinder(mu, pack.N) >= log_threshold:
        return _UniformBoys(mu, pack.N, log_threshold)
    p = mu.transition
    if (mu.sft.k == 1 and mu.sft.alphabet_size == 2
            and np.allclose(p[0], p[1]) and np.all(p > 0)):
        return _BinomialBoys(mu, pack.N, log_threshold)
    return _EnumeratedBoys(mu, pack.N, log_threshold)


# ---------------------------------------------------------------------------
# girls


class GirlSet:
    """Admissible target words of length N - 11M avoiding the marker
    windows, with exact counting and lex rank/unrank over the product of
    the SFT factor automaton and the window-avoidance automaton."""

    RANK_CELL_LIMIT = 5_000_000

    def __init__(self, sft: Sft, pack: ParameterPack,
                 scheme: MarkerScheme | None,
                 s2_measure: MarkovMeasure | None = None):
        if scheme is not None and scheme.M != pack.M:
            raise ParameterError("marker scheme M differs from pack M")
        self.length = pack.girl_length
        if self.length < 1:
            raise ParameterError("N - 11M must be >= 1")
        self.sft = sft
        self.pack = pack
        self.scheme = scheme
        if scheme is None:
            self.dfa = sft.factor_dfa()
        else:
            patterns = [scheme.h1_window.symbols.tolist(),
                        scheme.h2_window.symbols.tolist()]
            self.dfa = product_dfa(sft.factor_dfa(),
                                   avoider_dfa(sft.alphabet_size, patterns))
        self._s2 = None
        if s2_measure is not None:
            bound = -(pack.h_target - pack.Delta) * pack.N
            self._s2 = (s2_measure, bound)
            self._members = [w for w in self._iter_plain()
                             if s2_measure.log_cylinder_probability(w) < bound]
            self._index = {w.symbols.tobytes(): i
                           for i, w in enumerate(self._members)}
            self.count = len(self._members)
        else:
            self.count = self.dfa.count(self.length)
        if self.count == 0:
            raise NoGirlsError("no girls: every candidate word was filtered")

    def _iter_plain(self):
        if self.length * self.dfa.n_nodes > self.RANK_CELL_LIMIT:
            raise ParameterError("girl enumeration too large for s2 filtering")
        for sym in self.dfa.enumerate(self.length):
            yield Word(np.array(sym, dtype=np.uint8))

    def member(self, word: Word) -> bool:
        if len(word) != self.length:
            return False
        if self._s2 is not None:
            return word.symbols.tobytes() in self._index
        return self.dfa.walk(word.symbols.tolist()) >= 0

    def _check_rank_size(self):
        if self.length * self.dfa.n_nodes > self.RANK_CELL_LIMIT:
            raise ParameterError(
                "rank/unrank table would be too large at this scale")

    def rank(self, word: Word) -> int:
        if not self.member(word):
            raise ValueError("not a girl")
        if self._s2 is not None:
            return self._index[word.symbols.tobytes()]
        self._check_rank_size()
        return self.dfa.rank(word.symbols.tolist())

    def unrank(self, r: int) -> Word:
        if self._s2 is not None:
            return self._members[r]
        self._check_rank_size()
        return Word(np.array(self.dfa.unrank(self.length, r), dtype=np.uint8))

    def iter_members(self):
        for i in range(self.count):
            yield self.unrank(i)


def girls(sft: Sft, pack: ParameterPack, scheme: MarkerScheme,
          s2_measure: MarkovMeasure | None = None) -> GirlSet:
    return GirlSet(sft, pack, scheme, s2_measure)


# ---------------------------------------------------------------------------
# relation and matching


@dataclass
class Relation:
    """Sampled bipartite relation with a witness index per edge."""

    edges: dict                 # boy string -> sorted list of girl strings
    witnesses: dict             # (boy string, girl string) -> sample index
    boy_words: dict = field(default_factory=dict)
    girl_words: dict = field(default_factory=dict)

    def boy_degree(self, b: str) -> int:
        return len(self.edges.get(b, ()))

    def girl_degrees(self) -> dict:
        deg: dict = {}
        for gs in self.edges.values():
            for g in gs:
                deg[g] = deg.get(g, 0) + 1
        return deg


def build_relation(boy_set: BoySet, girl_set: GirlSet, paired_samples,
                   pack: ParameterPack, u_filter=None) -> Relation:
    """(B, g) is an edge iff some sample pair has x-block B and girl
    window g; pairs failing the optional U filter contribute nothing."""
    N = pack.N
    lo, hi = pack.info_region
    edges: dict = {}
    witnesses: dict = {}
    boy_words: dict = {}
    girl_words: dict = {}
    for idx, (x, y) in enumerate(paired_samples):
        if u_filter is not None and not u_filter(x, y):
            continue
        b = x.window(x.lo, x.lo + N).rebase()
        g = y.window(y.lo + lo, y.lo + hi).rebase()
        if not boy_set.member(b) or not girl_set.member(g):
            continue
        bs, gs = b.to_string(), g.to_string()
        boy_words[bs] = b
        girl_words[gs] = g
        bucket = edges.setdefault(bs, [])
        if gs not in bucket:
            bucket.append(gs)
            witnesses[(bs, gs)] = idx
    for bucket in edges.values():
        bucket.sort()
    return Relation(edges, witnesses, boy_words, girl_words)


def make_u_filter(pack: ParameterPack, mu: MarkovMeasure, nu: MarkovMeasure,
                  scheme: MarkerScheme | None = None):
    """Per-sample membership test for the good-pair set: the four
    window-measure thresholds plus marker-window avoidance on the target
    side, each evaluated exactly from the measures."""
    N, M, D = pack.N, pack.M, pack.Delta

    def u_filter(x: Word, y: Word) -> bool:
        xw = x.window(x.lo, x.lo + N)
        yw = y.window(y.lo, y.lo + N)
        lmx = mu.log_cylinder_probability(xw)
        lny = nu.log_cylinder_probability(yw)
        xi = x.window(x.lo + M, x.lo + N - 10 * M)
        yi = y.window(y.lo + M, y.lo + N - 10 * M)
        lmx2 = mu.log_cylinder_probability(xi)
        lny2 = nu.log_cylinder_probability(yi)
        if lmx <= -(pack.h_source + D) * N:
            return False
        if lny2 >= -(pack.h_target - D) * N:
            return False
        if lmx2 + lny2 >= -(pack.h_joint_bound - D) * N:
            return False
        if lmx + lny <= -(pack.h_joint_bound + D) * N:
            return False
        if scheme is not None:
            from .markers import avoidance_filter
            if not list(avoidance_filter([yw.rebase()], scheme, N)):
                return False
        return True

    return u_filter


def hall_match(relation: Relation, K: int) -> dict:
    """Injection boys -> girls inside the relation via Hopcroft-Karp.

    Preconditions from the marriage theorem: every boy degree >= K and
    every girl degree <= K; K > 0.
    """
    if K < 1:
        raise ParameterError("K must be a positive integer")
    for b in sorted(relation.edges):
        if relation.boy_degree(b) < K:
            raise DegreeError(
                f"boy {b} has degree {relation.boy_degree(b)} < K = {K}",
                vertex=b)
    for g, deg in sorted(relation.girl_degrees().items()):
        if deg > K:
            raise DegreeError(f"girl {g} has degree {deg} > K = {K}", vertex=g)
    matching = _hopcroft_karp(relation.edges)
    if len(matching) != len(relation.edges):
        raise ShiftcodeError(
            "internal inconsistency: matching smaller than the boy set "
            "despite valid degrees")
    return matching


def _hopcroft_karp(adj: dict) -> dict:
    """Maximum bipartite matching; deterministic under sorted iteration."""
    INF = float("inf")
    pair_b: dict = {}
    pair_g: dict = {}
    dist: dict = {}
    lefts = sorted(adj)

    def bfs() -> bool:
        from collections import deque
        queue = deque()
        for b in lefts:
            if b not in pair_b:
                dist[b] = 0
                queue.append(b)
            else:
                dist[b] = INF
        found = INF
        while queue:
            b = queue.popleft()
            if dist[b] < found:
                for g in adj[b]:
                    nxt = pair_g.get(g)
                    if nxt is None:
                        found = dist[b] + 1
                    elif dist[nxt] == INF:
                        dist[nxt] = dist[b] + 1
                        queue.append(nxt)
        return found != INF

    def dfs(b) -> bool:
        for g in adj[b]:
            nxt = pair_g.get(g)
            if nxt is None or (dist[nxt] == dist[b] + 1 and dfs(nxt)):
                pair_b[b] = g
                pair_g[g] = b
                return True
        dist[b] = INF
        return False

    while bfs():
        for b in lefts:
            if b not in pair_b:
                dfs(b)
    return pair_b


def marriage_bound(pack: ParameterPack, h_joint: float, h_source: float) -> float:
    """log K = log(1/2) + N (h_joint - h_source - 2 Delta)."""
    return math.log(0.5) + pack.N * (h_joint - h_source - 2 * pack.Delta)


# ---------------------------------------------------------------------------
# the dictionary itself


@dataclass
class Dictionary:
    """Injective map boys -> girls, enumerative or explicit."""

    mode: str
    boys: BoySet
    girls: GirlSet
    table: dict | None = None       # hall mode: boy string -> girl string
    inverse: dict | None = None
    provenance: dict = field(default_factory=dict)

    def lookup(self, boy_word: Word) -> Word:
        if self.mode == "hall":
            return Word.from_string(self.table[boy_word.to_string()])
        return self.girls.unrank(self.boys.rank(boy_word))

    def invert(self, girl_word: Word):
        """The boy mapped to this girl, or None when none is."""
        if self.mode == "hall":
            b = self.inverse.get(girl_word.to_string())
            return Word.from_string(b) if b is not None else None
        try:
            r = self.girls.rank(girl_word)
        except ValueError:
            return None
        if r < self.boys.count:
            return self.boys.unrank(r)
        return None

    def invert_nearest(self, window: Word):
        """Hall-mode decoder fallback: argmin Hamming distance over the
        mapped girls, ties broken lexicographically by boy."""
        if self.mode != "hall":
            return self.invert(window)
        best = None
        for b in sorted(self.table):
            g = self.table[b]
            dist = sum(1 for a, c in zip(g, window.to_string()) if a != c)
            if best is None or dist < best[0]:
                best = (dist, b)
        return Word.from_string(best[1]) if best else None


def dictionary(boy_set: BoySet, girl_set: GirlSet, mode: str = "enumerative",
               relation: Relation | None = None, K: int | None = None,
               pack: ParameterPack | None = None) -> Dictionary:
    """Build the injection, checking capacity (enumerative) or the Hall
    degree conditions (explicit matching over a relation)."""
    if mode == "enumerative":
        nb, ng = boy_set.count, girl_set.count
        if nb > ng:
            diag = ""
            if pack is not None:
                need = pack.N * (pack.h_target - pack.h_source - 2 * pack.Delta)
                diag = (f"; ratio diagnostic: log(|G|/|B|) = "
                        f"{log_bigint(ng) - log_bigint(nb):.6g} "
                        f"vs required {need:.6g}")
            raise CapacityError(
                f"capacity failure: {nb} boys > {ng} girls{diag}",
                n_boys=nb, n_girls=ng)
        return Dictionary("enumerative", boy_set, girl_set,
                          provenance=_provenance(boy_set, girl_set, pack))
    if mode == "hall":
        if relation is None or K is None:
            raise ParameterError("hall mode needs a relation and K")
        table = hall_match(relation, K)
        inverse = {g: b for b, g in table.items()}
        prov = _provenance(boy_set, girl_set, pack)
        prov["K"] = K
        return Dictionary("hall", boy_set, girl_set, table=table,
                          inverse=inverse, provenance=prov)
    raise ParameterError(f"unknown dictionary mode {mode!r}")


def _provenance(boy_set, girl_set, pack):
    out = {"n_boys": boy_set.count, "n_girls": girl_set.count,
           "girl_length": girl_set.length}
    if pack is not None:
        out["pack"] = pack.scalars()
    if girl_set.scheme is not None:
        out["marker"] = girl_set.scheme.serialize()
    return out


@dataclass
class BoundsReport:
    """Exact truth values of the four counting predicates."""

    log_girls: float
    log_boys: float
    boy_mass: float
    girls_exceed: bool          # log|G| > log(1/2) + N(h_target - Delta)
    boys_below: bool            # log|B| <= N(h_source + Delta)
    mass_exceeds: bool          # mu(union of boys) > 1 - 15 delta
    ratio_holds: bool           # log(|G|/|B|) >= N(h_target - h_source - 2 Delta)
    details: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return (self.girls_exceed and self.boys_below and self.mass_exceeds
                and self.ratio_holds)


def verify_dictionary_bounds(boy_set: BoySet, girl_set: GirlSet,
                             pack: ParameterPack, h_source: float,
                             h_target: float) -> BoundsReport:
    lg = log_bigint(girl_set.count)
    lb = log_bigint(boy_set.count)
    n, D = pack.N, pack.Delta
    girls_rhs = math.log(0.5) + n * (h_target - D)
    boys_rhs = n * (h_source + D)
    ratio_rhs = n * (h_target - h_source - 2 * D)
    return BoundsReport(
        log_girls=lg, log_boys=lb, boy_mass=boy_set.mass,
        girls_exceed=lg > girls_rhs,
        boys_below=lb <= boys_rhs,
        mass_exceeds=boy_set.mass > 1 - 15 * pack.delta,
        ratio_holds=lg - lb >= ratio_rhs,
        details={"girls_rhs": girls_rhs, "boys_rhs": boys_rhs,
                 "ratio_rhs": ratio_rhs, "ratio_lhs": lg - lb,
                 "mass_rhs": 1 - 15 * pack.delta})
