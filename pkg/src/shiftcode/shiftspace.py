"""Shifts of finite type: words, adjacency structure, entropy, mixing gap.

Every SFT is recoded internally to a memory-1 vertex shift whose vertices
are the admissible k-words (k = max(memory, 1)); all matrix computations
run on that form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .automata import Dfa
from .errors import CoverageError, EmptySftError, NotMixingError

MAX_TEXT_ALPHABET = 10  # text format writes symbols as single digits


@dataclass(frozen=True)
class Word:
    """A finite block of symbols anchored at an absolute start coordinate."""

    symbols: np.ndarray
    base: int = 0

    def __post_init__(self):
        arr = np.asarray(self.symbols, dtype=np.uint8)
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)

    @classmethod
    def from_string(cls, text: str, base: int = 0) -> "Word":
        return cls(np.array([int(c) for c in text], dtype=np.uint8), base)

    def __len__(self) -> int:
        return len(self.symbols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Word):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash((self.base, self.symbols.tobytes()))

    @property
    def lo(self) -> int:
        return self.base

    @property
    def hi(self) -> int:
        return self.base + len(self.symbols)

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def at(self, coord: int) -> int:
        if not self.lo <= coord < self.hi:
            raise CoverageError(f"coordinate {coord} outside [{self.lo}, {self.hi})")
        return int(self.symbols[coord - self.base])

    def window(self, lo: int, hi: int) -> "Word":
        """The sub-block on [lo, hi), keeping absolute coordinates."""
        if not self.covers(lo, hi):
            raise CoverageError(
                f"word covers [{self.lo}, {self.hi}), needs [{lo}, {hi})")
        return Word(self.symbols[lo - self.base:hi - self.base], lo)

    def rebase(self, base: int = 0) -> "Word":
        return Word(self.symbols, base)

    def to_string(self) -> str:
        return "".join(str(int(a)) for a in self.symbols)

    def __repr__(self) -> str:
        s = self.to_string()
        if len(s) > 40:
            s = s[:37] + "..."
        return f"Word('{s}', base={self.base})"


@dataclass(frozen=True)
class WindowMetricParams:
    """Coordinate window [lo, hi) widened by a symbol radius.

    The radius is the symbolic translation of a metric threshold: with the
    metric d(x, y) = 2^(-min{|k|: x_k != y_k}), a threshold in
    (2^-(t+1), 2^-t] compares coordinates within distance t of the window.
    """

    lo: int
    hi: int
    radius: int = 0

    def __post_init__(self):
        if self.hi <= self.lo:
            raise ValueError("hi must exceed lo")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")


class Sft:
    """A subshift of finite type, pruned to its essential part.

    Attributes
    ----------
    alphabet_size : symbol count of the original alphabet
    memory : max forbidden-word length minus one (0 for a full shift)
    states : tuple of admissible k-words, k = max(memory, 1), in lex order
    adjacency : 0/1 matrix over states
    """

    def __init__(self, alphabet_size: int, forbidden=()):
        if alphabet_size < 1:
            raise ValueError("alphabet_size must be >= 1")
        canon = set()
        for w in forbidden:
            sym = tuple(int(a) for a in (w.symbols if isinstance(w, Word) else
                                         (int(c) for c in w) if isinstance(w, str) else w))
            if len(sym) == 0:
                raise ValueError("forbidden words must have length >= 1")
            if any(a < 0 or a >= alphabet_size for a in sym):
                raise ValueError(f"forbidden word {sym} uses symbols >= {alphabet_size}")
            canon.add(sym)
        self.alphabet_size = alphabet_size
        self.forbidden = tuple(sorted(canon))
        self.memory = max((len(f) for f in self.forbidden), default=1) - 1 if self.forbidden else 0
        k = max(self.memory, 1)
        self.k = k

        def clean(word):
            for f in self.forbidden:
                L = len(f)
                for i in range(len(word) - L + 1):
                    if word[i:i + L] == f:
                        return False
            return True

        states = [s for s in itertools.product(range(alphabet_size), repeat=k) if clean(s)]
        index = {s: i for i, s in enumerate(states)}
        n = len(states)
        adj = np.zeros((n, n), dtype=np.uint8)
        for i, u in enumerate(states):
            for a in range(alphabet_size):
                v = u[1:] + (a,)
                j = index.get(v)
                if j is not None and clean(u + (a,)):
                    adj[i, j] = 1
        # prune to the essential part
        keep = np.ones(n, dtype=bool)
        while True:
            out_deg = (adj[keep][:, keep]).sum(axis=1) if keep.any() else np.array([])
            in_deg = (adj[keep][:, keep]).sum(axis=0) if keep.any() else np.array([])
            bad = (out_deg == 0) | (in_deg == 0)
            if not bad.any():
                break
            live = np.flatnonzero(keep)
            keep[live[bad]] = False
        if not keep.any():
            raise EmptySftError("no admissible word survives pruning: empty SFT")
        live = np.flatnonzero(keep)
        self.states = tuple(states[i] for i in live)
        self.state_index = {s: i for i, s in enumerate(self.states)}
        self.adjacency = np.ascontiguousarray(adj[np.ix_(live, live)])
        # step[state][symbol] -> next state index or -1
        m = len(self.states)
        self._step = np.full((m, alphabet_size), -1, dtype=np.int64)
        for i, u in enumerate(self.states):
            for a in range(alphabet_size):
                j = self.state_index.get(u[1:] + (a,))
                if j is not None and self.adjacency[i, j]:
                    self._step[i, a] = j
        self._dfa = None
        self._gap = None

    @classmethod
    def full_shift(cls, alphabet_size: int) -> "Sft":
        return cls(alphabet_size, ())

    @property
    def n_states(self) -> int:
        return len(self.states)

    def is_full_shift(self) -> bool:
        return not self.forbidden

    def step(self, state: int, symbol: int) -> int:
        return int(self._step[state, symbol])

    def factor_dfa(self) -> Dfa:
        """DFA of the factor language: prefixes of states, then states.

        In an essential SFT every factor of an admissible word is a prefix
        of some state, so prefix nodes capture short words exactly.
        """
        if self._dfa is not None:
            return self._dfa
        if self.is_full_shift():
            step = np.zeros((1, self.alphabet_size), dtype=np.int64)
            self._dfa = Dfa(self.alphabet_size, step, start=0)
            return self._dfa
        k = self.k
        prefixes = sorted({s[:j] for s in self.states for j in range(k)})
        pref_index = {p: i for i, p in enumerate(prefixes)}
        n_pref = len(prefixes)
        rows = []
        for p in prefixes:
            row = []
            for a in range(self.alphabet_size):
                q = p + (a,)
                if len(q) < k:
                    row.append(pref_index.get(q, -1))
                else:
                    j = self.state_index.get(q)
                    row.append(-1 if j is None else n_pref + j)
            rows.append(row)
        for i in range(self.n_states):
            rows.append([int(n_pref + t) if t >= 0 else -1 for t in self._step[i]])
        self._dfa = Dfa(self.alphabet_size, np.array(rows, dtype=np.int64),
                        start=pref_index[()])
        return self._dfa

    def is_admissible(self, word) -> bool:
        symbols = word.symbols if isinstance(word, Word) else word
        return self.factor_dfa().walk(symbols) >= 0

    def state_path(self, word: Word):
        """State indices of every full k-window of the word (may be empty)."""
        sym = tuple(int(a) for a in word.symbols)
        k = self.k
        if len(sym) < k:
            return []
        path = []
        for i in range(len(sym) - k + 1):
            j = self.state_index.get(sym[i:i + k])
            if j is None:
                raise ValueError("word has an inadmissible window")
            path.append(j)
        return path


def build_sft(alphabet_size: int, forbidden_words=()) -> Sft:
    """Construct the pruned SFT of sequences avoiding the forbidden words."""
    return Sft(alphabet_size, forbidden_words)


def topological_entropy(sft: Sft) -> float:
    """log of the Perron eigenvalue of the adjacency matrix, in nats.

    Power iteration on A + I with the Collatz-Wielandt bracket, which
    certifies the eigenvalue for primitive matrices; a dense eigensolve
    backs up the rare non-primitive (still essential) cases.
    """
    a = sft.adjacency.astype(np.float64)
    n = a.shape[0]
    if n == 1:
        return math.log(float(a[0, 0])) if a[0, 0] > 1 else 0.0
    b = a + np.eye(n)
    x = np.full(n, 1.0 / n)
    for _ in range(100_000):
        y = b @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        x = y / y.sum()
        if hi - lo <= 1e-13 * hi:
            return math.log(0.5 * (lo + hi) - 1.0)
    rho = max(ev.real for ev in np.linalg.eigvals(a))
    return math.log(rho) if rho > 1.0 else 0.0


def specification_gap(sft: Sft) -> int:
    """Least p with all entries of adjacency^p positive (primitivity index).

    For any admissible u, v and any g >= L there is a connecting word w of
    length exactly g with u w v admissible; see interp.connect_words.
    """
    if sft._gap is not None:
        return sft._gap
    a = sft.adjacency.astype(bool)
    n = a.shape[0]
    p = a.copy()
    for power in range(1, (n - 1) ** 2 + 2):
        if p.all():
            sft._gap = power
            return power
        p = (p.astype(np.uint16) @ a.astype(np.uint16)) > 0
    raise NotMixingError("adjacency matrix is not primitive: not mixing")


def window_distance_below(u: Word, v: Word, params: WindowMetricParams) -> bool:
    """True iff u and v agree on every coordinate of the widened window.

    This is the symbolic form of d_m^n(u, v) < 2^-radius: the Bowen-window
    distance drops below the threshold exactly when the widened windows
    coincide symbol for symbol.
    """
    lo = params.lo - params.radius
    hi = params.hi + params.radius
    for w in (u, v):
        if not w.covers(lo, hi):
            raise CoverageError(
                f"word covers [{w.lo}, {w.hi}), window needs [{lo}, {hi})")
    return np.array_equal(u.window(lo, hi).symbols, v.window(lo, hi).symbols)


def count_words(sft: Sft, length: int) -> int:
    """Exact number of admissible words of the given length (big integer)."""
    return sft.factor_dfa().count(length)


def enumerate_words(sft: Sft, length: int, constraint=None):
    """Admissible words of the given length in lex order, optionally filtered."""
    out = []
    for sym in sft.factor_dfa().enumerate(length):
        w = Word(np.array(sym, dtype=np.uint8))
        if constraint is None or constraint(w):
            out.append(w)
    return out


def parse_sft(text: str) -> Sft:
    """Parse the SFT text format: ``alphabet <size>`` then ``forbid <word>``."""
    alphabet = None
    forbidden = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "alphabet" and len(parts) == 2:
            alphabet = int(parts[1])
        elif parts[0] == "forbid" and len(parts) == 2:
            forbidden.append(parts[1])
        else:
            raise ValueError(f"line {lineno}: cannot parse {line!r}")
    if alphabet is None:
        raise ValueError("missing 'alphabet' line")
    return Sft(alphabet, forbidden)


def serialize_sft(sft: Sft) -> str:
    if sft.alphabet_size > MAX_TEXT_ALPHABET:
        raise ValueError("text format limited to single-digit symbols")
    lines = [f"alphabet {sft.alphabet_size}"]
    for f in sft.forbidden:
        lines.append("forbid " + "".join(str(a) for a in f))
    return "\n".join(lines) + "\n"
