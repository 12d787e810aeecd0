"""Factor complexity, recurrence complexity and laminary languages.

All counts come from one suffix automaton pass: for each end position i,
L[i] is the length of the longest suffix ending at i that also ends
earlier, so the factors ending at i of length > L[i] are new.  Hence
p(n) = #{i : L[i] < n <= i + 1}.  Running the same pass on the reversed
word gives, for each start position, the longest prefix occurring again
later; that counts the distinct factors of every tail X[k:] at once.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

from . import _kernels
from .graphs import GraphSelfMap, EdgePath
from .words import Alphabet, apply_array

EXACT_FRACTION = 0.25
TRUNCATIONS = (16, 8, 4, 2)


def _remap(codes: np.ndarray) -> tuple[np.ndarray, int]:
    """Compact letter codes to 0..sigma-1 to keep the automaton table small."""
    present = np.unique(codes)
    table = np.full(int(present.max()) + 1 if len(present) else 1, -1, dtype=np.int32)
    table[present] = np.arange(len(present), dtype=np.int32)
    return table[codes], len(present)


def _ranges_to_counts(lo: np.ndarray, hi: np.ndarray, n_max: int) -> np.ndarray:
    """counts[n] = #{j : lo[j] <= n <= hi[j]} for n in 0..n_max."""
    hi = np.minimum(hi, n_max)
    ok = lo <= hi
    diff = np.zeros(n_max + 2, dtype=np.int64)
    np.add.at(diff, lo[ok], 1)
    np.add.at(diff, hi[ok] + 1, -1)
    return np.cumsum(diff)[: n_max + 1]


@dataclass
class FactorIndex:
    """Distinct factor counts of a word, or of a set of words.

    Several words are joined with a separator; factors containing it are
    never counted.
    """

    codes: np.ndarray
    sigma: int
    earlier: np.ndarray       # L[i]
    room: np.ndarray          # longest separator-free factor ending at i

    @classmethod
    def build(cls, codes) -> "FactorIndex":
        return cls.from_words([codes])

    @classmethod
    def from_words(cls, words) -> "FactorIndex":
        words = [np.ascontiguousarray(w, dtype=np.int32) for w in words]
        words = [w for w in words if len(w)]
        if not words:
            z = np.zeros(0, dtype=np.int32)
            return cls(z, 0, z, z)
        sep = max(int(w.max()) for w in words) + 1
        parts, room = [], []
        for k, w in enumerate(words):
            if k:
                parts.append(np.array([sep], dtype=np.int32))
                room.append(np.zeros(1, dtype=np.int64))
            parts.append(w)
            room.append(np.arange(1, len(w) + 1, dtype=np.int64))
        joined = np.concatenate(parts)
        compact, sigma = _remap(joined)
        earlier = _kernels.earlier_suffix_lengths(compact, sigma).astype(np.int64)
        return cls(joined, sigma, earlier, np.concatenate(room))

    def __len__(self) -> int:
        return len(self.codes)

    def counts(self, n_max: int) -> np.ndarray:
        """counts[n] for n = 0..n_max (counts[0] = 1, the empty factor)."""
        c = _ranges_to_counts(self.earlier + 1, self.room, n_max)
        c[0] = 1
        return c

    def last_new(self, n_max: int) -> np.ndarray:
        """Largest end position of a first occurrence of a length-n factor (-1 if none)."""
        best = np.full(n_max + 2, -1, dtype=np.int64)
        pos = np.arange(len(self.earlier), dtype=np.int64)
        ok = (self.earlier <= n_max) & (self.room > self.earlier)
        np.maximum.at(best, self.earlier[ok] + 1, pos[ok])
        # the room bound is ignored: for a single word the maximum is reached
        # at a position with enough room anyway
        out = np.maximum.accumulate(best)[: n_max + 1]
        out[0] = -1
        return out


def factor_counts(codes, n_max: int) -> np.ndarray:
    """p(n) for n = 1..n_max, as an array indexed from 0 (p(1) first)."""
    return FactorIndex.build(codes).counts(n_max)[1:]


def brute_force_counts(codes, n_max: int) -> list[int]:
    """Exhaustive distinct-factor counts; reference for small words."""
    seq = tuple(int(c) for c in codes)
    return [len({seq[i:i + n] for i in range(len(seq) - n + 1)}) for n in range(1, n_max + 1)]


def tail_counts(codes, n_max: int, starts) -> np.ndarray:
    """Distinct length-n factors of codes[k:] for every k in ``starts``.

    Row r, column n-1 holds the count for starts[r].
    """
    codes = np.ascontiguousarray(codes, dtype=np.int32)
    N = len(codes)
    rev, sigma = _remap(codes[::-1].copy())
    later = _kernels.earlier_suffix_lengths(rev, sigma).astype(np.int64)[::-1]
    # later[i]: longest prefix of codes[i:] that occurs again starting after i
    room = N - np.arange(N, dtype=np.int64)
    out = np.zeros((len(starts), n_max), dtype=np.int64)
    for r, k in enumerate(starts):
        out[r] = _ranges_to_counts(later[k:] + 1, room[k:], n_max)[1:]
    return out


# ---------------------------------------------------------------- profiles

@dataclass
class ComplexityProfile:
    ns: np.ndarray
    p: np.ndarray
    exact: np.ndarray
    p_rec: np.ndarray | None = None
    rec_stable: np.ndarray | None = None
    prefix_length: int = 0
    label: str = ""

    def exact_samples(self) -> tuple[np.ndarray, np.ndarray]:
        return self.ns[self.exact], self.p[self.exact]

    def stable_recurrence(self) -> tuple[np.ndarray, np.ndarray]:
        if self.p_rec is None:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return self.ns[self.rec_stable], self.p_rec[self.rec_stable]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "p", "exact", "p_rec", "rec_stable"])
        for i, n in enumerate(self.ns):
            pr = "" if self.p_rec is None else int(self.p_rec[i])
            rs = "" if self.rec_stable is None else int(bool(self.rec_stable[i]))
            w.writerow([int(n), int(self.p[i]), int(bool(self.exact[i])), pr, rs])
        return buf.getvalue()


def complexity_profile(prefix, n_max: int, exact_fraction: float = EXACT_FRACTION,
                       label: str = "") -> ComplexityProfile:
    """Exact factor counts of a prefix for n = 1..n_max.

    Sample n is flagged exact for the infinite word when n and the last
    first-occurrence of a length-n factor both lie in the first
    ``exact_fraction`` of the prefix: the remaining part brought nothing new.
    """
    codes = np.ascontiguousarray(prefix.letters if hasattr(prefix, "letters") else prefix, dtype=np.int32)
    N = len(codes)
    if n_max > N:
        raise ValueError(f"n_max {n_max} exceeds the prefix length {N}")
    idx = FactorIndex.build(codes)
    p = idx.counts(n_max)[1:]
    last = idx.last_new(n_max)[1:]
    ns = np.arange(1, n_max + 1)
    bound = exact_fraction * N
    exact = (last <= bound) & (ns <= bound)
    return ComplexityProfile(ns, p, exact, prefix_length=N, label=label)


def recurrence_profile(source, n_max: int, length: int | None = None,
                       profile: ComplexityProfile | None = None) -> ComplexityProfile:
    """Add p_rec to a profile.

    p_rec(n) is the number of length-n factors of the tail X[N/2:N]; a
    sample is stable when the tails from N/16, N/8, N/4 and N/2 agree
    (three successive doublings of the truncation point).
    """
    if hasattr(source, "prefix"):
        if length is None:
            raise ValueError("a prefix length is required for a stream")
        codes = source.prefix(length)
    else:
        codes = np.ascontiguousarray(source.letters if hasattr(source, "letters") else source, dtype=np.int32)
    N = len(codes)
    if profile is None:
        profile = complexity_profile(codes, n_max)
    starts = [N // t for t in TRUNCATIONS]
    tails = tail_counts(codes, n_max, starts)
    profile.p_rec = tails[-1]
    profile.rec_stable = np.all(tails == tails[-1], axis=0)
    return profile


def total_complexity(f: GraphSelfMap, path, n_max: int, iter_cap: int = 64,
                     symbol_budget: int = 10**7) -> ComplexityProfile:
    """Distinct factors over the union of the iterates f#^k(path), k <= iter_cap."""
    codes = np.asarray(tuple(path.edges) if isinstance(path, EdgePath) else
                       (f.alphabet.parse(path) if isinstance(path, str) else tuple(path)), dtype=np.int32)
    if len(codes) == 0:
        raise ValueError("path must be non-trivial")
    words = [codes]
    total = len(codes)
    cur = codes
    for _ in range(iter_cap):
        cur = apply_array(f.endo, cur)
        if total + len(cur) > symbol_budget:
            break
        words.append(cur)
        total += len(cur)
    idx = FactorIndex.from_words(words)
    p = idx.counts(n_max)[1:]
    ns = np.arange(1, n_max + 1)
    return ComplexityProfile(ns, p, np.ones(n_max, dtype=bool), prefix_length=total,
                             label=f"iterates={len(words) - 1}")


# ---------------------------------------------------------------- laminary language

@dataclass
class LaminaryLanguage:
    alphabet: Alphabet
    words: dict  # n -> frozenset of letter tuples
    stable: bool = True
    checked_counts: list = field(default_factory=list)

    def counts(self) -> list[int]:
        return [len(self.words[n]) for n in sorted(self.words)]

    def __contains__(self, w) -> bool:
        w = tuple(w.letters if hasattr(w, "letters") else w)
        return w in self.words.get(len(w), ())

    def is_inverse_closed(self) -> bool:
        return all(tuple(c ^ 1 for c in reversed(w)) in s for s in self.words.values() for w in s)

    def is_factor_closed(self) -> bool:
        for n, s in self.words.items():
            if n - 1 not in self.words or n == 1:
                continue
            shorter = self.words[n - 1]
            for w in s:
                if w[1:] not in shorter or w[:-1] not in shorter:
                    return False
        return True

    def format(self, n: int) -> list[str]:
        return sorted(self.alphabet.format(w) for w in self.words[n])


def _window_set(codes: np.ndarray, n: int) -> set:
    if len(codes) < n:
        return set()
    win = np.lib.stride_tricks.sliding_window_view(codes, n)
    return {tuple(int(x) for x in row) for row in np.unique(win, axis=0)}


def laminary_language(source, length_cap: int, length: int) -> LaminaryLanguage:
    """Words u with u or its inverse recurrent in X, for |u| <= length_cap.

    Recurrent factors are read off the tail X[N/2:N]; the per-length sizes
    are cross-checked against the automaton count of the tail joined with
    its inverse.
    """
    codes = source.prefix(length)
    alphabet = source.alphabet
    prof = recurrence_profile(codes, length_cap)
    stable = bool(prof.rec_stable.all())
    tail = codes[len(codes) // 2:]
    inv = (tail[::-1] ^ 1).astype(np.int32)
    sym = FactorIndex.from_words([tail, inv]).counts(length_cap)
    words = {}
    for n in range(1, length_cap + 1):
        s = _window_set(tail, n)
        s |= {tuple(c ^ 1 for c in reversed(w)) for w in s}
        if len(s) != sym[n]:
            raise AssertionError(f"laminary language count mismatch at n={n}: {len(s)} vs {sym[n]}")
        words[n] = frozenset(s)
    return LaminaryLanguage(alphabet, words, stable, [int(x) for x in sym[1:]])


# ---------------------------------------------------------------- window counting

@dataclass(frozen=True)
class WindowCount:
    n: int
    count: int
    phi_class: str  # "1" | "loglog" | "log"
    phi: float

    @property
    def ratio(self) -> float:
        return self.count / self.phi


def window_class(d1: int, lam1: float, d2: int, lam2: float) -> str:
    if lam1 < lam2:
        return "log"
    return "1" if d1 == d2 else "loglog"


def window_count(c1, d1, lam1, c2, d2, lam2, n: int) -> WindowCount:
    """Number of integers p >= 1 with c1 p^d1 lam1^p <= n <= c2 p^d2 lam2^p.

    Evaluated in 50-digit decimal arithmetic, scanning p upward until the
    lower bound exceeds n.
    """
    if not (isinstance(d1, int) and isinstance(d2, int)) or d1 < 1 or d2 < 1:
        raise ValueError("d1 and d2 must be integers >= 1")
    if not 1 < lam1 <= lam2:
        raise ValueError("need 1 < lam1 <= lam2")
    if c1 <= 0 or c2 <= 0:
        raise ValueError("constants must be positive")
    if lam1 == lam2 and d1 > d2:
        raise ValueError("need d1 <= d2 when lam1 == lam2")
    with localcontext() as ctx:
        ctx.prec = 50
        C1, C2, L1, L2, N = (Decimal(str(x)) for x in (c1, c2, lam1, lam2, n))
        count, p = 0, 1
        while True:
            P = Decimal(p)
            low = C1 * P ** d1 * L1 ** p
            if low > N:
                break
            if N <= C2 * P ** d2 * L2 ** p:
                count += 1
            p += 1
    cls = window_class(d1, lam1, d2, lam2)
    phi = {"1": 1.0, "loglog": math.log(math.log(n)), "log": math.log(n)}[cls]
    return WindowCount(n, count, cls, phi)


def window_sweep(params, ns) -> tuple[list[WindowCount], float, float]:
    """window_count over several n; returns the counts and (M1, M2), the
    extreme values of count / phi(n)."""
    rows = [window_count(*params, n) for n in ns]
    ratios = [r.ratio for r in rows]
    return rows, min(ratios), max(ratios)
