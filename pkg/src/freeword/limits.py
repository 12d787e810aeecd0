"""Certified prefixes of infinite fixed words and rays.

A stream iterates a free group endomorphism (or a graph self-map, through
its action on edge words) on a seed and commits the part of the iterate
that has stopped changing.

Nested mode applies when the image of the seed is the seed followed by a
non-empty tail w with no cancellation between them.  Then the limit word
is g w f(w) f^2(w) ... and each new piece is appended; every junction is
checked, so the prefix is exact.  Otherwise general mode iterates whole
words and commits the longest prefix common to the last S iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .graphs import GraphSelfMap
from .words import Alphabet, GroupEndo, ReducedWord, apply_array, reduce, verify_automorphism

DEFAULT_ITER_CAP = 200
DEFAULT_SYMBOL_CAP = 10**8
DEFAULT_WINDOW = 3


class StabilizationError(RuntimeError):
    """The iterates did not settle on a prefix within the caps."""


class MarginError(RuntimeError):
    pass


def _as_codes(alphabet: Alphabet, seed) -> np.ndarray:
    if isinstance(seed, ReducedWord):
        return seed.to_array()
    if isinstance(seed, str):
        return reduce(seed, alphabet).to_array()
    return np.asarray(list(seed), dtype=np.int32)


def _common_prefix(a: np.ndarray, b: np.ndarray) -> int:
    n = min(len(a), len(b))
    if n == 0:
        return 0
    diff = np.flatnonzero(a[:n] != b[:n])
    return int(diff[0]) if len(diff) else n


@dataclass
class PrefixStream:
    """Lazily extended certified prefix of lim f^k(seed).

    ``mode`` is "nested" or "general"; ``window`` is S (forced to 1 in
    nested mode).  ``iterations`` counts iterates performed so far.
    """

    endo: GroupEndo
    seed: np.ndarray
    window: int = DEFAULT_WINDOW
    iter_cap: int = DEFAULT_ITER_CAP
    symbol_cap: int = DEFAULT_SYMBOL_CAP
    graph_map: GraphSelfMap | None = None
    mode: str = field(init=False)
    iterations: int = field(init=False, default=0)
    events: list = field(init=False, default_factory=list)

    def __post_init__(self):
        self.seed = np.ascontiguousarray(self.seed, dtype=np.int32)
        if len(self.seed) == 0:
            raise ValueError("seed must be a non-trivial word")
        img = apply_array(self.endo, self.seed)
        g = len(self.seed)
        if len(img) > g and np.array_equal(img[:g], self.seed) and self._probe_nested(img, g):
            self.mode = "nested"
            self._buf = np.empty(max(1024, 4 * len(img)), dtype=np.int32)
            self._buf[: len(img)] = img
            self._len = len(img)
            self._piece = img[g:].copy()
            self.iterations = 1
        else:
            if self.graph_map is not None:
                raise ValueError("ray source: the image of the seed edge must start with the edge "
                                 "and the iterates must be nested")
            self.mode = "general"
            self._iterates = [self.seed, img]
            self.iterations = 1
            self._committed = np.zeros(0, dtype=np.int32)

    def _probe_nested(self, img: np.ndarray, g: int, steps: int = 8, limit: int = 100_000) -> bool:
        """The first junctions of g w f(w) f^2(w) ... do not cancel."""
        last, piece = int(img[-1]), img[g:]
        for _ in range(steps):
            piece = apply_array(self.endo, piece)
            if len(piece) == 0 or piece[0] == (last ^ 1):
                return False
            last = int(piece[-1])
            if len(piece) > limit:
                break
        return True

    @classmethod
    def from_endo(cls, phi: GroupEndo, seed, **kw) -> "PrefixStream":
        return cls(phi, _as_codes(phi.alphabet, seed), **kw)

    @classmethod
    def from_ray(cls, f: GraphSelfMap, edge, **kw) -> "PrefixStream":
        code = f.alphabet.code(edge) if isinstance(edge, str) else int(edge)
        return cls(f.endo, np.array([code], dtype=np.int32), graph_map=f, **kw)

    @property
    def alphabet(self) -> Alphabet:
        return self.endo.alphabet

    @property
    def label(self) -> str:
        # convergence is observed, the dynamical type of the fixed point is not certified
        return "attracting-like"

    @property
    def committed_length(self) -> int:
        return self._len if self.mode == "nested" else len(self._committed)

    # -- nested mode

    def _append(self, piece: np.ndarray) -> None:
        if self._len > 0 and len(piece) and self._buf[self._len - 1] == (piece[0] ^ 1):
            raise StabilizationError("cancellation at a junction: the iterates are not nested")
        need = self._len + len(piece)
        if need > len(self._buf):
            grown = np.empty(max(need, 2 * len(self._buf)), dtype=np.int32)
            grown[: self._len] = self._buf[: self._len]
            self._buf = grown
        self._buf[self._len: need] = piece
        self._len = need

    def _step_nested(self) -> None:
        self._piece = apply_array(self.endo, self._piece)
        if len(self._piece) == 0:
            raise StabilizationError("no stabilization: the tail collapsed to the trivial word")
        self._append(self._piece)
        self.iterations += 1

    # -- general mode

    def _step_general(self) -> None:
        nxt = apply_array(self.endo, self._iterates[-1])
        self._iterates.append(nxt)
        self._iterates = self._iterates[-(self.window + 1):]
        self.iterations += 1
        recent = self._iterates[-self.window - 1:] if len(self._iterates) > self.window else self._iterates
        k = len(recent[-1])
        for w in recent[:-1]:
            k = min(k, _common_prefix(w, recent[-1]))
        if k < len(self._committed) or not np.array_equal(recent[-1][: len(self._committed)], self._committed):
            raise StabilizationError("a committed symbol changed: the seed does not converge")
        self._committed = recent[-1][:k].copy()

    def extend(self, n: int) -> None:
        """Iterate until at least n symbols are certified."""
        if self.mode == "nested":
            while self._len < n:
                if self._len > self.symbol_cap:
                    raise StabilizationError(f"no stabilization: symbol cap {self.symbol_cap} reached")
                self._step_nested()
            return
        while True:
            cur = self._iterates[-1]
            settled = len(self._iterates) > self.window
            if settled and len(self._committed) >= n and len(cur) >= 2 * n:
                return
            if self.iterations >= self.iter_cap or len(cur) > self.symbol_cap:
                raise StabilizationError(
                    f"no stabilization: prefix of length {n} still changing after {self.iterations} iterates")
            self._step_general()

    def prefix(self, n: int) -> np.ndarray:
        self.extend(n)
        src = self._buf if self.mode == "nested" else self._committed
        return src[:n].copy()

    def word(self, n: int) -> ReducedWord:
        return ReducedWord(self.alphabet, tuple(int(c) for c in self.prefix(n)))


def limit_prefix(source, n: int, seed=None, **kw) -> ReducedWord:
    """Certified n-prefix of the limit word.

    ``source`` is a PrefixStream, a GroupEndo (with ``seed``) or a
    GraphSelfMap (with a seed edge).
    """
    return as_stream(source, seed, **kw).word(n)


def as_stream(source, seed=None, **kw) -> PrefixStream:
    if isinstance(source, (PrefixStream, TransportedStream)):
        return source
    if isinstance(source, GraphSelfMap):
        return PrefixStream.from_ray(source, seed, **kw)
    return PrefixStream.from_endo(source, seed, **kw)


# ---------------------------------------------------------------- rationality

@dataclass(frozen=True)
class RationalityVerdict:
    status: str  # "AperiodicSoFar" | "PeriodicCandidate" | "Certified-NA"
    period: int = 0
    preperiod: int = 0

    def __str__(self) -> str:
        if self.status == "PeriodicCandidate":
            return f"PeriodicCandidate(period={self.period}, preperiod={self.preperiod})"
        return self.status


def _failure(seq) -> list[int]:
    n = len(seq)
    fail = [0] * (n + 1)
    k = 0
    for i in range(1, n):
        while k and seq[i] != seq[k]:
            k = fail[k]
        if seq[i] == seq[k]:
            k += 1
        fail[i + 1] = k
    return fail


def rationality_check(prefix) -> RationalityVerdict:
    """Look for an eventually periodic shape pre . cycle^m . partial.

    The failure function of the reversed prefix gives the smallest period
    of every suffix.  The longest suffix containing at least four copies of
    its period decides; it must cover half the prefix.
    """
    seq = list(prefix.letters if isinstance(prefix, ReducedWord) else prefix)
    n = len(seq)
    if n < 4:
        raise ValueError("rationality check needs at least 4 symbols")
    fail = _failure(seq[::-1])
    for m in range(n, (n + 1) // 2 - 1, -1):
        p = m - fail[m]
        if 4 * p <= m:
            return RationalityVerdict("PeriodicCandidate", p, n - m)
    return RationalityVerdict("AperiodicSoFar")


# ---------------------------------------------------------------- transport

@dataclass
class TransportedStream:
    """The image phi(X) of a stream, committed M symbols behind the front.

    A cancellation reaching into committed output means the margin was too
    small: it is doubled and the computation restarts (recorded in
    ``events``).
    """

    phi: GroupEndo
    source: "PrefixStream | TransportedStream"
    margin: int | None = None
    chunk: int = 4096
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.margin is None:
            self.margin = 4 * self.phi.max_image_length * self.phi.alphabet.size
        self._reset()

    def _reset(self) -> None:
        self._out = np.zeros(0, dtype=np.int32)
        self._consumed = 0
        self._committed = 0

    @property
    def alphabet(self) -> Alphabet:
        return self.phi.alphabet

    @property
    def endo(self) -> GroupEndo:
        return self.phi

    def _feed(self, upto: int) -> None:
        src = self.source.prefix(upto)
        while self._consumed < upto:
            end = min(upto, self._consumed + self.chunk)
            piece = apply_array(self.phi, src[self._consumed: end])
            c = int(_kernels.junction_cancellation(self._out, piece))
            if len(self._out) - c < self._committed:
                self.events.append(f"margin {self.margin} too small, doubled")
                self.margin *= 2
                self._reset()
                return self._feed(upto)
            self._out = np.concatenate([self._out[: len(self._out) - c], piece[c:]])
            self._consumed = end
            self._committed = max(self._committed, len(self._out) - self.margin)

    def prefix(self, n: int) -> np.ndarray:
        upto = max(self._consumed, 64)
        while self._committed < n:
            upto = max(2 * upto, n + self.margin)
            self._feed(upto)
        return self._out[:n].copy()

    def word(self, n: int) -> ReducedWord:
        return ReducedWord(self.alphabet, tuple(int(c) for c in self.prefix(n)))


def transport(phi: GroupEndo, stream, check: bool = True, **kw) -> TransportedStream:
    """Stream of phi(X) for an automorphism phi."""
    if check and not verify_automorphism(phi, search_cap=10_000).ok:
        raise ValueError("transport needs an automorphism")
    if stream.alphabet != phi.alphabet:
        raise ValueError("alphabet mismatch between map and stream")
    return TransportedStream(phi, stream, **kw)


# ---------------------------------------------------------------- symbol files

def write_symbols(path: str | Path, alphabet: Alphabet, codes) -> None:
    """One token per symbol, space separated, uppercase for inverses."""
    syms = np.array(alphabet.symbols, dtype=object)
    text = " ".join(syms[np.asarray(codes, dtype=np.int64)]) if len(codes) else ""
    Path(path).write_text(text + "\n")


def read_symbols(path: str | Path, alphabet: Alphabet | None = None) -> tuple[Alphabet, np.ndarray]:
    tokens = Path(path).read_text().split()
    if alphabet is None:
        gens = sorted({t.lower() for t in tokens})
        alphabet = Alphabet(tuple(gens))
    codes = np.array([alphabet.code(t) for t in tokens], dtype=np.int32)
    return alphabet, codes
