"""Free group words and endomorphisms.

Letters are encoded as integers: generator ``i`` is ``2 * i`` and its inverse
is ``2 * i + 1``, so inverting a letter is ``c ^ 1``.  In text, inverse
letters are written in uppercase (``A`` is ``a`` inverse) and tokens are
separated by whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels


class AlphabetError(ValueError):
    """A symbol does not belong to the alphabet, or alphabets disagree."""


class FormatError(ValueError):
    """Malformed input file."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


def inverse_code(c: int) -> int:
    return c ^ 1


@dataclass(frozen=True)
class Alphabet:
    generators: tuple[str, ...]

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise AlphabetError("alphabet needs at least one generator")
        if len(set(gens)) != len(gens):
            raise AlphabetError(f"duplicate generator names in {gens}")
        for g in gens:
            if g.upper() == g:
                raise AlphabetError(f"generator {g!r} must have a distinct uppercase form")
        if set(gens) & {g.upper() for g in gens}:
            raise AlphabetError("generator names clash with inverse names")

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def size(self) -> int:
        """Number of letters in the symmetrized alphabet."""
        return 2 * len(self.generators)

    @cached_property
    def symbols(self) -> tuple[str, ...]:
        out = []
        for g in self.generators:
            out.extend([g, g.upper()])
        return tuple(out)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.symbols)}

    def code(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise AlphabetError(f"unknown symbol {symbol!r} (alphabet {' '.join(self.generators)})") from None

    def symbol(self, code: int) -> str:
        return self.symbols[code]

    def parse(self, text: str | Sequence[str]) -> list[int]:
        """Tokens to letter codes, without reduction."""
        tokens = text.split() if isinstance(text, str) else list(text)
        return [self.code(t) for t in tokens]

    def format(self, codes: Iterable[int]) -> str:
        return " ".join(self.symbols[int(c)] for c in codes)

    def word(self, text: str | Sequence[str]) -> "ReducedWord":
        return reduce(text, self)


def reduce_codes(codes: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for c in codes:
        if out and out[-1] == c ^ 1:
            out.pop()
        else:
            out.append(c)
    return tuple(out)


@dataclass(frozen=True)
class ReducedWord:
    alphabet: Alphabet
    letters: tuple[int, ...]

    def __post_init__(self):
        letters = tuple(int(c) for c in self.letters)
        object.__setattr__(self, "letters", letters)
        for i, c in enumerate(letters):
            if not 0 <= c < self.alphabet.size:
                raise AlphabetError(f"letter code {c} outside alphabet")
            if i and letters[i - 1] == c ^ 1:
                raise ValueError("word is not freely reduced")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return ReducedWord(self.alphabet, self.letters[item])
        return self.letters[item]

    def __mul__(self, other: "ReducedWord") -> "ReducedWord":
        _check_same(self.alphabet, other.alphabet)
        return ReducedWord(self.alphabet, reduce_codes(self.letters + other.letters))

    def __pow__(self, k: int) -> "ReducedWord":
        base = self if k >= 0 else self.inverse()
        return ReducedWord(self.alphabet, reduce_codes(base.letters * abs(k)))

    def inverse(self) -> "ReducedWord":
        return ReducedWord(self.alphabet, tuple(c ^ 1 for c in reversed(self.letters)))

    def startswith(self, other: "ReducedWord") -> bool:
        return self.letters[: len(other.letters)] == other.letters

    def to_array(self) -> np.ndarray:
        return np.asarray(self.letters, dtype=np.int32)

    def __str__(self) -> str:
        return self.alphabet.format(self.letters)

    def __repr__(self) -> str:
        return f"ReducedWord({str(self)!r})"


def _check_same(a: Alphabet, b: Alphabet) -> None:
    if a != b:
        raise AlphabetError(f"alphabet mismatch: {a.generators} vs {b.generators}")


def reduce(raw: str | Sequence[str] | Sequence[int], alphabet: Alphabet) -> ReducedWord:
    """Freely reduce a letter sequence (symbols or codes)."""
    if isinstance(raw, str) or (len(raw) and isinstance(raw[0], str)):
        codes = alphabet.parse(raw)
    else:
        codes = [int(c) for c in raw]
        for c in codes:
            if not 0 <= c < alphabet.size:
                raise AlphabetError(f"letter code {c} outside alphabet")
    return ReducedWord(alphabet, reduce_codes(codes))


@dataclass(frozen=True, eq=False)
class GroupEndo:
    """Endomorphism of a free group given by the images of the generators."""

    alphabet: Alphabet
    images: tuple[ReducedWord, ...]
    inverse_images: tuple[ReducedWord, ...] | None = None
    name: str = ""
    assertions: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if len(self.images) != self.alphabet.rank:
            raise AlphabetError("one image per generator is required")
        for w in self.images:
            _check_same(self.alphabet, w.alphabet)
        if self.inverse_images is not None:
            if len(self.inverse_images) != self.alphabet.rank:
                raise AlphabetError("one inverse image per generator is required")
            for w in self.inverse_images:
                _check_same(self.alphabet, w.alphabet)

    @classmethod
    def from_strings(cls, alphabet: Alphabet | Sequence[str], images: Sequence[str] | dict[str, str],
                     inverse: Sequence[str] | dict[str, str] | None = None, name: str = "") -> "GroupEndo":
        if not isinstance(alphabet, Alphabet):
            alphabet = Alphabet(tuple(alphabet))

        def as_words(spec):
            if isinstance(spec, dict):
                spec = [spec[g] for g in alphabet.generators]
            return tuple(reduce(s, alphabet) if s.strip() else ReducedWord(alphabet, ()) for s in spec)

        inv = as_words(inverse) if inverse is not None else None
        return cls(alphabet, as_words(images), inv, name)

    def __eq__(self, other):
        return isinstance(other, GroupEndo) and self.alphabet == other.alphabet and self.images == other.images

    def __hash__(self):
        return hash((self.alphabet, self.images))

    def image(self, code: int) -> tuple[int, ...]:
        w = self.images[code >> 1].letters
        if code & 1:
            return tuple(c ^ 1 for c in reversed(w))
        return w

    @cached_property
    def _table(self):
        imgs = [np.asarray(self.image(c), dtype=np.int32) for c in range(self.alphabet.size)]
        lengths = np.array([len(x) for x in imgs], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]]).astype(np.int64)
        flat = np.concatenate(imgs).astype(np.int32) if lengths.sum() else np.zeros(0, np.int32)
        return flat, offsets, lengths

    def image_table(self):
        """(flat, offsets, lengths) arrays used by the compiled kernels."""
        return self._table

    @property
    def is_positive(self) -> bool:
        return all(c % 2 == 0 for w in self.images for c in w.letters)

    @property
    def is_non_erasing(self) -> bool:
        return all(len(w) for w in self.images)

    @property
    def max_image_length(self) -> int:
        return max(len(w) for w in self.images)

    def __call__(self, w: ReducedWord) -> ReducedWord:
        return apply(self, w)

    def __str__(self) -> str:
        return "; ".join(f"{g} -> {w}" for g, w in zip(self.alphabet.generators, self.images))


def identity(alphabet: Alphabet) -> GroupEndo:
    images = tuple(ReducedWord(alphabet, (2 * i,)) for i in range(alphabet.rank))
    return GroupEndo(alphabet, images, images, name="id")


def apply(phi: GroupEndo, w: ReducedWord | str) -> ReducedWord:
    if isinstance(w, str):
        w = reduce(w, phi.alphabet)
    _check_same(phi.alphabet, w.alphabet)
    out: list[int] = []
    for c in w.letters:
        for x in phi.image(c):
            if out and out[-1] == x ^ 1:
                out.pop()
            else:
                out.append(x)
    return ReducedWord(phi.alphabet, tuple(out))


def apply_array(phi: GroupEndo, codes: np.ndarray) -> np.ndarray:
    """apply() for long words stored as int32 arrays."""
    flat, offsets, lengths = phi.image_table()
    return _kernels.substitute_reduce(np.ascontiguousarray(codes, dtype=np.int32), flat, offsets, lengths)


def compose(phi: GroupEndo, psi: GroupEndo) -> GroupEndo:
    """The endomorphism w -> phi(psi(w))."""
    _check_same(phi.alphabet, psi.alphabet)
    images = tuple(apply(phi, w) for w in psi.images)
    inv = None
    if phi.inverse_images is not None and psi.inverse_images is not None:
        inv = tuple(apply(inverse(psi), w) for w in phi.inverse_images)
    return GroupEndo(phi.alphabet, images, inv)


def power(phi: GroupEndo, k: int) -> GroupEndo:
    if k < 0:
        return power(inverse(phi), -k)
    result = identity(phi.alphabet)
    base = phi
    n = k
    while k:
        if k & 1:
            result = compose(result, base)
        k >>= 1
        if k:
            base = compose(base, base)
    return GroupEndo(result.alphabet, result.images, result.inverse_images,
                     name=f"{phi.name}^{n}" if phi.name else "")


def inverse(phi: GroupEndo) -> GroupEndo:
    if phi.inverse_images is None:
        raise ValueError("no inverse images supplied")
    return GroupEndo(phi.alphabet, phi.inverse_images, phi.images)


def abelianization(phi: GroupEndo) -> np.ndarray:
    """Integer matrix whose column j is the exponent-sum vector of phi(x_j)."""
    r = phi.alphabet.rank
    m = np.zeros((r, r), dtype=np.int64)
    for j, w in enumerate(phi.images):
        for c in w.letters:
            m[c >> 1, j] += -1 if c & 1 else 1
    return m


def integer_determinant(m: np.ndarray) -> int:
    a = [[Fraction(int(x)) for x in row] for row in m]
    n = len(a)
    det = Fraction(1)
    for i in range(n):
        pivot = next((r for r in range(i, n) if a[r][i] != 0), None)
        if pivot is None:
            return 0
        if pivot != i:
            a[i], a[pivot] = a[pivot], a[i]
            det = -det
        det *= a[i][i]
        for r in range(i + 1, n):
            f = a[r][i] / a[i][i]
            if f:
                for cidx in range(i, n):
                    a[r][cidx] -= f * a[i][cidx]
    return int(det)


@dataclass
class AutomorphismReport:
    verdict: str  # "automorphism" | "not-automorphism" | "unverifiable"
    abelianization: np.ndarray
    determinant: int
    failures: list[str] = field(default_factory=list)
    inverse_found: bool = False

    @property
    def ok(self) -> bool:
        return self.verdict == "automorphism"

    def __bool__(self) -> bool:
        return self.ok


def verify_automorphism(phi: GroupEndo, search_cap: int = 0) -> AutomorphismReport:
    """Round-trip check of phi against its supplied (or searched) inverse.

    With ``search_cap > 0`` and no inverse images, the images are folded
    (see fold_images) to find one or to show there is none.  A singular abelianization is a definite
    negative answer; otherwise, without an inverse, the answer is
    "unverifiable".
    """
    m = abelianization(phi)
    det = integer_determinant(m)
    if abs(det) != 1:
        return AutomorphismReport("not-automorphism", m, det, [f"abelianization determinant {det}"])
    found = False
    if phi.inverse_images is None and search_cap > 0:
        status, inv = fold_images(phi, search_cap)
        if inv is not None:
            phi = GroupEndo(phi.alphabet, phi.images, inv.images, phi.name, phi.assertions)
            found = True
        elif status in ("not-injective", "not-surjective"):
            reason = "images generate a proper subgroup" if status == "not-surjective" else "images satisfy a relation"
            return AutomorphismReport("not-automorphism", m, det, [reason])
    if phi.inverse_images is None:
        return AutomorphismReport("unverifiable", m, det)
    failures = []
    inv = inverse(phi)
    for i, g in enumerate(phi.alphabet.generators):
        x = ReducedWord(phi.alphabet, (2 * i,))
        if apply(phi, apply(inv, x)) != x:
            failures.append(f"phi(phi^-1({g})) != {g}")
        if apply(inv, apply(phi, x)) != x:
            failures.append(f"phi^-1(phi({g})) != {g}")
    verdict = "automorphism" if not failures else "not-automorphism"
    return AutomorphismReport(verdict, m, det, failures, found)


def find_inverse(phi: GroupEndo, cap: int = 10_000) -> GroupEndo | None:
    status, inv = fold_images(phi, cap)
    return inv


def fold_images(phi: GroupEndo, cap: int = 10_000) -> tuple[str, GroupEndo | None]:
    """Invert phi by Stallings folding of the petal graph of its images.

    Every edge carries a word in the images (as a word over new symbols
    y_i standing for phi(x_i)); the labels are kept so that reading any
    closed path at the base vertex gives an x-word equal to the image of
    its y-word.  When the graph folds to a single rose, the label on the
    petal of x_j spells phi^-1(x_j).  Returns None when the images do not
    form a basis or when more than ``cap`` folds would be needed.

    The status is "basis", "not-injective", "not-surjective" (the folded
    graph is not a rose: the images generate a proper subgroup) or "cap".
    """
    alphabet = phi.alphabet
    r = alphabet.rank
    # edges: id -> [origin, letter (generator index), terminus, label tuple]
    edges: dict[int, list] = {}
    nxt_vertex = 1
    eid = 0
    for i, w in enumerate(phi.images):
        if not len(w):
            return "not-injective", None
        prev = 0
        for k, c in enumerate(w.letters):
            v = 0 if k == len(w) - 1 else nxt_vertex
            if v:
                nxt_vertex += 1
            label = (2 * i,) if k == 0 else ()
            if c & 1:  # reading A from prev to v means an a-edge from v to prev
                edges[eid] = [v, c >> 1, prev, tuple(x ^ 1 for x in reversed(label))]
            else:
                edges[eid] = [prev, c >> 1, v, label]
            eid += 1
            prev = v

    def inv(w):
        return tuple(x ^ 1 for x in reversed(w))

    def mul(*ws):
        return reduce_codes(x for w in ws for x in w)

    folds = 0
    while True:
        # look for two edges leaving (or entering) a vertex with the same letter
        seen: dict[tuple, int] = {}
        pair = None
        for k, (o, g, t, _) in edges.items():
            for key in ((o, g, "out"), (t, g, "in")):
                if key in seen:
                    pair = (seen[key], k, key[2])
                    break
                seen[key] = k
            if pair:
                break
        if pair is None:
            break
        folds += 1
        if folds > cap:
            return "cap", None
        k1, k2, side = pair
        o1, g, t1, l1 = edges[k1]
        o2, _, t2, l2 = edges[k2]
        if side == "in":
            # view both as leaving the common terminus along the reverse letter
            w1, w2, m1, m2 = o1, o2, inv(l1), inv(l2)
        else:
            w1, w2, m1, m2 = t1, t2, l1, l2
        if w1 == w2:
            if mul(m1, inv(m2)):
                return "not-injective", None  # a nontrivial y-word maps to 1
            del edges[k2]
            continue
        if w2 == 0:
            w1, w2, m1, m2 = w2, w1, m2, m1
            k1, k2 = k2, k1
        # re-base w2 by c = m2^-1 m1 so that the far vertex labels agree
        c = mul(inv(m2), m1)
        for k, e in edges.items():
            o, _, t, lab = e
            if o == w2 and t == w2:
                e[3] = mul(inv(c), lab, c)
            elif o == w2:
                e[3] = mul(inv(c), lab)
            elif t == w2:
                e[3] = mul(lab, c)
        for e in edges.values():
            if e[0] == w2:
                e[0] = w1
            if e[2] == w2:
                e[2] = w1
        del edges[k2]
    vertices = {e[0] for e in edges.values()} | {e[2] for e in edges.values()} | {0}
    if len(edges) - len(vertices) + 1 != r:
        return "not-injective", None
    if len(vertices) > 1:
        return "not-surjective", None
    inv_images = [None] * r
    for o, g, t, lab in edges.values():
        inv_images[g] = ReducedWord(alphabet, lab)
    return "basis", GroupEndo(alphabet, tuple(inv_images), phi.images)


# ---------------------------------------------------------------- .fga files

_RULE = re.compile(r"^\s*(\S+)\s*->(.*)$")


def parse_fga(text: str, name: str = "") -> GroupEndo:
    """Parse the line-oriented automorphism format.

    ::

        letters: a b c
        a -> a b
        b -> a c
        c -> a
        inverse:
        a -> c
        b -> C a
        c -> C b

    ``#`` starts a comment.  An optional ``assert:`` line lists properties
    the user vouches for (e.g. ``fully-irreducible``).
    """
    alphabet = None
    rules: dict[str, str] = {}
    inv_rules: dict[str, str] = {}
    assertions: set[str] = set()
    target = rules
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("letters:"):
            if alphabet is not None:
                raise FormatError("duplicate letters header", lineno)
            try:
                alphabet = Alphabet(tuple(line[len("letters:"):].split()))
            except AlphabetError as exc:
                raise FormatError(str(exc), lineno) from None
            continue
        if line.startswith("assert:"):
            assertions.update(line[len("assert:"):].split())
            continue
        if line.rstrip(":") == "inverse" and line.endswith(":"):
            target = inv_rules
            continue
        m = _RULE.match(line)
        if not m:
            raise FormatError(f"cannot parse {raw.strip()!r}", lineno)
        if alphabet is None:
            raise FormatError("rule before letters header", lineno)
        lhs, rhs = m.group(1), m.group(2).strip()
        if lhs not in alphabet.generators:
            raise FormatError(f"rule for unknown generator {lhs!r}", lineno)
        if lhs in target:
            raise FormatError(f"duplicate rule for {lhs!r}", lineno)
        try:
            alphabet.parse(rhs)
        except AlphabetError as exc:
            raise FormatError(str(exc), lineno) from None
        target[lhs] = rhs
    if alphabet is None:
        raise FormatError("missing 'letters:' header")
    missing = [g for g in alphabet.generators if g not in rules]
    if missing:
        raise FormatError(f"no rule for {' '.join(missing)}")
    inverse_spec = None
    if inv_rules:
        missing = [g for g in alphabet.generators if g not in inv_rules]
        if missing:
            raise FormatError(f"inverse block has no rule for {' '.join(missing)}")
        inverse_spec = inv_rules
    phi = GroupEndo.from_strings(alphabet, rules, inverse_spec, name=name)
    return GroupEndo(phi.alphabet, phi.images, phi.inverse_images, name, frozenset(assertions))


def format_fga(phi: GroupEndo) -> str:
    lines = [f"letters: {' '.join(phi.alphabet.generators)}"]
    if phi.assertions:
        lines.append(f"assert: {' '.join(sorted(phi.assertions))}")
    lines += [f"{g} -> {w}" for g, w in zip(phi.alphabet.generators, phi.images)]
    if phi.inverse_images is not None:
        lines.append("inverse:")
        lines += [f"{g} -> {w}" for g, w in zip(phi.alphabet.generators, phi.inverse_images)]
    return "\n".join(lines) + "\n"


def load_fga(path: str | Path) -> GroupEndo:
    path = Path(path)
    return parse_fga(path.read_text(encoding="utf-8"), name=path.stem)
