"""Grammar-compressed reduced words.

Iterated images such as f^60(e) are far too long to store, but they are
built from a handful of shared pieces.  Words here are binary trees whose
nodes carry length and polynomial hashes of the word and of its inverse,
so the cancellation length at a junction is found by comparing prefix
hashes (galloping search) without expanding anything.

Hashes are taken modulo the Mersenne prime 2^61 - 1 with two bases; a
false match needs a simultaneous collision in both.
"""

from __future__ import annotations

from dataclasses import dataclass

_P = (1 << 61) - 1
_B1 = 1_000_003
_B2 = 998_244_353


class Node:
    __slots__ = ("left", "right", "letter", "length", "h1", "h2", "p1", "p2",
                 "r1", "r2", "first", "last", "depth", "_inv")

    def __init__(self):
        self._inv = None


def leaf(c: int) -> Node:
    n = Node()
    n.left = n.right = None
    n.letter = c
    n.length = 1
    v = c + 1
    w = (c ^ 1) + 1
    n.h1 = v % _P
    n.h2 = v % _P
    n.r1 = w % _P
    n.r2 = w % _P
    n.p1 = _B1
    n.p2 = _B2
    n.first = n.last = c
    n.depth = 0
    return n


def concat(a: Node | None, b: Node | None) -> Node | None:
    """Plain concatenation, no cancellation."""
    if a is None:
        return b
    if b is None:
        return a
    n = Node()
    n.left, n.right = a, b
    n.letter = -1
    n.length = a.length + b.length
    n.h1 = (a.h1 + a.p1 * b.h1) % _P
    n.h2 = (a.h2 + a.p2 * b.h2) % _P
    n.r1 = (b.r1 + b.p1 * a.r1) % _P
    n.r2 = (b.r2 + b.p2 * a.r2) % _P
    n.p1 = (a.p1 * b.p1) % _P
    n.p2 = (a.p2 * b.p2) % _P
    n.first = a.first
    n.last = b.last
    n.depth = max(a.depth, b.depth) + 1
    return n


def inverse(a: Node | None) -> Node | None:
    if a is None:
        return None
    if a._inv is not None:
        return a._inv
    if a.letter >= 0:
        inv = leaf(a.letter ^ 1)
    else:
        inv = concat(inverse(a.right), inverse(a.left))
    inv._inv = a
    a._inv = inv
    return inv


def length(a: Node | None) -> int:
    return 0 if a is None else a.length


def prefix_hash(a: Node, k: int) -> tuple[int, int]:
    """Hashes of the first k letters of a."""
    acc1 = acc2 = 0
    m1 = m2 = 1
    node = a
    while k > 0:
        if k == node.length:
            acc1 += m1 * node.h1
            acc2 += m2 * node.h2
            break
        left = node.left
        if k >= left.length:
            acc1 += m1 * left.h1
            acc2 += m2 * left.h2
            m1 = (m1 * left.p1) % _P
            m2 = (m2 * left.p2) % _P
            k -= left.length
            node = node.right
        else:
            node = left
    return acc1 % _P, acc2 % _P


def common_prefix(a: Node | None, b: Node | None) -> int:
    """Length of the longest common prefix."""
    if a is None or b is None or a.first != b.first:
        return 0
    limit = min(a.length, b.length)
    lo, step = 1, 1
    # gallop: lo always a known common length
    while True:
        hi = min(lo + step, limit)
        if prefix_hash(a, hi) != prefix_hash(b, hi):
            break
        lo = hi
        if lo == limit:
            return lo
        step *= 2
    # lo matches, hi does not
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if prefix_hash(a, mid) == prefix_hash(b, mid):
            lo = mid
        else:
            hi = mid
    return lo


def take(a: Node | None, k: int) -> Node | None:
    if a is None or k <= 0:
        return None
    if k >= a.length:
        return a
    left = a.left
    if k <= left.length:
        return take(left, k)
    return concat(left, take(a.right, k - left.length))


def drop(a: Node | None, k: int) -> Node | None:
    if a is None or k >= a.length:
        return None
    if k <= 0:
        return a
    left = a.left
    if k >= left.length:
        return drop(a.right, k - left.length)
    return concat(drop(left, k), a.right)


def cancellation(a: Node | None, b: Node | None) -> int:
    """Number of letters cancelled from each side when a and b are joined."""
    if a is None or b is None or a.last != (b.first ^ 1):
        return 0
    return common_prefix(inverse(a), b)


def reduced_concat(a: Node | None, b: Node | None) -> Node | None:
    c = cancellation(a, b)
    if c == 0:
        return concat(a, b)
    return concat(take(a, a.length - c), drop(b, c))


def from_letters(codes) -> Node | None:
    """Balanced tree over an already reduced letter sequence."""
    nodes = [leaf(int(c)) for c in codes]
    if not nodes:
        return None
    while len(nodes) > 1:
        nxt = [concat(nodes[i], nodes[i + 1]) for i in range(0, len(nodes) - 1, 2)]
        if len(nodes) % 2:
            nxt.append(nodes[-1])
        nodes = nxt
    return nodes[0]


def reduced_product(parts) -> Node | None:
    out = None
    for p in parts:
        out = reduced_concat(out, p)
    return out


def to_letters(a: Node | None, limit: int | None = None) -> list[int]:
    out: list[int] = []
    if a is None:
        return out
    stack = [a]
    while stack:
        node = stack.pop()
        if limit is not None and len(out) >= limit:
            break
        if node.letter >= 0:
            out.append(node.letter)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return out


@dataclass
class IteratedImages:
    """Compressed images f^k(x) of every letter, built level by level.

    ``images`` maps a letter code to the image of that letter (inverse
    letters included); ``level`` is k.
    """

    image_codes: list[tuple[int, ...]]
    level: int = 0

    def __post_init__(self):
        self.images = [leaf(c) for c in range(len(self.image_codes))]

    def step(self) -> None:
        prev = self.images
        new = [None] * len(prev)
        for c in range(0, len(prev), 2):
            new[c] = reduced_product(prev[y] for y in self.image_codes[c])
            new[c + 1] = inverse(new[c])
        self.images = new
        self.level += 1

    def image_of(self, codes) -> Node | None:
        return reduced_product(self.images[int(c)] for c in codes)


def iterated_lengths(image_codes: list[tuple[int, ...]], path, n_max: int) -> list[int]:
    """Exact reduced lengths |f^k(path)| for k = 0..n_max.

    ``image_codes[c]`` is the reduced image of letter code c (both
    orientations).  Lengths are Python integers and may be astronomically
    large.
    """
    it = IteratedImages(image_codes)
    out = [length(it.image_of(path))]
    for _ in range(n_max):
        it.step()
        out.append(length(it.image_of(path)))
    return out
