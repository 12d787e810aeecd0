from hypothesis import given
from hypothesis import strategies as st

import freeword.compressed as cw
from freeword.words import apply, reduce, reduce_codes

from conftest import corpus

codes = st.lists(st.integers(0, 5), max_size=40)


def tree(w):
    """A lopsided tree, to exercise unbalanced concatenation."""
    node = None
    for c in w:
        node = cw.concat(node, cw.leaf(c))
    return node


@given(codes, codes)
def test_concat_take_drop(u, v):
    n = cw.concat(tree(u), tree(v))
    w = u + v
    assert cw.to_letters(n) == w and cw.length(n) == len(w)
    for k in range(len(w) + 1):
        assert cw.to_letters(cw.take(n, k)) == w[:k]
        assert cw.to_letters(cw.drop(n, k)) == w[k:]


@given(codes, codes)
def test_common_prefix(u, v):
    expected = next((i for i, (x, y) in enumerate(zip(u, v)) if x != y), min(len(u), len(v)))
    assert cw.common_prefix(cw.from_letters(u), cw.from_letters(v)) == expected


@given(codes, codes)
def test_reduced_concat(u, v):
    u, v = list(reduce_codes(u)), list(reduce_codes(v))
    got = cw.to_letters(cw.reduced_concat(cw.from_letters(u), cw.from_letters(v)))
    assert got == list(reduce_codes(u + v))


@given(codes)
def test_inverse(u):
    u = list(reduce_codes(u))
    assert cw.to_letters(cw.inverse(cw.from_letters(u))) == [c ^ 1 for c in reversed(u)]


def test_iterated_lengths_match_direct_iteration():
    phi = corpus("alpha0.fga")
    table = [tuple(phi.image(c)) for c in range(phi.alphabet.size)]
    path = phi.alphabet.parse("e c D")
    lengths = cw.iterated_lengths(table, path, 8)
    w = reduce("e c D", phi.alphabet)
    direct = [len(w)]
    for _ in range(8):
        w = apply(phi, w)
        direct.append(len(w))
    assert lengths == direct


def test_iterated_lengths_beyond_memory():
    phi = corpus("omega.fga")
    table = [tuple(phi.image(c)) for c in range(phi.alphabet.size)]
    lengths = cw.iterated_lengths(table, [0], 60)
    # positive map: letter counts follow (|a|, |b|) -> (|a| + |b|, |a| + 2|b|)
    la, lb = 1, 1
    expected = [1]
    for _ in range(60):
        la, lb = la + lb, la + 2 * lb
        expected.append(la)
    assert lengths == expected
