"""Compiled inner loops for long words.

Letters are small non-negative integers and the inverse of letter ``c`` is
``c ^ 1``; every kernel relies on that encoding.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def free_reduce(codes):
    out = np.empty(codes.shape[0], dtype=np.int32)
    top = 0
    for i in range(codes.shape[0]):
        c = codes[i]
        if top > 0 and out[top - 1] == (c ^ 1):
            top -= 1
        else:
            out[top] = c
            top += 1
    return out[:top].copy()


@numba.njit(cache=True)
def substitute_reduce(codes, flat, offsets, lengths):
    """Replace every letter by its image and freely reduce, in one pass."""
    total = 0
    for i in range(codes.shape[0]):
        total += lengths[codes[i]]
    out = np.empty(total, dtype=np.int32)
    top = 0
    for i in range(codes.shape[0]):
        c = codes[i]
        start = offsets[c]
        for j in range(start, start + lengths[c]):
            x = flat[j]
            if top > 0 and out[top - 1] == (x ^ 1):
                top -= 1
            else:
                out[top] = x
                top += 1
    return out[:top].copy()


@numba.njit(cache=True)
def junction_cancellation(left, right):
    """Number of letters cancelled when the reduced words are concatenated."""
    k = 0
    n = min(left.shape[0], right.shape[0])
    while k < n and left[left.shape[0] - 1 - k] == (right[k] ^ 1):
        k += 1
    return k


@numba.njit(cache=True)
def earlier_suffix_lengths(codes, sigma):
    """Suffix automaton pass over ``codes`` (letters in ``range(sigma)``).

    Entry ``i`` of the result is the length of the longest suffix of
    ``codes[:i + 1]`` that already ends at some earlier position, i.e. the
    length of the suffix link of the state created at step ``i``.  Every
    factor ending at ``i`` and longer than that is a first occurrence.
    """
    n = codes.shape[0]
    max_states = 2 * n + 2
    nxt = np.full((max_states, sigma), -1, dtype=np.int32)
    link = np.full(max_states, -1, dtype=np.int32)
    length = np.zeros(max_states, dtype=np.int32)
    out = np.empty(n, dtype=np.int32)
    size = 1
    last = 0
    for i in range(n):
        c = codes[i]
        cur = size
        size += 1
        length[cur] = length[last] + 1
        p = last
        while p != -1 and nxt[p, c] == -1:
            nxt[p, c] = cur
            p = link[p]
        if p == -1:
            link[cur] = 0
        else:
            q = nxt[p, c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = size
                size += 1
                length[clone] = length[p] + 1
                for s in range(sigma):
                    nxt[clone, s] = nxt[q, s]
                link[clone] = link[q]
                while p != -1 and nxt[p, c] == q:
                    nxt[p, c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        last = cur
        out[i] = length[link[cur]]
    return out
