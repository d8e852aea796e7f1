"""Colexicographic ranking of k-subsets of ``range(n)``.

A k-subset ``s_0 < s_1 < ... < s_{k-1}`` has rank ``sum(C(s_i, i + 1))``.
Colex order coincides with numeric order of the subset bitmasks, which makes
enumeration a matter of stepping to the next integer with the same popcount.
"""

from __future__ import annotations

from math import comb
from typing import Iterable, Iterator, Sequence


def rank(subset: Iterable[int]) -> int:
    return sum(comb(s, i + 1) for i, s in enumerate(sorted(subset)))


def unrank(r: int, k: int) -> tuple[int, ...]:
    """Inverse of :func:`rank` for subsets of size ``k``."""
    if r < 0:
        raise ValueError(f"rank must be non-negative, got {r}")
    out = []
    for i in range(k, 0, -1):
        # largest c with C(c, i) <= r
        c = i - 1
        while comb(c + 1, i) <= r:
            c += 1
        out.append(c)
        r -= comb(c, i)
    out.reverse()
    return tuple(out)


def mask_of(subset: Iterable[int]) -> int:
    mask = 0
    for s in subset:
        mask |= 1 << s
    return mask


def members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def iter_masks(n: int, k: int) -> Iterator[int]:
    """Bitmasks of all k-subsets of range(n), in colex (= numeric) order."""
    if k < 0 or k > n:
        return
    if k == 0:
        yield 0
        return
    mask = (1 << k) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        # Gosper's hack
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


def iter_colex(n: int, k: int) -> Iterator[tuple[int, ...]]:
    for mask in iter_masks(n, k):
        yield members(mask)


def iter_sub_masks(pool: Sequence[int], k: int) -> Iterator[int]:
    """k-subsets of an arbitrary index pool, as masks over the full index space.

    Order is colex with respect to the pool, which is colex over the full
    index space whenever ``pool`` is increasing.
    """
    for local in iter_masks(len(pool), k):
        mask = 0
        i = 0
        while local:
            if local & 1:
                mask |= 1 << pool[i]
            local >>= 1
            i += 1
        yield mask
