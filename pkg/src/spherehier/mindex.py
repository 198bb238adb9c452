"""Multi-index combinatorics.

A multi-index of degree ``d`` in ``n`` variables is a tuple of ``n``
nonnegative integers summing to ``d``.  All matrix bases in the package are
ordered by :func:`enumerate_multi_indices`, which is graded-lex: within a
degree, larger leading exponents come first, e.g. ``(2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence, Tuple

MultiIndex = Tuple[int, ...]


def _gen(n: int, d: int):
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _gen(n - 1, d - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_multi_indices(n: int, d: int) -> tuple[MultiIndex, ...]:
    """All multi-indices of degree ``d`` in ``n`` variables, graded-lex order."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if d < 0:
        raise ValueError(f"need d >= 0, got {d}")
    return tuple(_gen(n, d))


@lru_cache(maxsize=None)
def index_map(n: int, d: int) -> dict[MultiIndex, int]:
    """Rank lookup: multi-index -> position in :func:`enumerate_multi_indices`."""
    return {a: k for k, a in enumerate(enumerate_multi_indices(n, d))}


def dim_sym(n: int, d: int) -> int:
    """Dimension of the symmetric power S^d(R^n), i.e. C(n+d-1, d)."""
    if n < 1 or d < 0:
        raise ValueError(f"invalid (n, d) = ({n}, {d})")
    return math.comb(n + d - 1, d)


@lru_cache(maxsize=None)
def multinomial(alpha: MultiIndex) -> int:
    """Exact multinomial coefficient |alpha|! / (alpha_1! ... alpha_n!)."""
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative entry in multi-index {alpha}")
    out = 1
    running = 0
    # product of binomials avoids the large intermediate factorial
    for a in alpha:
        running += a
        out *= math.comb(running, a)
    return out


def multi_of_tensor(i: Sequence[int], n: int) -> MultiIndex:
    """Occurrence counts of a tensor index ``i`` with entries in ``1..n``.

    >>> multi_of_tensor((2, 1, 2), 3)
    (1, 2, 0)
    """
    counts = [0] * n
    for k in i:
        if not 1 <= k <= n:
            raise ValueError(f"tensor index entry {k} outside 1..{n}")
        counts[k - 1] += 1
    return tuple(counts)


def add(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: MultiIndex, beta: MultiIndex) -> MultiIndex | None:
    """``alpha - beta`` or None when some entry would go negative."""
    out = tuple(a - b for a, b in zip(alpha, beta))
    if any(c < 0 for c in out):
        return None
    return out


def factorial(alpha: MultiIndex) -> int:
    """alpha! = alpha_1! ... alpha_n!"""
    return math.prod(math.factorial(a) for a in alpha)


def embed(alpha: MultiIndex, n_new: int) -> MultiIndex:
    """Pad with trailing zeros up to ``n_new`` variables."""
    if n_new < len(alpha):
        raise ValueError(f"cannot embed {len(alpha)} variables into {n_new}")
    return tuple(alpha) + (0,) * (n_new - len(alpha))


def label(alpha: MultiIndex) -> str:
    return ",".join(str(a) for a in alpha)
