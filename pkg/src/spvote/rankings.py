"""Permutation arithmetic over m alternatives.

A ranking is a tuple ``r`` of the alternatives ``0..m-1`` read from the top,
so ``r[j]`` is the alternative in position ``j``. Rankings are indexed densely
by their Lehmer code, which coincides with lexicographic order; index 0 is
the identity and index ``m! - 1`` the reversal.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ParseError

Ranking = tuple[int, ...]

MAX_ENUM_M = 10
# m!-by-m! matrices beyond this size do not fit comfortably in memory.
MAX_DENSE_M = 7


def as_ranking(seq: Iterable[int], m: int | None = None) -> Ranking:
    """Validate ``seq`` as a bijection on ``0..m-1`` and return it as a tuple."""
    r = tuple(int(a) for a in seq)
    if m is not None and len(r) != m:
        raise DimensionError(f"ranking {r} has length {len(r)}, expected {m}")
    if sorted(r) != list(range(len(r))):
        raise ParseError(f"{r} is not a permutation of 0..{len(r) - 1}")
    return r


def inverse(r: Sequence[int]) -> Ranking:
    """Position of each alternative: ``inverse(r)[a] == r.index(a)``."""
    inv = [0] * len(r)
    for pos, a in enumerate(r):
        inv[a] = pos
    return tuple(inv)


def kendall_tau(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of alternative pairs ordered differently by ``a`` and ``b``."""
    if len(a) != len(b):
        raise DimensionError(f"rankings of length {len(a)} and {len(b)}")
    pos_b = inverse(b)
    seq = [pos_b[x] for x in a]
    return sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])


def _check_enum(m: int, limit: int = MAX_ENUM_M) -> None:
    if not 1 <= m <= limit:
        raise CapacityError(f"m={m} outside exhaustive range 1..{limit}")


@lru_cache(maxsize=None)
def enumerate_rankings(m: int) -> tuple[Ranking, ...]:
    """All ``m!`` rankings in Lehmer (lexicographic) order."""
    _check_enum(m)
    return tuple(itertools.permutations(range(m)))


@lru_cache(maxsize=None)
def rankings_array(m: int) -> np.ndarray:
    """``enumerate_rankings(m)`` as a read-only ``(m!, m)`` integer array."""
    arr = np.array(enumerate_rankings(m), dtype=np.int64).reshape(-1, m)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def positions_array(m: int) -> np.ndarray:
    """Row ``i`` holds the inverse of ranking ``i``."""
    R = rankings_array(m)
    P = np.empty_like(R)
    rows = np.arange(R.shape[0])[:, None]
    P[rows, R] = np.arange(m)[None, :]
    P.setflags(write=False)
    return P


def rank_index(r: Sequence[int]) -> int:
    """Lehmer-code index of ``r`` in ``enumerate_rankings(len(r))``."""
    r = as_ranking(r)
    m = len(r)
    idx = 0
    remaining = list(range(m))
    for pos, a in enumerate(r):
        k = remaining.index(a)
        idx += k * math.factorial(m - 1 - pos)
        remaining.pop(k)
    return idx


def unrank(i: int, m: int) -> Ranking:
    """Inverse of :func:`rank_index`."""
    if m < 1:
        raise CapacityError(f"m={m} must be positive")
    if not 0 <= i < math.factorial(m):
        raise IndexError(f"rank index {i} outside [0, {m}!)")
    remaining = list(range(m))
    out = []
    for pos in range(m):
        f = math.factorial(m - 1 - pos)
        k, i = divmod(i, f)
        out.append(remaining.pop(k))
    return tuple(out)


def rank_indices(R: np.ndarray) -> np.ndarray:
    """Vectorised :func:`rank_index` for an ``(n, m)`` array of rankings."""
    R = np.asarray(R, dtype=np.int64)
    n, m = R.shape
    idx = np.zeros(n, dtype=np.int64)
    for pos in range(m):
        # Lehmer digit: later entries smaller than the current one.
        smaller = (R[:, pos + 1:] < R[:, pos:pos + 1]).sum(axis=1)
        idx += smaller * math.factorial(m - 1 - pos)
    return idx


@lru_cache(maxsize=None)
def kt_matrix(m: int) -> np.ndarray:
    """Pairwise Kendall-Tau distances between all rankings, ``(m!, m!)``."""
    _check_enum(m, MAX_DENSE_M)
    P = positions_array(m)
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
    if not pairs:
        D = np.zeros((1, 1), dtype=np.int64)
    else:
        ia = [a for a, _ in pairs]
        ib = [b for _, b in pairs]
        B = (P[:, ia] < P[:, ib]).astype(np.float64)
        D = np.rint(B @ (1.0 - B).T + (1.0 - B) @ B.T).astype(np.int64)
    D.setflags(write=False)
    return D


@dataclass(frozen=True)
class PartialRanking:
    """A total order over a subset of the alternatives ``0..m-1``."""

    order: Ranking
    m: int

    def __post_init__(self) -> None:
        order = tuple(int(a) for a in self.order)
        object.__setattr__(self, "order", order)
        if len(set(order)) != len(order):
            raise ParseError(f"duplicate alternative in {order}")
        if len(order) > self.m:
            raise DimensionError(f"{len(order)} alternatives ranked out of m={self.m}")
        for a in order:
            if not 0 <= a < self.m:
                raise DimensionError(f"alternative {a} outside 0..{self.m - 1}")

    @property
    def k(self) -> int:
        return len(self.order)


def restrict(r: Sequence[int], subset: Iterable[int]) -> PartialRanking:
    """Relative order of the members of ``subset`` within ``r``."""
    r = as_ranking(r)
    subset = set(int(a) for a in subset)
    unknown = subset.difference(r)
    if unknown:
        raise DimensionError(f"alternatives {sorted(unknown)} not in ranking of size {len(r)}")
    return PartialRanking(tuple(a for a in r if a in subset), len(r))


def consistent_mask(p: PartialRanking) -> np.ndarray:
    """Boolean mask over ``enumerate_rankings(p.m)`` of the extensions of ``p``."""
    _check_enum(p.m)
    P = positions_array(p.m)
    mask = np.ones(P.shape[0], dtype=bool)
    for a, b in zip(p.order, p.order[1:]):
        mask &= P[:, a] < P[:, b]
    return mask


def extensions(p: PartialRanking) -> list[Ranking]:
    """All full rankings whose restriction to ``p``'s subset is ``p``."""
    rankings = enumerate_rankings(p.m)
    return [rankings[i] for i in np.flatnonzero(consistent_mask(p))]


def parse_ranking(text: str) -> tuple[int, ...]:
    """Parse ``"2>0>1"``; validates only that entries are distinct integers."""
    parts = text.strip().split(">")
    try:
        out = tuple(int(p) for p in parts)
    except ValueError:
        raise ParseError(f"cannot parse ranking {text!r}") from None
    if len(set(out)) != len(out):
        raise ParseError(f"duplicate alternative in ranking {text!r}")
    if any(a < 0 for a in out):
        raise ParseError(f"negative alternative in ranking {text!r}")
    return out


def format_ranking(r: Iterable[int]) -> str:
    return ">".join(str(int(a)) for a in r)
