"""Classical rank aggregation rules used as comparators."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionError, ParameterError
from .rankings import Ranking


def _votes_array(votes) -> np.ndarray:
    V = np.asarray(votes, dtype=np.int64)
    if V.ndim != 2 or V.shape[0] == 0:
        raise ParameterError("need a non-empty sequence of rankings")
    m = V.shape[1]
    if np.any(np.sort(V, axis=1) != np.arange(m)[None, :]):
        raise DimensionError("every vote must rank the same m alternatives exactly once")
    return V


def pairwise_tally(votes: Sequence[Sequence[int]]) -> np.ndarray:
    """``W[a, b]`` = number of votes ranking ``a`` above ``b``."""
    V = _votes_array(votes)
    n, m = V.shape
    pos = np.empty_like(V)
    pos[np.arange(n)[:, None], V] = np.arange(m)[None, :]
    return (pos[:, :, None] < pos[:, None, :]).sum(axis=0)


def copeland_scores(tally: np.ndarray) -> np.ndarray:
    """Majority wins plus half a point per tied pair."""
    W = np.asarray(tally, dtype=float)
    margin = W - W.T
    m = W.shape[0]
    ties = (margin == 0).sum(axis=1) - 1  # diagonal
    return (margin > 0).sum(axis=1) + 0.5 * ties if m > 1 else np.zeros(1)


def order_by_score(scores: np.ndarray) -> Ranking:
    """Sort alternatives by descending score, ties to the lower id."""
    scores = np.asarray(scores, dtype=float)
    return tuple(int(a) for a in sorted(range(scores.size), key=lambda a: (-scores[a], a)))


def copeland(votes: Sequence[Sequence[int]]) -> Ranking:
    return order_by_score(copeland_scores(pairwise_tally(votes)))


def borda_scores(votes: Sequence[Sequence[int]]) -> np.ndarray:
    V = _votes_array(votes)
    n, m = V.shape
    scores = np.zeros(m)
    np.add.at(scores, V, np.broadcast_to(np.arange(m - 1, -1, -1), V.shape))
    return scores


def borda(votes: Sequence[Sequence[int]]) -> Ranking:
    return order_by_score(borda_scores(votes))
