"""Bayesian voter posteriors and surprisingly-popular (SP) aggregation.

Voters share a prior over the ground truth and know the noise model. From
their own ranking they form a posterior over the ground truth and, from it, a
prediction of the ranking another voter observes. SP aggregation compares how
often each ranking is voted with how often it is predicted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .baselines import copeland_scores, order_by_score
from .errors import CoverageError, DegeneratePriorError, DimensionError, ParameterError
from .models import ModelSpec, kernel_matrix, probs_vector, relabel_index
from .rankings import (
    MAX_DENSE_M,
    PartialRanking,
    Ranking,
    _check_enum,
    as_ranking,
    consistent_mask,
    enumerate_rankings,
    positions_array,
    rank_index,
    rank_indices,
)

# Scores within this relative distance of the maximum count as tied.
TIE_RTOL = 1e-9


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class FullPosterior:
    """Predicted distribution of another voter's ranking, indexed by RankIndex."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
            raise ParameterError("posterior weights must be a non-negative, non-zero vector")
        object.__setattr__(self, "weights", w / w.sum())


@dataclass(frozen=True)
class ModalRanking:
    ranking: Ranking


@dataclass(frozen=True)
class Top:
    alternative: int


@dataclass(frozen=True)
class TopT:
    alternatives: frozenset

    def __post_init__(self) -> None:
        if not self.alternatives:
            raise ParameterError("top-t prediction must name at least one alternative")
        object.__setattr__(self, "alternatives", frozenset(int(a) for a in self.alternatives))


PredictionReport = Union[FullPosterior, ModalRanking, Top, TopT]


@dataclass(frozen=True)
class VoterReport:
    vote: Ranking
    prediction: PredictionReport
    participant: str | None = None


@dataclass
class Profile:
    """Reports over ``m`` local alternatives.

    ``alternatives[j]`` is the global id behind local alternative ``j``; for a
    profile over a subset of a larger universe it is the subset tag.
    """

    m: int
    reports: list[VoterReport]
    alternatives: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.alternatives is None:
            self.alternatives = tuple(range(self.m))
        self.alternatives = tuple(int(a) for a in self.alternatives)
        if len(self.alternatives) != self.m or len(set(self.alternatives)) != self.m:
            raise DimensionError(f"need {self.m} distinct alternative ids, got {self.alternatives}")
        for r in self.reports:
            as_ranking(r.vote, self.m)
            p = r.prediction
            if isinstance(p, FullPosterior) and p.weights.size != math.factorial(self.m):
                raise DimensionError(f"posterior of size {p.weights.size} for m={self.m}")
            if isinstance(p, ModalRanking):
                as_ranking(p.ranking, self.m)
            if isinstance(p, Top) and not 0 <= p.alternative < self.m:
                raise DimensionError(f"top prediction {p.alternative} outside 0..{self.m - 1}")
            if isinstance(p, TopT) and not all(0 <= a < self.m for a in p.alternatives):
                raise DimensionError(f"top-t prediction {sorted(p.alternatives)} outside 0..{self.m - 1}")

    @property
    def n(self) -> int:
        return len(self.reports)

    def votes(self) -> np.ndarray:
        return np.array([r.vote for r in self.reports], dtype=np.int64).reshape(-1, self.m)

    def to_global(self, r: Sequence[int]) -> Ranking:
        return tuple(self.alternatives[a] for a in r)


# ---------------------------------------------------------------------------
# Posteriors


def _prior_vector(prior, m: int) -> np.ndarray:
    N = math.factorial(m)
    if prior is None or (isinstance(prior, str) and prior.lower() == "uniform"):
        return np.full(N, 1.0 / N)
    w = np.asarray(prior, dtype=float)
    if w.shape != (N,):
        raise DimensionError(f"prior of shape {w.shape} for m={m}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ParameterError("prior must be a probability vector")
    return w


def _normalise(w: np.ndarray) -> np.ndarray:
    total = w.sum()
    if not total > 0:
        raise DegeneratePriorError("posterior has zero total mass")
    return w / total


def likelihood_vector(sigma: Sequence[int], spec: ModelSpec) -> np.ndarray:
    """``Pr_s(sigma | sigma')`` for every candidate ground truth ``sigma'``."""
    sigma = as_ranking(sigma, spec.m)
    _check_enum(spec.m)
    identity_probs = probs_vector(spec, center=tuple(range(spec.m)))
    rel = positions_array(spec.m)[:, list(sigma)]
    return identity_probs[rank_indices(rel)]


def posterior_ground_truth(sigma: Sequence[int], spec: ModelSpec, prior=None) -> np.ndarray:
    """Bayes posterior over the ground truth after observing ``sigma``."""
    return _normalise(likelihood_vector(sigma, spec) * _prior_vector(prior, spec.m))


def posterior_matrix(spec: ModelSpec, prior=None) -> np.ndarray:
    """Column ``i`` is the ground-truth posterior of a voter observing ranking ``i``."""
    K = kernel_matrix(spec)
    joint = K.T * _prior_vector(prior, spec.m)[:, None]
    mass = joint.sum(axis=0)
    if np.any(mass <= 0):
        raise DegeneratePriorError("posterior has zero total mass for some observation")
    return joint / mass[None, :]


def prediction_matrix(spec: ModelSpec, prior=None) -> np.ndarray:
    """``Q[j, i] = Pr_o(sigma_j | sigma_i)``; every column sums to one."""
    return kernel_matrix(spec) @ posterior_matrix(spec, prior)


def predict_other(sigma: Sequence[int], spec: ModelSpec, prior=None) -> np.ndarray:
    """Distribution of the ranking another voter observes, given one's own ``sigma``."""
    if spec.m > MAX_DENSE_M:
        _check_enum(spec.m, MAX_DENSE_M)
    post = posterior_ground_truth(sigma, spec, prior)
    return _normalise(kernel_matrix(spec) @ post)


def subset_orderings(subset: Iterable[int]) -> list[Ranking]:
    """All orderings of ``subset``; the k! index order used for partial vectors."""
    items = sorted(int(a) for a in subset)
    return [tuple(items[j] for j in perm) for perm in enumerate_rankings(len(items))]


def partial_posteriors(pi: PartialRanking, spec: ModelSpec, prior=None) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth posterior and predicted partial ranking of another voter.

    The second vector is indexed by :func:`subset_orderings` of ``pi``'s subset.
    """
    if pi.m != spec.m:
        raise DimensionError(f"partial ranking over m={pi.m} for model with m={spec.m}")
    K = kernel_matrix(spec)
    orders = subset_orderings(pi.order)
    # S[t, j] = Pr_s(ordering t | ground truth j)
    S = np.stack([K[consistent_mask(PartialRanking(o, spec.m))].sum(axis=0) for o in orders])
    own = orders.index(pi.order)
    post = _normalise(S[own] * _prior_vector(prior, spec.m))
    return post, _normalise(S @ post)


# ---------------------------------------------------------------------------
# SP aggregation


def _argmax_low_index(indices: np.ndarray, scores: np.ndarray) -> int:
    top = scores.max()
    tied = scores >= top - TIE_RTOL * abs(top)
    return int(indices[tied].min())


def pnv_scores(vote_idx: np.ndarray, preds: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Observed vote classes and their prediction-normalized votes.

    ``vote_idx`` holds the RankIndex of each vote, ``preds`` the matching
    ``(n, m!)`` predicted distributions.
    """
    n = vote_idx.size
    N = math.factorial(m)
    classes, inverse_idx, counts = np.unique(vote_idx, return_inverse=True, return_counts=True)
    f = counts / n
    H = np.zeros((classes.size, N))
    np.add.at(H, inverse_idx, preds)
    H /= counts[:, None]
    eps = 1.0 / (2 * n * N)
    # h[a, b] = h(class b | class a), smoothed.
    h = H[:, classes] + eps
    return classes, f * (h / h.T).sum(axis=1)


def prediction_normalized_votes(profile: Profile) -> tuple[dict[Ranking, float], Ranking]:
    """Empirical prediction-normalized vote of each observed ranking and the winner."""
    if profile.n == 0:
        raise ParameterError("profile has no reports")
    if not all(isinstance(r.prediction, FullPosterior) for r in profile.reports):
        raise ParameterError("every report must carry a FullPosterior prediction")
    preds = np.stack([r.prediction.weights for r in profile.reports])
    classes, scores = pnv_scores(rank_indices(profile.votes()), preds, profile.m)
    rankings = enumerate_rankings(profile.m)
    winner = rankings[_argmax_low_index(classes, scores)]
    return {rankings[c]: float(s) for c, s in zip(classes, scores)}, winner


def exact_vbar(spec: ModelSpec, prior=None) -> np.ndarray:
    """Population prediction-normalized vote of every ranking."""
    f = probs_vector(spec)
    Q = prediction_matrix(spec, prior)  # Q[j, i] = h(j | i)
    return f * (Q / Q.T).sum(axis=0)


def vbar_bounds(spec: ModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper bounds on the population prediction-normalized vote."""
    f = probs_vector(spec)
    K = kernel_matrix(spec)
    return f / K.sum(axis=1), f / K.min(axis=1)


def modal_scores(vote_idx: np.ndarray, pred_idx: np.ndarray, m: int, form: str = "ratio"):
    """Observed vote classes and their modal SP scores."""
    n, N = vote_idx.size, math.factorial(m)
    f = np.bincount(vote_idx, minlength=N) / n
    g = np.bincount(pred_idx, minlength=N) / n
    eps = 1.0 / (2 * n * N)
    observed = np.unique(vote_idx)
    if form == "ratio":
        return observed, (f[observed] + eps) / (g[observed] + eps)
    if form == "difference":
        return observed, f[observed] - g[observed]
    raise ParameterError(f"unknown SP score form {form!r}")


def _modal_arrays(profile: Profile) -> tuple[np.ndarray, np.ndarray]:
    if profile.n == 0:
        raise ParameterError("profile has no reports")
    if not all(isinstance(r.prediction, ModalRanking) for r in profile.reports):
        raise ParameterError("every report must carry a ModalRanking prediction")
    preds = np.array([r.prediction.ranking for r in profile.reports], dtype=np.int64)
    return rank_indices(profile.votes()), rank_indices(preds)


def sp_modal_scores(profile: Profile, form: str = "ratio") -> dict[Ranking, float]:
    observed, s = modal_scores(*_modal_arrays(profile), profile.m, form)
    rankings = enumerate_rankings(profile.m)
    return {rankings[i]: float(v) for i, v in zip(observed, s)}


def sp_vote_modal(profile: Profile, form: str = "ratio") -> Ranking:
    """Ranking whose vote share most exceeds its predicted share."""
    observed, s = modal_scores(*_modal_arrays(profile), profile.m, form)
    return enumerate_rankings(profile.m)[_argmax_low_index(observed, s)]


def sp_winner(profile: Profile, form: str = "ratio") -> Ranking:
    """SP winner over the profile's local alternatives, by prediction type."""
    kinds = {type(r.prediction) for r in profile.reports}
    if kinds == {FullPosterior}:
        return prediction_normalized_votes(profile)[1]
    if kinds == {ModalRanking}:
        return sp_vote_modal(profile, form)
    raise ParameterError(f"cannot run SP on prediction types {sorted(k.__name__ for k in kinds)}")


def _transitive_closure(rel: np.ndarray) -> np.ndarray:
    reach = rel.copy()
    for k in range(reach.shape[0]):
        reach |= reach[:, k:k + 1] & reach[k:k + 1, :]
    return reach


def partial_sp(profiles: Sequence[Profile], aggregator: str = "copeland", m: int | None = None) -> Ranking:
    """SP per subset, then Copeland over the pairwise relations of the subset winners.

    Pairs that no subset compares directly are settled by the transitive
    closure of the direct majority relation; pairs that remain unresolved
    raise :class:`CoverageError`.
    """
    if aggregator != "copeland":
        raise ParameterError(f"unsupported aggregator {aggregator!r}")
    if not profiles:
        raise CoverageError("no subset profiles given")
    universe = sorted({a for p in profiles for a in p.alternatives})
    if m is None:
        m = universe[-1] + 1
    missing_alts = sorted(set(range(m)) - set(universe))
    if missing_alts:
        raise CoverageError(f"alternatives {missing_alts} appear in no subset")
    W = np.zeros((m, m))
    for p in profiles:
        won = p.to_global(sp_winner(p))
        for i, a in enumerate(won):
            for b in won[i + 1:]:
                W[a, b] += 1
    compared = (W + W.T) > 0
    np.fill_diagonal(compared, True)
    if not compared.all():
        reach = _transitive_closure(W > W.T)
        missing = []
        for a in range(m):
            for b in range(a + 1, m):
                if compared[a, b]:
                    continue
                if reach[a, b] and not reach[b, a]:
                    W[a, b] = 1
                elif reach[b, a] and not reach[a, b]:
                    W[b, a] = 1
                elif not (reach[a, b] or reach[b, a]):
                    missing.append((a, b))
        if missing:
            raise CoverageError(f"pairs not covered by any subset: {missing}")
    return order_by_score(copeland_scores(W))
