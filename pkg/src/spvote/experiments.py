"""Monte-Carlo sample-complexity experiments: SP against classical rules.

Every (trial, sample size) cell draws from its own seed, derived from the
master seed by a counter, so results do not depend on execution order or on
the number of worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .baselines import borda, copeland
from .errors import ParameterError
from .models import ModelSpec, sample
from .rankings import (
    MAX_DENSE_M,
    enumerate_rankings,
    kendall_tau,
    rank_indices,
    rankings_array,
)
from .sp_engine import (
    ModalRanking,
    Profile,
    _argmax_low_index,
    modal_scores,
    pnv_scores,
    prediction_matrix,
)

log = logging.getLogger(__name__)

AGGREGATORS = ("sp-full", "sp-modal", "copeland", "borda")


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    aggregators: tuple[str, ...] = ("sp-modal", "copeland")
    sample_sizes: tuple[int, ...] = (10, 50, 100, 200, 500)
    trials: int = 100
    bootstrap_reps: int = 1000
    confidence: float = 0.95
    seed: int = 0
    prior: object = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "aggregators", tuple(self.aggregators))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        validate_common(self.aggregators, self.sample_sizes, self.trials, self.bootstrap_reps, self.confidence)
        needs_dense = {"sp-full", "sp-modal"} & set(self.aggregators)
        if needs_dense and self.model.m > MAX_DENSE_M:
            raise ParameterError(f"SP aggregators need m <= {MAX_DENSE_M}, model has m={self.model.m}")


def validate_common(aggregators, sample_sizes, trials, reps, confidence) -> None:
    unknown = set(aggregators) - set(AGGREGATORS)
    if unknown or not aggregators:
        raise ParameterError(f"unknown or missing aggregators: {sorted(unknown)}")
    if not sample_sizes or any(n < 1 for n in sample_sizes):
        raise ParameterError("sample sizes must be positive")
    if any(b <= a for a, b in zip(sample_sizes, sample_sizes[1:])):
        raise ParameterError(f"sample sizes must be strictly increasing: {sample_sizes}")
    if trials < 1 or reps < 1:
        raise ParameterError("trials and bootstrap_reps must be positive")
    if not 0 < confidence < 1:
        raise ParameterError(f"confidence {confidence} outside (0, 1)")


@dataclass(frozen=True)
class ResultRow:
    aggregator: str
    n: int
    mean_kt: float
    ci_lo: float
    ci_hi: float
    trials: int


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    meta: dict = field(default_factory=dict)

    def row(self, aggregator: str, n: int) -> ResultRow:
        for r in self.rows:
            if r.aggregator == aggregator and r.n == n:
                return r
        raise KeyError((aggregator, n))

    def series(self, aggregator: str) -> list[ResultRow]:
        return [r for r in self.rows if r.aggregator == aggregator]


def bootstrap_ci(values: Sequence[float], reps: int, level: float, seed) -> tuple[float, float, float]:
    """Mean and percentile-bootstrap confidence interval of the mean."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ParameterError("bootstrap of an empty sample")
    if reps < 1 or not 0 < level < 1:
        raise ParameterError("need reps >= 1 and level in (0, 1)")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(reps, x.size))
    means = x[idx].mean(axis=1)
    mean = float(x.mean())
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    # A percentile interval from very few replicates need not contain the mean.
    return mean, float(min(lo, mean)), float(max(hi, mean))


def _cell_seed(master: int, *counters: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(counters))


class _Aggregate:
    """Applies the configured aggregators to voter arrays of one model."""

    def __init__(self, spec: ModelSpec, aggregators: Sequence[str], prior=None):
        self.spec = spec
        self.aggregators = tuple(aggregators)
        self.rankings = enumerate_rankings(spec.m) if spec.m <= MAX_DENSE_M else None
        if {"sp-full", "sp-modal"} & set(aggregators):
            self.Q = prediction_matrix(spec, prior)  # Q[j, i] = Pr_o(j | i)
            self.modal = self.Q.argmax(axis=0)

    def __call__(self, votes: np.ndarray) -> dict[str, tuple[int, ...]]:
        out = {}
        vote_idx = rank_indices(votes) if self.rankings is not None else None
        for agg in self.aggregators:
            if agg == "sp-full":
                classes, s = pnv_scores(vote_idx, self.Q[:, vote_idx].T, self.spec.m)
                out[agg] = self.rankings[_argmax_low_index(classes, s)]
            elif agg == "sp-modal":
                classes, s = modal_scores(vote_idx, self.modal[vote_idx], self.spec.m)
                out[agg] = self.rankings[_argmax_low_index(classes, s)]
            elif agg == "copeland":
                out[agg] = copeland(votes)
            else:
                out[agg] = borda(votes)
        return out


def _summarise(kts: Mapping[tuple[str, int], list[float]], aggregators, sample_sizes,
               reps: int, level: float, seed: int) -> list[ResultRow]:
    rows = []
    for a_i, agg in enumerate(aggregators):
        for n_i, n in enumerate(sample_sizes):
            vals = kts[(agg, n)]
            mean, lo, hi = bootstrap_ci(vals, reps, level, _cell_seed(seed, 1, a_i, n_i))
            rows.append(ResultRow(agg, n, mean, lo, hi, len(vals)))
    return rows


def run_sample_complexity(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentResult:
    """Mean Kendall-Tau distance to the ground truth per aggregator and sample size."""
    spec = cfg.model
    agg = _Aggregate(spec, cfg.aggregators, cfg.prior)
    truth = spec.ground_truth

    def one_trial(t: int) -> dict[tuple[str, int], float]:
        res = {}
        for n_i, n in enumerate(cfg.sample_sizes):
            votes = sample(spec, n, _cell_seed(cfg.seed, 0, t, n_i))
            for name, ranking in agg(votes).items():
                res[(name, n)] = kendall_tau(ranking, truth)
        return res

    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_trial = list(pool.map(one_trial, range(cfg.trials)))
    kts = {(a, n): [tr[(a, n)] for tr in per_trial] for a in cfg.aggregators for n in cfg.sample_sizes}
    rows = _summarise(kts, cfg.aggregators, cfg.sample_sizes, cfg.bootstrap_reps, cfg.confidence, cfg.seed)
    meta = {
        "model": spec.kind,
        "m": spec.m,
        "ground_truth": list(truth),
        "prior": "uniform" if cfg.prior is None else "custom",
        "predictions": "sp-full: exact Pr_o vectors; sp-modal: argmax of Pr_o",
    }
    return ExperimentResult(rows, meta)


def run_real_data(profiles: Mapping, truths: Mapping, aggregators: Sequence[str],
                  sample_sizes: Sequence[int], trials: int, seed: int,
                  bootstrap_reps: int = 1000, confidence: float = 0.95,
                  threads: int | None = None) -> ExperimentResult:
    """Subsampled aggregation of per-question profiles against known ground truths.

    ``profiles`` maps a question key to a :class:`Profile`; ``truths`` maps the
    same key to the ground-truth ranking in the profile's global ids. SP-modal
    uses only the reports whose prediction is a full ranking. KT distances are
    averaged across questions within each trial.
    """
    aggregators = tuple(aggregators)
    sample_sizes = tuple(int(n) for n in sample_sizes)
    validate_common(aggregators, sample_sizes, trials, bootstrap_reps, confidence)
    if "sp-full" in aggregators:
        raise ParameterError("real data carries no full-posterior predictions")
    keys = sorted(profiles)
    if not keys:
        raise ParameterError("no profiles given")
    missing = [k for k in keys if k not in truths]
    if missing:
        raise ParameterError(f"no ground truth for questions {missing}")

    prepared = []
    for k in keys:
        p: Profile = profiles[k]
        local = {a: j for j, a in enumerate(p.alternatives)}
        truth_local = tuple(local[a] for a in truths[k])
        votes = p.votes()
        modal = np.array([isinstance(r.prediction, ModalRanking) for r in p.reports])
        preds = np.array([r.prediction.ranking if isinstance(r.prediction, ModalRanking) else tuple(range(p.m))
                          for r in p.reports], dtype=np.int64).reshape(-1, p.m)
        prepared.append((p.m, votes, preds, modal, truth_local))

    available = min(v.shape[0] for _, v, _, _, _ in prepared)
    clipped = [n for n in sample_sizes if n > available]

    def one_trial(t: int) -> dict[tuple[str, int], float]:
        res = {}
        for n_i, n in enumerate(sample_sizes):
            rng = np.random.default_rng(_cell_seed(seed, 0, t, n_i))
            per_agg = {a: [] for a in aggregators}
            for m, votes, preds, modal, truth in prepared:
                take = min(n, votes.shape[0])
                idx = np.sort(rng.choice(votes.shape[0], size=take, replace=False))
                v = votes[idx]
                for a in aggregators:
                    if a == "copeland":
                        out = copeland(v)
                    elif a == "borda":
                        out = borda(v)
                    else:
                        keep = idx[modal[idx]]
                        if keep.size == 0:
                            out = copeland(v)
                        else:
                            vi = rank_indices(votes[keep])
                            classes, s = modal_scores(vi, rank_indices(preds[keep]), m)
                            out = enumerate_rankings(m)[_argmax_low_index(classes, s)]
                    per_agg[a].append(kendall_tau(out, truth))
            for a in aggregators:
                res[(a, n)] = float(np.mean(per_agg[a]))
        return res

    with ThreadPoolExecutor(max_workers=threads) as pool:
        per_trial = list(pool.map(one_trial, range(trials)))
    kts = {(a, n): [tr[(a, n)] for tr in per_trial] for a in aggregators for n in sample_sizes}
    rows = _summarise(kts, aggregators, sample_sizes, bootstrap_reps, confidence, seed)
    meta = {"questions": len(keys), "min_voters": available}
    if clipped:
        meta["clipped_sample_sizes"] = clipped
        log.warning("sample sizes %s exceed the %d available voters; clipped", clipped, available)
    return ExperimentResult(rows, meta)


def uniform_guess_kt(m: int) -> float:
    """Expected distance between a fixed ranking and a uniformly random one."""
    return m * (m - 1) / 4


def simulate_reports(spec: ModelSpec, n: int, seed, prior=None) -> tuple[np.ndarray, np.ndarray]:
    """Votes drawn from ``spec`` and each voter's modal prediction (argmax of ``Pr_o``)."""
    if spec.m > MAX_DENSE_M:
        raise ParameterError(f"modal predictions need m <= {MAX_DENSE_M}, model has m={spec.m}")
    votes = sample(spec, n, seed)
    modal = prediction_matrix(spec, prior).argmax(axis=0)
    return votes, rankings_array(spec.m)[modal[rank_indices(votes)]]
