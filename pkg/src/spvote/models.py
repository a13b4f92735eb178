"""Concentric mixtures of Mallows (CMM) and Plackett-Luce (CMPL) models.

Every group shares the ground-truth ranking as its center and differs only in
its noise parameters: a dispersion ``phi`` per group for Mallows, a row of
position strengths ``theta`` per group for Plackett-Luce. Smaller ``phi`` and
more top-heavy ``theta`` mean a more expert group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .errors import DimensionError, ParameterError
from .rankings import (
    MAX_DENSE_M,
    PartialRanking,
    Ranking,
    _check_enum,
    as_ranking,
    consistent_mask,
    inverse,
    kendall_tau,
    positions_array,
    rank_indices,
    rankings_array,
)

TOL = 1e-9


def _as_simplex(p: Sequence[float], what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionError(f"{what} must be a non-empty vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ParameterError(f"{what} must be non-negative: {p}")
    if abs(p.sum() - 1.0) > TOL:
        raise ParameterError(f"{what} must sum to 1, got {p.sum()!r}")
    return p


@dataclass(frozen=True)
class CmmParams:
    proportions: np.ndarray
    dispersions: np.ndarray

    def __post_init__(self) -> None:
        p = _as_simplex(self.proportions, "proportions")
        phi = np.asarray(self.dispersions, dtype=float)
        if phi.shape != p.shape:
            raise DimensionError(f"{p.size} proportions but {phi.size} dispersions")
        if np.any(phi <= 0) or np.any(phi > 1):
            raise ParameterError(f"dispersions must lie in (0, 1]: {phi}")
        if np.any(np.diff(phi) < -TOL):
            raise ParameterError(f"dispersions must be non-decreasing: {phi}")
        object.__setattr__(self, "proportions", p)
        object.__setattr__(self, "dispersions", phi)

    @property
    def G(self) -> int:
        return self.proportions.size


def check_dominance(theta: np.ndarray, atol: float = TOL) -> bool:
    """True iff every prefix sum is non-increasing down the rows of ``theta``."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    prefix = np.cumsum(theta, axis=1)
    return bool(np.all(np.diff(prefix, axis=0) <= atol))


@dataclass(frozen=True)
class CmplParams:
    proportions: np.ndarray
    strengths: np.ndarray
    # Prediction-side rows in inference are plain simplex points.
    ordered: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        p = _as_simplex(self.proportions, "proportions")
        theta = np.atleast_2d(np.asarray(self.strengths, dtype=float))
        if theta.shape[0] != p.size:
            raise DimensionError(f"{p.size} proportions but {theta.shape[0]} strength rows")
        if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
            raise ParameterError("strengths must be positive")
        if np.any(np.abs(theta.sum(axis=1) - 1.0) > TOL):
            raise ParameterError(f"strength rows must sum to 1: {theta.sum(axis=1)}")
        if self.ordered:
            if np.any(np.diff(theta, axis=1) > TOL):
                raise ParameterError("strength rows must be non-increasing")
            if not check_dominance(theta):
                raise ParameterError("strength rows violate stochastic dominance")
        object.__setattr__(self, "proportions", p)
        object.__setattr__(self, "strengths", theta)

    @property
    def G(self) -> int:
        return self.proportions.size

    @property
    def m(self) -> int:
        return self.strengths.shape[1]


Params = Union[CmmParams, CmplParams]


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: Params
    m: int
    ground_truth: Ranking

    def __post_init__(self) -> None:
        if self.kind not in ("CMM", "CMPL"):
            raise ParameterError(f"unknown model kind {self.kind!r}")
        expected = CmmParams if self.kind == "CMM" else CmplParams
        if not isinstance(self.params, expected):
            raise ParameterError(f"{self.kind} needs {expected.__name__}")
        if self.m < 1:
            raise DimensionError("m must be positive")
        if self.kind == "CMPL" and self.params.m != self.m:
            raise DimensionError(f"strength rows of length {self.params.m} for m={self.m}")
        object.__setattr__(self, "ground_truth", as_ranking(self.ground_truth, self.m))

    @classmethod
    def cmm(cls, proportions, dispersions, m: int, ground_truth=None) -> "ModelSpec":
        gt = tuple(range(m)) if ground_truth is None else ground_truth
        return cls("CMM", CmmParams(proportions, dispersions), m, gt)

    @classmethod
    def cmpl(cls, proportions, strengths, ground_truth=None, ordered: bool = True) -> "ModelSpec":
        params = CmplParams(proportions, strengths, ordered=ordered)
        gt = tuple(range(params.m)) if ground_truth is None else ground_truth
        return cls("CMPL", params, params.m, gt)

    @property
    def G(self) -> int:
        return self.params.G

    def with_ground_truth(self, ground_truth) -> "ModelSpec":
        return ModelSpec(self.kind, self.params, self.m, ground_truth)


# ---------------------------------------------------------------------------
# Mallows


def _check_phi(phi: float) -> float:
    phi = float(phi)
    if not 0 < phi <= 1:
        raise ParameterError(f"dispersion {phi} outside (0, 1]")
    return phi


def mallows_normalizer(phi: float, m: int) -> float:
    """Sum of ``phi ** d(sigma, center)`` over all rankings of ``m`` items."""
    phi = _check_phi(phi)
    if phi == 1.0:
        return float(math.factorial(m))
    z = 1.0
    for i in range(1, m + 1):
        z *= (1.0 - phi**i) / (1.0 - phi)
    return z


def mallows_prob(sigma: Sequence[int], center: Sequence[int], phi: float) -> float:
    phi = _check_phi(phi)
    d = kendall_tau(sigma, center)
    return phi**d / mallows_normalizer(phi, len(center))


@lru_cache(maxsize=None)
def mahonian_counts(m: int) -> np.ndarray:
    """Number of permutations of ``m`` items with ``d`` inversions, ``d = 0..m(m-1)/2``."""
    counts = np.array([1], dtype=np.int64)
    for i in range(2, m + 1):
        # Inserting the i-th item adds 0..i-1 inversions.
        new = np.zeros(counts.size + i - 1, dtype=np.int64)
        for k in range(i):
            new[k:k + counts.size] += counts
        counts = new
    return counts


def kt_distribution(phi: float, m: int) -> np.ndarray:
    """Distribution of the distance to the center under Mallows(phi)."""
    phi = _check_phi(phi)
    counts = mahonian_counts(m).astype(float)
    w = counts * phi ** np.arange(counts.size)
    return w / w.sum()


def mallows_kt_moments(phi: float, m: int) -> tuple[float, float]:
    """Mean and standard deviation of the distance to the center under Mallows(phi)."""
    pmf = kt_distribution(phi, m)
    d = np.arange(pmf.size)
    mu = float(pmf @ d)
    var = float(pmf @ (d - mu) ** 2)
    return mu, math.sqrt(max(var, 0.0))


# ---------------------------------------------------------------------------
# Plackett-Luce


def _check_theta(theta, m: int | None = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise DimensionError("strength vector must be one-dimensional")
    if m is not None and theta.size != m:
        raise DimensionError(f"{theta.size} strengths for m={m}")
    if np.any(theta <= 0):
        raise ParameterError(f"strengths must be positive: {theta}")
    return theta


def pl_log_probs(theta: np.ndarray, ref_positions: np.ndarray) -> np.ndarray:
    """Log PL probability of rankings given the center position of each entry.

    ``ref_positions[i, j]`` is the position, in the center, of the alternative
    ranked ``j``-th by ranking ``i``.
    """
    w = np.asarray(theta, dtype=float)[ref_positions]
    tails = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    return np.sum(np.log(w) - np.log(tails), axis=-1)


def pl_prob(sigma: Sequence[int], center: Sequence[int], theta) -> float:
    """PL probability of ``sigma``: ``theta[k]`` is the strength of the center's k-th item."""
    if len(sigma) != len(center):
        raise DimensionError("ranking and center differ in length")
    theta = _check_theta(theta, len(center))
    inv = inverse(center)
    pos = np.array([inv[a] for a in sigma])
    return float(np.exp(pl_log_probs(theta, pos)))


# ---------------------------------------------------------------------------
# Mixtures


def _center(spec: ModelSpec, center) -> Ranking:
    return spec.ground_truth if center is None else as_ranking(center, spec.m)


def cmm_prob(sigma: Sequence[int], spec: ModelSpec, center=None) -> float:
    if spec.kind != "CMM":
        raise ParameterError("cmm_prob needs a CMM spec")
    c = _center(spec, center)
    if len(sigma) != spec.m:
        raise DimensionError(f"ranking of length {len(sigma)} for m={spec.m}")
    d = kendall_tau(sigma, c)
    pr = spec.params
    return float(sum(pg * phi**d / mallows_normalizer(phi, spec.m)
                     for pg, phi in zip(pr.proportions, pr.dispersions)))


def cmpl_prob(sigma: Sequence[int], spec: ModelSpec, center=None) -> float:
    if spec.kind != "CMPL":
        raise ParameterError("cmpl_prob needs a CMPL spec")
    c = _center(spec, center)
    if len(sigma) != spec.m:
        raise DimensionError(f"ranking of length {len(sigma)} for m={spec.m}")
    pr = spec.params
    return float(sum(pg * pl_prob(sigma, c, row) for pg, row in zip(pr.proportions, pr.strengths)))


def model_prob(sigma: Sequence[int], spec: ModelSpec, center=None) -> float:
    return cmm_prob(sigma, spec, center) if spec.kind == "CMM" else cmpl_prob(sigma, spec, center)


def group_log_probs(spec: ModelSpec, rankings: np.ndarray, center=None) -> np.ndarray:
    """Per-group log probabilities, shape ``(n, G)``, of an ``(n, m)`` ranking array."""
    c = np.asarray(_center(spec, center))
    R = np.atleast_2d(np.asarray(rankings, dtype=np.int64))
    inv = np.empty(spec.m, dtype=np.int64)
    inv[c] = np.arange(spec.m)
    ref = inv[R]
    pr = spec.params
    if spec.kind == "CMM":
        # Inversions of the relabelled ranking equal the distance to the center.
        d = np.zeros(R.shape[0], dtype=np.int64)
        for j in range(spec.m):
            d += (ref[:, j + 1:] < ref[:, j:j + 1]).sum(axis=1)
        logz = np.array([math.log(mallows_normalizer(phi, spec.m)) for phi in pr.dispersions])
        return d[:, None] * np.log(pr.dispersions)[None, :] - logz[None, :]
    return np.stack([pl_log_probs(row, ref) for row in pr.strengths], axis=1)


def log_probs(spec: ModelSpec, rankings: np.ndarray, center=None) -> np.ndarray:
    """Mixture log probability of each row of ``rankings``."""
    lg = group_log_probs(spec, rankings, center)
    with np.errstate(divide="ignore"):
        lw = np.log(spec.params.proportions)
    a = lg + lw[None, :]
    top = a.max(axis=1, keepdims=True)
    return (top + np.log(np.exp(a - top).sum(axis=1, keepdims=True)))[:, 0]


def probs_vector(spec: ModelSpec, center=None) -> np.ndarray:
    """Probability of every ranking (Lehmer order) under the model."""
    _check_enum(spec.m)
    return np.exp(log_probs(spec, rankings_array(spec.m), center))


@lru_cache(maxsize=None)
def relabel_index(m: int) -> np.ndarray:
    """``T[i, j]`` is the index of ranking ``i`` expressed in the positions of ranking ``j``.

    For any label-invariant kernel, ``Pr(sigma_i | center sigma_j)`` equals the
    identity-centered probability of ranking ``T[i, j]``.
    """
    _check_enum(m, MAX_DENSE_M)
    R = rankings_array(m)
    P = positions_array(m)
    N = R.shape[0]
    T = np.empty((N, N), dtype=np.int32)
    chunk = max(1, 2_000_000 // (N * m))
    for start in range(0, N, chunk):
        stop = min(N, start + chunk)
        rel = P[start:stop][:, R]  # (centers, observed, m)
        T[:, start:stop] = rank_indices(rel.reshape(-1, m)).reshape(stop - start, N).T
    T.setflags(write=False)
    return T


def kernel_matrix(spec: ModelSpec) -> np.ndarray:
    """``K[i, j] = Pr_s(sigma_i | sigma_j)`` with ranking ``j`` acting as ground truth."""
    identity_probs = probs_vector(spec, center=tuple(range(spec.m)))
    return identity_probs[relabel_index(spec.m)]


def partial_marginal(p: PartialRanking, spec: ModelSpec, center=None) -> float:
    """Probability that a draw restricted to ``p``'s subset equals ``p``."""
    if p.m != spec.m:
        raise DimensionError(f"partial ranking over m={p.m} for model with m={spec.m}")
    return float(probs_vector(spec, center)[consistent_mask(p)].sum())


# ---------------------------------------------------------------------------
# Samplers


def _rim_identity(phi: float, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Repeated insertion: Mallows(phi) draws centered at the identity."""
    out = np.empty((n, m), dtype=np.int64)
    rows = np.arange(n)
    for i in range(m):
        # Item i lands k places above the bottom, adding k inversions, P(k) ∝ phi**k.
        w = phi ** np.arange(i + 1)
        cdf = np.cumsum(w) / w.sum()
        k = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), i)
        j = i - k
        for t in range(i, 0, -1):
            shift = j < t
            out[shift, t] = out[shift, t - 1]
        out[rows, j] = i
    return out


def _pl_identity(theta: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """PL draws centered at the identity via an exponential race."""
    keys = rng.standard_exponential((n, theta.size)) / theta[None, :]
    return np.argsort(keys, axis=1, kind="stable")


def sample(spec: ModelSpec, n: int, seed, return_groups: bool = False):
    """Draw ``n`` i.i.d. rankings; rows of the returned ``(n, m)`` array.

    With ``return_groups`` the latent group of each voter is returned too.
    """
    if n < 1:
        raise ParameterError(f"sample size {n} must be positive")
    rng = np.random.default_rng(seed)
    pr = spec.params
    groups = rng.choice(pr.G, size=n, p=pr.proportions)
    ref = np.empty((n, spec.m), dtype=np.int64)
    for g in range(pr.G):
        idx = np.flatnonzero(groups == g)
        if idx.size == 0:
            continue
        if spec.kind == "CMM":
            ref[idx] = _rim_identity(float(pr.dispersions[g]), idx.size, spec.m, rng)
        else:
            ref[idx] = _pl_identity(pr.strengths[g], idx.size, rng)
    out = np.asarray(spec.ground_truth)[ref]
    return (out, groups) if return_groups else out


def sample_cmm(spec: ModelSpec, n: int, seed, return_groups: bool = False):
    if spec.kind != "CMM":
        raise ParameterError("sample_cmm needs a CMM spec")
    return sample(spec, n, seed, return_groups)


def sample_cmpl(spec: ModelSpec, n: int, seed, return_groups: bool = False):
    if spec.kind != "CMPL":
        raise ParameterError("sample_cmpl needs a CMPL spec")
    return sample(spec, n, seed, return_groups)


# ---------------------------------------------------------------------------
# Random valid parameters (test sweeps, experiments)


def random_cmm_params(G: int, rng: np.random.Generator, phi_low: float = 0.01) -> CmmParams:
    p = rng.dirichlet(np.ones(G))
    phi = np.sort(rng.uniform(phi_low, 1.0, size=G))
    return CmmParams(p, phi)


def random_strength_chain(G: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``G`` non-increasing simplex rows, each dominating the next."""
    rows = [np.sort(rng.dirichlet(np.ones(m)))[::-1]]
    top = np.zeros(m)
    top[0] = 1.0
    for _ in range(G - 1):
        # Pull mass toward the first position: keeps rows sorted and dominant.
        lam = rng.uniform(0.3, 1.0)
        rows.append(lam * rows[-1] + (1 - lam) * top)
    theta = np.array(rows[::-1])
    return theta / theta.sum(axis=1, keepdims=True)


def random_cmpl_params(G: int, m: int, rng: np.random.Generator) -> CmplParams:
    return CmplParams(rng.dirichlet(np.ones(G)), random_strength_chain(G, m, rng))
