"""Sufficient conditions for SP to single out the ground truth.

Each condition compares a lower bound on the prediction-normalized vote of
the ground truth against twice an upper bound for any other ranking. The
conditions are sufficient only; :func:`verify_separation` checks the actual
separation by exhaustive enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, PreconditionError
from .models import TOL, CmmParams, CmplParams, ModelSpec, check_dominance, mallows_normalizer
from .rankings import rank_index
from .sp_engine import exact_vbar

LEMMAS = ("CMM-2", "CMM-G", "CMPL-2", "CMPL-G")


@dataclass(frozen=True)
class IdentifiabilityReport:
    lemma: str
    lhs: float
    rhs: float
    partition_s: int | None = None
    alpha: float | None = None

    @property
    def satisfied(self) -> bool:
        return self.lhs >= self.rhs

    def to_dict(self) -> dict:
        out = {"lemma": self.lemma, "lhs": self.lhs, "rhs": self.rhs, "satisfied": self.satisfied}
        if self.partition_s is not None:
            out["partition_s"] = self.partition_s
        if self.alpha is not None:
            out["alpha"] = self.alpha
        return out


def cmm_g2_condition(p1: float, phi1: float, phi2: float, m: int) -> IdentifiabilityReport:
    """Two-group Mallows condition; requires the experts to be at most half."""
    if not 0 < p1 <= 0.5:
        raise PreconditionError(f"p1={p1} outside (0, 1/2]")
    if not 0 < phi1 <= phi2 <= 1:
        raise PreconditionError(f"need 0 < phi1 <= phi2 <= 1, got {phi1}, {phi2}")
    z1 = mallows_normalizer(phi1, m)
    z2 = mallows_normalizer(phi2, m)
    lhs = (p1 / (1 - p1)) ** 2
    rhs = 2 * z2**3 / z1**2 * phi1 ** (m * (m - 1) / 2)
    return IdentifiabilityReport("CMM-2", float(lhs), float(rhs), partition_s=1, alpha=float(p1))


def _check_partition(s: int, G: int) -> None:
    if not 1 <= s < G:
        raise PreconditionError(f"partition index s={s} must satisfy 1 <= s < G={G}")


def cmm_general_condition(params: CmmParams, s: int, m: int) -> IdentifiabilityReport:
    """Mallows condition for ``G`` groups split into ``1..s`` and ``s+1..G``."""
    G = params.G
    _check_partition(s, G)
    p, phi = params.proportions, params.dispersions
    alpha = float(p[:s].sum())
    Z = [mallows_normalizer(x, m) for x in phi]
    lhs = alpha / Z[s - 1] + (1 - alpha) / Z[G - 1]
    rhs = 2 * (phi[s - 1] * alpha / Z[0] + phi[G - 1] * (1 - alpha) / Z[s])
    return IdentifiabilityReport("CMM-G", float(lhs), float(rhs), partition_s=s, alpha=alpha)


def pl_center_prob(theta: Sequence[float]) -> float:
    """PL probability of the center itself: ``prod_j theta_j / sum_{i>=j} theta_i``."""
    t = np.asarray(theta, dtype=float)
    tails = np.cumsum(t[::-1])[::-1]
    return float(np.prod(t / tails))


def pl_reversal_prob(theta: Sequence[float]) -> float:
    """PL probability of the reversed center."""
    return pl_center_prob(np.asarray(theta, dtype=float)[::-1])


def _check_rows(theta: np.ndarray) -> None:
    if np.any(theta <= 0) or np.any(np.abs(theta.sum(axis=1) - 1) > TOL):
        raise PreconditionError("strength rows must be positive and sum to 1")
    if np.any(np.diff(theta, axis=1) > TOL):
        raise PreconditionError("strength rows must be non-increasing")
    if not check_dominance(theta):
        raise PreconditionError("strength rows violate stochastic dominance")


def cmpl_g2_condition(p1: float, theta1: Sequence[float], theta2: Sequence[float]) -> IdentifiabilityReport:
    """Two-group Plackett-Luce condition."""
    if not 0 < p1 <= 0.5:
        raise PreconditionError(f"p1={p1} outside (0, 1/2]")
    theta = np.array([theta1, theta2], dtype=float)
    _check_rows(theta)
    a = pl_center_prob(theta[1])
    b = pl_center_prob(theta[0])
    c = pl_reversal_prob(theta[0])
    lhs = (p1 / (1 - p1)) ** 2
    return IdentifiabilityReport("CMPL-2", float(lhs), float(2 * a / b * c), partition_s=1, alpha=float(p1))


def cmpl_general_condition(params: CmplParams, s: int) -> IdentifiabilityReport:
    """Plackett-Luce condition for ``G`` groups split into ``1..s`` and ``s+1..G``."""
    G = params.G
    _check_partition(s, G)
    theta = params.strengths
    _check_rows(theta)
    alpha = float(params.proportions[:s].sum())
    top = [pl_center_prob(row) for row in theta]
    rev = [pl_reversal_prob(row) for row in theta]
    lhs = alpha * top[s - 1] + (1 - alpha) * top[G - 1]
    num = 2 * alpha * top[0] + 2 * (1 - alpha) * top[s]
    den = alpha * rev[0] + (1 - alpha) * rev[s]
    return IdentifiabilityReport("CMPL-G", float(lhs), float(num / den), partition_s=s, alpha=alpha)


def check_condition(spec: ModelSpec, s: int | None = None) -> IdentifiabilityReport:
    """Evaluate the applicable condition for ``spec`` (two-group form when ``G == 2``)."""
    pr = spec.params
    if pr.G < 2:
        raise PreconditionError("conditions need at least two groups")
    if spec.kind == "CMM":
        if pr.G == 2 and s is None:
            return cmm_g2_condition(pr.proportions[0], pr.dispersions[0], pr.dispersions[1], spec.m)
        return cmm_general_condition(pr, s or 1, spec.m)
    if pr.G == 2 and s is None:
        return cmpl_g2_condition(pr.proportions[0], pr.strengths[0], pr.strengths[1])
    return cmpl_general_condition(pr, s or 1)


def sample_complexity_bound(m: int, delta: float, constant: float = 1.0) -> int:
    """Voters sufficient for recovery with probability ``1 - delta`` (order bound, ``C = 1``)."""
    if not 0 < delta < 1:
        raise ParameterError(f"delta={delta} outside (0, 1)")
    if m < 1:
        raise ParameterError("m must be positive")
    return math.ceil(constant * math.factorial(m) * math.sqrt(m * math.log(m / delta)))


def separation_ratio(spec: ModelSpec, prior=None) -> float:
    """``Vbar(ground truth) / max over other rankings of Vbar``."""
    v = exact_vbar(spec, prior)
    star = rank_index(spec.ground_truth)
    others = np.delete(v, star)
    return float(v[star] / others.max()) if others.size else math.inf


def verify_separation(spec: ModelSpec, margin: float = 2.0, prior=None) -> bool:
    return separation_ratio(spec, prior) >= margin
