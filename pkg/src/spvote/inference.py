"""Bayesian parameter inference for concentric mixtures.

Posteriors are explored with adaptive random-walk Metropolis in an
unconstrained parameterisation: additive log-ratios for simplex points and
log dispersions. Constraint violations (dispersion above one, unordered
groups, broken stochastic dominance) give zero density and are rejected.
"""

from __future__ import annotations

import math
from functools import lru_cache
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import CoverageError, ParameterError
from .models import TOL, check_dominance, mallows_kt_moments, mallows_normalizer
from .rankings import Ranking, kendall_tau


@dataclass(frozen=True)
class McmcConfig:
    chains: int = 4
    iterations: int = 8000
    warmup: int = 2000
    proposal_scale: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.chains < 1:
            raise ParameterError("need at least one chain")
        if not 0 <= self.warmup < self.iterations:
            raise ParameterError("warmup must be smaller than iterations")
        if self.proposal_scale <= 0:
            raise ParameterError("proposal scale must be positive")


@dataclass(frozen=True)
class PriorSpec:
    """Priors for proportions and per-group noise parameters.

    For CMM, ``votes`` and ``predictions`` hold one ``(loc, scale)`` normal
    prior per group on the dispersion, truncated to (0, 1]. For CMPL they hold
    one Dirichlet concentration vector per group.
    """

    proportions: tuple[float, ...]
    votes: tuple
    predictions: tuple

    @classmethod
    def cmm_default(cls, G: int) -> "PriorSpec":
        if G == 3:
            return cls((2.0, 2.0, 4.0),
                       ((0.1, 0.2), (0.4, 0.2), (0.8, 0.2)),
                       ((0.4, 0.3), (0.4, 0.3), (0.8, 0.3)))
        locs = np.linspace(0.1, 0.8, G) if G > 1 else np.array([0.5])
        plocs = np.linspace(0.4, 0.8, G) if G > 1 else np.array([0.5])
        return cls(tuple([2.0] * G),
                   tuple((float(x), 0.2) for x in locs),
                   tuple((float(x), 0.3) for x in plocs))

    @classmethod
    def cmpl_default(cls, G: int, m: int) -> "PriorSpec":
        if G == 3:
            conc = (3.0, 2.0, 1.0)
            props = (1.0, 2.0, 3.0)
        else:
            conc = tuple(np.linspace(3.0, 1.0, G)) if G > 1 else (1.0,)
            props = tuple(float(g + 1) for g in range(G))
        return cls(props,
                   tuple(tuple([float(c)] * m) for c in conc),
                   tuple(tuple([1.0] * m) for _ in range(G)))

    def validate(self, G: int) -> None:
        if len(self.proportions) != G or len(self.votes) != G or len(self.predictions) != G:
            raise ParameterError(f"prior specification does not match G={G}")
        flat = [self.proportions, *self.votes, *self.predictions]
        if any(x <= 0 for row in flat for x in np.atleast_1d(row)):
            raise ParameterError("prior concentrations and scales must be positive")


@dataclass
class PosteriorSamples:
    """Retained draws, shape ``(chains, draws, parameters)``, in natural units."""

    names: list[str]
    draws: np.ndarray
    acceptance_rate: float
    diagnostics: dict
    layout: dict
    meta: dict = field(default_factory=dict)

    @property
    def flat(self) -> np.ndarray:
        return self.draws.reshape(-1, self.draws.shape[-1])

    def mean(self) -> np.ndarray:
        return self.flat.mean(axis=0)

    def get(self, block: str, draws: np.ndarray | None = None) -> np.ndarray:
        """A named block (e.g. ``"proportions"``) reshaped per draw."""
        sl, shape = self.layout[block]
        x = self.flat if draws is None else draws
        return x[..., sl].reshape(x.shape[:-1] + shape)

    def posterior_mean(self, block: str) -> np.ndarray:
        return self.get(block).mean(axis=0)

    def summary(self) -> list[dict]:
        x = self.flat
        q05, q95 = np.quantile(x, [0.05, 0.95], axis=0)
        return [
            {"parameter": name, "mean": float(x[:, i].mean()), "sd": float(x[:, i].std(ddof=1)) if x.shape[0] > 1 else 0.0,
             "q05": float(q05[i]), "q95": float(q95[i]),
             "rhat": self.diagnostics["rhat"][name], "ess": self.diagnostics["ess"][name]}
            for i, name in enumerate(self.names)
        ]


# ---------------------------------------------------------------------------
# Diagnostics


def split_rhat(x: np.ndarray) -> float:
    """Split-chain potential scale reduction for ``(chains, draws)``."""
    chains, n = x.shape
    half = n // 2
    if half < 2:
        return float("nan")
    parts = np.concatenate([x[:, :half], x[:, half:2 * half]], axis=0)
    means = parts.mean(axis=1)
    W = parts.var(axis=1, ddof=1).mean()
    B = half * means.var(ddof=1)
    if W <= 0:
        return 1.0 if B <= 0 else float("inf")
    var_plus = (half - 1) / half * W + B / half
    return float(math.sqrt(var_plus / W))


def effective_sample_size(x: np.ndarray) -> float:
    """Multi-chain ESS with Geyer's initial positive sequence truncation."""
    chains, n = x.shape
    if n < 4:
        return float(chains * n)
    centred = x - x.mean(axis=1, keepdims=True)
    var_chain = centred.var(axis=1)
    if np.all(var_chain == 0):
        return float(chains * n)
    fft = np.fft.rfft(centred, n=2 * n, axis=1)
    acov = np.fft.irfft(fft * np.conj(fft), axis=1)[:, :n] / n
    W = x.var(axis=1, ddof=1).mean()
    var_plus = (n - 1) / n * W + (x.mean(axis=1).var(ddof=1) if chains > 1 else 0.0)
    rho = 1 - (W - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    total = 0.0
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair < 0:
            break
        total += pair
        t += 2
    tau = max(-1.0 + 2.0 * total, 1e-12)
    return float(min(chains * n / tau, chains * n * math.log10(chains * n)))


# ---------------------------------------------------------------------------
# Sampler


def _run_chain(log_post: Callable[[np.ndarray], float], x0: np.ndarray, cfg: McmcConfig,
               seed: np.random.SeedSequence) -> tuple[np.ndarray, int, int]:
    rng = np.random.default_rng(seed)
    d = x0.size
    x = x0.copy()
    lp = log_post(x)
    if not np.isfinite(lp):
        raise ParameterError("initial point has zero posterior density")
    scale = cfg.proposal_scale
    chol = np.eye(d)
    keep = np.empty((cfg.iterations - cfg.warmup, d))
    history = np.empty((cfg.warmup, d))
    accepted = 0
    nonfinite = 0
    window_acc = 0
    for it in range(cfg.iterations):
        prop = x + scale * (chol @ rng.standard_normal(d))
        lp_new = log_post(prop)
        if np.isnan(lp_new):
            nonfinite += 1
            lp_new = -np.inf
        if np.log(rng.random()) < lp_new - lp:
            x, lp = prop, lp_new
            if it >= cfg.warmup:
                accepted += 1
            window_acc += 1
        if it < cfg.warmup:
            history[it] = x
            if (it + 1) % 50 == 0:
                # Robbins-Monro step toward a 0.25 acceptance rate.
                rate = window_acc / 50
                scale *= math.exp((rate - 0.25) * 2.0)
                window_acc = 0
            if (it + 1) % 200 == 0 and it + 1 >= max(400, cfg.warmup // 4):
                recent = history[(it + 1) // 2:it + 1]
                cov = np.cov(recent, rowvar=False).reshape(d, d) + 1e-8 * np.eye(d)
                try:
                    new_chol = np.linalg.cholesky(cov)
                except np.linalg.LinAlgError:
                    continue
                # Re-express the current step size in the new metric.
                ref = np.sqrt(np.mean(np.diag(cov)))
                chol = new_chol / ref
        else:
            keep[it - cfg.warmup] = x
    return keep, accepted, nonfinite


def metropolis(log_post: Callable[[np.ndarray], float], x0: np.ndarray, cfg: McmcConfig,
               threads: int | None = 1) -> tuple[np.ndarray, float, int]:
    """Run ``cfg.chains`` independent chains; returns draws, acceptance rate, rejected non-finite count."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.chains)
    rng0 = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(cfg.chains + 1)[-1])
    starts = []
    for c in range(cfg.chains):
        # Jittered starts; fall back to x0 if the jitter leaves the support.
        for _ in range(100):
            s = x0 + 0.1 * rng0.standard_normal(x0.size)
            if np.isfinite(log_post(s)):
                break
        else:
            s = x0.copy()
        starts.append(s)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda c: _run_chain(log_post, starts[c], cfg, seeds[c]), range(cfg.chains)))
    draws = np.stack([r[0] for r in results])
    n_keep = cfg.iterations - cfg.warmup
    acc = sum(r[1] for r in results) / (cfg.chains * n_keep)
    return draws, acc, sum(r[2] for r in results)


# ---------------------------------------------------------------------------
# Parameterisation helpers


def alr_inverse(z: np.ndarray) -> np.ndarray:
    """Simplex point from additive log-ratios (last coordinate as reference)."""
    full = np.append(z, 0.0)
    return special.softmax(full)


def alr(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return np.log(p[:-1]) - np.log(p[-1])


def _dirichlet_logpdf_alr(p: np.ndarray, conc: np.ndarray) -> float:
    # Density in log-ratio coordinates: Dirichlet density times prod(p).
    return float(np.sum(conc * np.log(p)) - np.sum(special.gammaln(conc)) + special.gammaln(conc.sum()))


_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _norm_logpdf(x: np.ndarray, loc: np.ndarray, scale: np.ndarray) -> np.ndarray:
    z = (x - loc) / scale
    return -0.5 * z * z - np.log(scale) - _HALF_LOG_2PI


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    top = a.max(axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.exp(a - safe[:, None]).sum(axis=1)) + safe


class _Layout:
    def __init__(self):
        self.names: list[str] = []
        self.blocks: dict = {}

    def add(self, block: str, shape: tuple, names: list[str]) -> None:
        start = len(self.names)
        self.names.extend(names)
        self.blocks[block] = (slice(start, len(self.names)), shape)


def _summarise(layout: _Layout, natural: np.ndarray, acc: float, nonfinite: int, meta: dict) -> PosteriorSamples:
    rhat = {n: split_rhat(natural[:, :, i]) for i, n in enumerate(layout.names)}
    ess = {n: effective_sample_size(natural[:, :, i]) for i, n in enumerate(layout.names)}
    diag = {"rhat": rhat, "ess": ess, "rejected_nonfinite": nonfinite}
    return PosteriorSamples(layout.names, natural, acc, diag, layout.blocks, meta)


# ---------------------------------------------------------------------------
# CMM


def _cmm_layout(G: int, with_pred: bool) -> _Layout:
    lay = _Layout()
    lay.add("proportions", (G,), [f"p[{g}]" for g in range(G)])
    lay.add("phi_votes", (G,), [f"phi_votes[{g}]" for g in range(G)])
    if with_pred:
        lay.add("phi_predictions", (G,), [f"phi_predictions[{g}]" for g in range(G)])
    return lay


def _sort_groups_cmm(natural: np.ndarray, layout: _Layout, G: int) -> np.ndarray:
    """Relabel groups per chain by increasing posterior-mean vote dispersion."""
    out = natural.copy()
    for c in range(natural.shape[0]):
        order = np.argsort(natural[c, :, layout.blocks["phi_votes"][0]].mean(axis=0), kind="stable")
        for block in ("proportions", "phi_votes", "phi_predictions"):
            if block in layout.blocks:
                sl = layout.blocks[block][0]
                out[c, :, sl] = natural[c, :, sl][:, order]
    return out


_GRID = np.linspace(1e-3, 1.0, 1000)


@lru_cache(maxsize=16)
def _moment_grid(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact KT mean and std on a 1e-3 grid of dispersions, interpolated linearly."""
    mom = np.array([mallows_kt_moments(float(f), m) for f in _GRID])
    return mom[:, 0], mom[:, 1]


class _CmmPosterior:
    """Log posterior of a CMM fit on distances; ``exact`` selects the likelihood."""

    def __init__(self, dv, dp, G: int, m: int, priors: PriorSpec, exact: bool):
        # Distances are small integers: evaluate each distinct pair once.
        if dv.size and dp is not None:
            cells, self.weight = np.unique(np.c_[dv, dp], axis=0, return_counts=True)
            self.dv, self.dp = cells[:, 0], cells[:, 1]
        else:
            self.dv, self.weight = np.unique(dv, return_counts=True)
            self.dp = dp
        self.G, self.m = G, m
        self.with_pred = dp is not None
        self.exact = exact
        if not exact:
            self.mu_grid, self.sd_grid = _moment_grid(m)
        self.alpha = np.asarray(priors.proportions, dtype=float)
        self.v_prior = np.asarray(priors.votes, dtype=float)
        self.p_prior = np.asarray(priors.predictions, dtype=float)

    def unpack(self, x: np.ndarray):
        G = self.G
        p = alr_inverse(x[:G - 1])
        phi_v = np.exp(x[G - 1:2 * G - 1])
        phi_p = np.exp(x[2 * G - 1:3 * G - 1]) if self.with_pred else None
        return p, phi_v, phi_p

    def natural(self, x: np.ndarray) -> np.ndarray:
        p, phi_v, phi_p = self.unpack(x)
        parts = [p, phi_v] + ([phi_p] if self.with_pred else [])
        return np.concatenate(parts)

    def _component(self, d: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Per-voter, per-group log density of the distances, shape ``(n, G)``."""
        if self.exact:
            logz = np.array([math.log(mallows_normalizer(f, self.m)) for f in phi])
            return d[:, None] * np.log(phi)[None, :] - logz[None, :]
        mu = np.interp(phi, _GRID, self.mu_grid)
        sd = np.interp(phi, _GRID, self.sd_grid)
        if np.any(sd <= 0):
            return np.full((d.size, phi.size), np.nan)
        z = (d[:, None] - mu[None, :]) / sd[None, :]
        return -0.5 * z * z - np.log(sd)[None, :] - _HALF_LOG_2PI

    def __call__(self, x: np.ndarray) -> float:
        p, phi_v, phi_p = self.unpack(x)
        if np.any(phi_v > 1) or np.any(np.diff(phi_v) < 0):
            return -np.inf
        if self.with_pred and np.any(phi_p > 1):
            return -np.inf
        lp = _dirichlet_logpdf_alr(p, self.alpha)
        # Truncated normals on phi; log-scale Jacobian adds log(phi).
        lp += np.sum(_norm_logpdf(phi_v, self.v_prior[:, 0], self.v_prior[:, 1]) + np.log(phi_v))
        if self.with_pred:
            lp += np.sum(_norm_logpdf(phi_p, self.p_prior[:, 0], self.p_prior[:, 1]) + np.log(phi_p))
        if self.dv.size == 0:
            return float(lp)
        comp = self._component(self.dv, phi_v)
        if self.with_pred:
            comp = comp + self._component(self.dp, phi_p)
        if not np.all(np.isfinite(comp[:, p > 0])) and np.any(np.isnan(comp)):
            return float("nan")
        with np.errstate(divide="ignore"):
            ll = self.weight @ _logsumexp_rows(comp + np.log(p)[None, :])
        return float(lp + ll) if np.isfinite(ll) else -np.inf

    def start(self) -> np.ndarray:
        G = self.G
        p0 = self.alpha / self.alpha.sum()
        v0 = np.clip(np.sort(self.v_prior[:, 0]), 0.05, 0.95)
        v0 = v0 + np.arange(G) * 1e-3
        parts = [alr(p0), np.log(np.minimum(v0, 1.0))]
        if self.with_pred:
            parts.append(np.log(np.clip(self.p_prior[:, 0], 0.05, 0.95)))
        return np.concatenate(parts)


def _distances(data) -> tuple[np.ndarray, np.ndarray | None]:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        return np.zeros(0), np.zeros(0)
    arr = arr.reshape(len(data), -1)
    dv = arr[:, 0]
    if arr.shape[1] < 2 or np.all(np.isnan(arr[:, 1])):
        return dv, None
    if np.any(np.isnan(arr[:, 1])):
        raise ParameterError("predictions must be present for every voter or for none")
    return dv, arr[:, 1]


def _cmm_fit(data, G: int, m: int, priors: PriorSpec | None, cfg: McmcConfig, exact: bool,
             threads: int | None) -> PosteriorSamples:
    if G < 1:
        raise ParameterError("G must be at least 1")
    priors = priors or PriorSpec.cmm_default(G)
    priors.validate(G)
    dv, dp = _distances(data)
    max_d = m * (m - 1) / 2
    for d in (dv, dp):
        if d is not None and (np.any(d < 0) or np.any(d > max_d)):
            raise ParameterError(f"distances must lie in [0, {max_d}]")
    with_pred = dp is not None or dv.size == 0
    if dv.size == 0:
        dp = np.zeros(0)
    post = _CmmPosterior(dv, dp, G, m, priors, exact)
    raw, acc, nonfinite = metropolis(post, post.start(), cfg, threads)
    natural = np.apply_along_axis(post.natural, 2, raw)
    layout = _cmm_layout(G, post.with_pred)
    natural = _sort_groups_cmm(natural, layout, G)
    meta = {"likelihood": "exact-mallows" if exact else "gaussian-kt", "m": m,
            "phi_prior": "normal truncated to (0, 1]"}
    return _summarise(layout, natural, acc, nonfinite, meta)


def cmm_infer(data, G: int, m: int, priors: PriorSpec | None = None, cfg: McmcConfig = McmcConfig(),
              threads: int | None = 1) -> PosteriorSamples:
    """Fit a CMM to ``(vote distance, prediction distance)`` pairs with a normal-on-distance likelihood.

    Each group's distances are modelled as normal with the exact Mallows mean
    and standard deviation of the distance at that group's dispersion.
    """
    return _cmm_fit(data, G, m, priors, cfg, exact=False, threads=threads)


def cmm_exact_infer(pairs, ground_truth: Sequence[int], G: int, priors: PriorSpec | None = None,
                    cfg: McmcConfig = McmcConfig(), threads: int | None = 1) -> PosteriorSamples:
    """Fit a CMM to ``(vote, prediction)`` ranking pairs with the exact mixture likelihood.

    A prediction of ``None`` everywhere fits the votes alone.
    """
    m = len(ground_truth)
    rows = []
    for vote, pred in pairs:
        rows.append((kendall_tau(vote, ground_truth),
                     np.nan if pred is None else kendall_tau(pred, ground_truth)))
    return _cmm_fit(rows, G, m, priors, cfg, exact=True, threads=threads)


# ---------------------------------------------------------------------------
# CMPL


def _ref_positions(rankings: np.ndarray, center: Sequence[int]) -> np.ndarray:
    inv = np.empty(len(center), dtype=np.int64)
    inv[np.asarray(center)] = np.arange(len(center))
    return inv[np.asarray(rankings, dtype=np.int64)]


def _pl_logp_rows(theta_rows: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """``(n, G)`` log PL probabilities of each ranking under each row."""
    w = theta_rows[:, ref]  # (G, n, m)
    tails = np.cumsum(w[..., ::-1], axis=-1)[..., ::-1]
    return (np.log(w) - np.log(tails)).sum(axis=-1).T


class _CmplPosterior:
    def __init__(self, ref_v, ref_p, G: int, m: int, priors: PriorSpec):
        self.ref_v, self.ref_p = ref_v, ref_p
        self.with_pred = ref_p is not None
        self.G, self.m = G, m
        self.alpha = np.asarray(priors.proportions, dtype=float)
        self.v_conc = np.asarray(priors.votes, dtype=float)
        self.p_conc = np.asarray(priors.predictions, dtype=float)

    def unpack(self, x: np.ndarray):
        G, m = self.G, self.m
        p = alr_inverse(x[:G - 1])
        off = G - 1
        tv = np.array([alr_inverse(x[off + g * (m - 1): off + (g + 1) * (m - 1)]) for g in range(G)])
        tp = None
        if self.with_pred:
            off += G * (m - 1)
            tp = np.array([alr_inverse(x[off + g * (m - 1): off + (g + 1) * (m - 1)]) for g in range(G)])
        return p, tv, tp

    def natural(self, x: np.ndarray) -> np.ndarray:
        p, tv, tp = self.unpack(x)
        return np.concatenate([p, tv.ravel()] + ([tp.ravel()] if self.with_pred else []))

    def __call__(self, x: np.ndarray) -> float:
        p, tv, tp = self.unpack(x)
        if np.any(np.diff(tv, axis=1) > TOL) or not check_dominance(tv):
            return -np.inf
        lp = _dirichlet_logpdf_alr(p, self.alpha)
        lp += sum(_dirichlet_logpdf_alr(tv[g], self.v_conc[g]) for g in range(self.G))
        if self.with_pred:
            lp += sum(_dirichlet_logpdf_alr(tp[g], self.p_conc[g]) for g in range(self.G))
        if self.ref_v.shape[0] == 0:
            return float(lp)
        comp = _pl_logp_rows(tv, self.ref_v)
        if self.with_pred:
            comp = comp + _pl_logp_rows(tp, self.ref_p)
        ll = _logsumexp_rows(comp + np.log(p)[None, :]).sum()
        if np.isnan(ll):
            return float("nan")
        return float(lp + ll) if np.isfinite(ll) else -np.inf

    def start(self) -> np.ndarray:
        G, m = self.G, self.m
        p0 = self.alpha / self.alpha.sum()
        # Geometric rows, flatter for later groups: sorted and dominance-ordered.
        rows = []
        for g in range(G):
            r = 0.5 + 0.4 * g / max(G - 1, 1)
            w = r ** np.arange(m)
            rows.append(w / w.sum())
        parts = [alr(p0)] + [alr(r) for r in rows]
        if self.with_pred:
            parts += [np.zeros(m - 1) for _ in range(G)]
        return np.concatenate(parts)


def _cmpl_layout(G: int, m: int, with_pred: bool) -> _Layout:
    lay = _Layout()
    lay.add("proportions", (G,), [f"p[{g}]" for g in range(G)])
    lay.add("theta_votes", (G, m), [f"theta_votes[{g},{j}]" for g in range(G) for j in range(m)])
    if with_pred:
        lay.add("theta_predictions", (G, m), [f"theta_predictions[{g},{j}]" for g in range(G) for j in range(m)])
    return lay


def _sort_groups_cmpl(natural: np.ndarray, layout: _Layout, G: int, m: int) -> np.ndarray:
    """Relabel groups per chain by decreasing posterior-mean first-position strength."""
    out = natural.copy()
    sl_v = layout.blocks["theta_votes"][0]
    for c in range(natural.shape[0]):
        tv = natural[c, :, sl_v].reshape(-1, G, m)
        order = np.argsort(-tv[:, :, 0].mean(axis=0), kind="stable")
        sl = layout.blocks["proportions"][0]
        out[c, :, sl] = natural[c, :, sl][:, order]
        for block in ("theta_votes", "theta_predictions"):
            if block in layout.blocks:
                s = layout.blocks[block][0]
                rows = natural[c, :, s].reshape(-1, G, m)[:, order, :]
                out[c, :, s] = rows.reshape(-1, G * m)
    return out


def _split_pairs(pairs, m: int) -> tuple[np.ndarray, np.ndarray | None]:
    pairs = list(pairs)
    V = np.asarray([v for v, _ in pairs], dtype=np.int64).reshape(-1, m)
    preds = [q for _, q in pairs]
    if all(q is None for q in preds):
        return V, None
    if any(q is None for q in preds):
        raise ParameterError("predictions must be present for every voter or for none")
    return V, np.asarray(preds, dtype=np.int64).reshape(-1, m)


def cmpl_infer(pairs, ground_truth: Sequence[int], G: int, priors: PriorSpec | None = None,
               cfg: McmcConfig = McmcConfig(), threads: int | None = 1) -> PosteriorSamples:
    """Fit a CMPL to ``(vote, prediction)`` ranking pairs with known ground truth.

    A prediction of ``None`` everywhere fits the votes alone. Vote rows are
    kept non-increasing and stochastically ordered down the groups; prediction
    rows are unconstrained simplex points.
    """
    m = len(ground_truth)
    if m < 2:
        raise ParameterError("CMPL inference needs m >= 2")
    if G < 1:
        raise ParameterError("G must be at least 1")
    priors = priors or PriorSpec.cmpl_default(G, m)
    priors.validate(G)
    V, P = _split_pairs(pairs, m)
    ref_v = _ref_positions(V, ground_truth)
    ref_p = None if P is None else _ref_positions(P, ground_truth)
    post = _CmplPosterior(ref_v, ref_p, G, m, priors)
    raw, acc, nonfinite = metropolis(post, post.start(), cfg, threads)
    natural = np.apply_along_axis(post.natural, 2, raw)
    layout = _cmpl_layout(G, m, post.with_pred)
    natural = _sort_groups_cmpl(natural, layout, G, m)
    meta = {"likelihood": "plackett-luce", "m": m, "ground_truth": list(ground_truth)}
    return _summarise(layout, natural, acc, nonfinite, meta)


# ---------------------------------------------------------------------------
# Full rankings from subset fits


@dataclass
class FullRankingPrediction:
    rankings: list[Ranking]
    distribution: dict[Ranking, float]
    kt_histogram: dict[int, int] | None = None


def stitch_strengths(subset_rows: Sequence[tuple[Sequence[int], np.ndarray]], universe_m: int) -> np.ndarray:
    """Global strength per alternative from position-indexed subset strengths.

    ``subset_rows`` pairs each subset (listed in its ground-truth order) with a
    strength row whose ``j``-th entry belongs to the subset's ``j``-th item.
    """
    total = np.zeros(universe_m)
    count = np.zeros(universe_m)
    for subset, row in subset_rows:
        for a, w in zip(subset, row):
            total[a] += w
            count[a] += 1
    missing = np.flatnonzero(count == 0)
    if missing.size:
        raise CoverageError(f"alternatives {missing.tolist()} appear in no subset")
    avg = total / count
    return avg / avg.sum()


def argmax_ranking(strengths: np.ndarray) -> Ranking:
    """Repeatedly take the strongest remaining alternative (ties to the lower id)."""
    return tuple(int(a) for a in sorted(range(strengths.size), key=lambda a: (-strengths[a], a)))


def predict_full_ranking_cmpl(subset_fits: Sequence[tuple[Sequence[int], PosteriorSamples]], universe_m: int,
                              bootstrap: int, seed, group: int = 0, block: str = "theta_votes",
                              reference: Sequence[int] | None = None) -> FullRankingPrediction:
    """Bootstrap distribution of full rankings stitched from per-subset CMPL posteriors."""
    if bootstrap < 1:
        raise ParameterError("bootstrap must be positive")
    covered = {a for subset, _ in subset_fits for a in subset}
    missing = sorted(set(range(universe_m)) - covered)
    if missing:
        raise CoverageError(f"alternatives {missing} appear in no subset")
    rng = np.random.default_rng(seed)
    rows_per_fit = [fit.get(block)[:, group, :] for _, fit in subset_fits]
    out = []
    for _ in range(bootstrap):
        picked = [(subset, rows[rng.integers(rows.shape[0])]) for (subset, _), rows in zip(subset_fits, rows_per_fit)]
        out.append(argmax_ranking(stitch_strengths(picked, universe_m)))
    dist: dict[Ranking, float] = {}
    for r in out:
        dist[r] = dist.get(r, 0.0) + 1.0 / bootstrap
    hist = None
    if reference is not None:
        hist = {}
        for r in out:
            d = kendall_tau(r, reference)
            hist[d] = hist.get(d, 0) + 1
    return FullRankingPrediction(out, dist, hist)
