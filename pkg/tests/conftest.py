"""Independent brute-force oracles shared by the test modules."""

import itertools
import sys

import numpy as np


def brute_kt(a, b):
    """Discordant pairs by double loop over alternatives."""
    pa = {x: i for i, x in enumerate(a)}
    pb = {x: i for i, x in enumerate(b)}
    alts = list(a)
    d = 0
    for i in range(len(alts)):
        for j in range(i + 1, len(alts)):
            x, y = alts[i], alts[j]
            if (pa[x] - pa[y]) * (pb[x] - pb[y]) < 0:
                d += 1
    return d


def all_perms(m):
    return list(itertools.permutations(range(m)))


def brute_z(phi, m):
    ident = tuple(range(m))
    return sum(phi ** brute_kt(s, ident) for s in all_perms(m))


def brute_mallows(sigma, center, phi):
    return phi ** brute_kt(sigma, center) / brute_z(phi, len(center))


def brute_pl(sigma, center, theta):
    """Sequential choice: weight of the item at each step over the remaining weights."""
    weight = {a: theta[j] for j, a in enumerate(center)}
    remaining = list(sigma)
    p = 1.0
    for a in sigma:
        p *= weight[a] / sum(weight[b] for b in remaining)
        remaining.remove(a)
    return p


def tv_distance(samples, probs_by_ranking):
    """Total variation between the empirical law of ``samples`` and a dict of probabilities."""
    n = len(samples)
    counts = {}
    for s in map(tuple, samples):
        counts[s] = counts.get(s, 0) + 1
    keys = set(counts) | set(probs_by_ranking)
    return 0.5 * sum(abs(counts.get(k, 0) / n - probs_by_ranking.get(k, 0.0)) for k in keys)


def random_dominant_rows(rng, G, m):
    from spvote.models import random_strength_chain

    return random_strength_chain(G, m, rng)


def norm_pdf_ref(x, mu, sd):
    return np.exp(-0.5 * ((x - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
