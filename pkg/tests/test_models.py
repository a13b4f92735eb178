import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import all_perms, brute_kt, brute_mallows, brute_pl, brute_z, tv_distance
from spvote.errors import DimensionError, ParameterError
from spvote.models import (
    CmmParams,
    CmplParams,
    ModelSpec,
    check_dominance,
    cmm_prob,
    cmpl_prob,
    kernel_matrix,
    kt_distribution,
    mahonian_counts,
    mallows_kt_moments,
    mallows_normalizer,
    mallows_prob,
    partial_marginal,
    pl_prob,
    probs_vector,
    random_cmm_params,
    random_cmpl_params,
    sample,
    sample_cmm,
    sample_cmpl,
)
from spvote.rankings import PartialRanking, enumerate_rankings, kendall_tau


class TestMallows:
    @pytest.mark.parametrize("phi,m,z", [(1.0, 3, 6.0), (0.5, 2, 1.5), (0.5, 3, 2.625)])
    def test_normalizer_examples(self, phi, m, z):
        assert mallows_normalizer(phi, m) == pytest.approx(z, abs=1e-12)

    @pytest.mark.parametrize("m", range(1, 8))
    def test_normalizer_brute_force(self, m):
        for phi in [0.1 * k for k in range(1, 11)]:
            assert mallows_normalizer(phi, m) == pytest.approx(brute_z(phi, m), rel=1e-12, abs=1e-12)

    def test_prob_examples(self):
        assert mallows_prob((0,), (0,), 0.3) == 1.0
        assert mallows_prob((0, 1, 2), (0, 1, 2), 0.5) == pytest.approx(1 / 2.625)
        assert mallows_prob((2, 1, 0), (0, 1, 2), 0.5) == pytest.approx(0.125 / 2.625)

    @pytest.mark.parametrize("phi", [0.0, -0.1, 1.2, float("nan")])
    def test_rejects_bad_phi(self, phi):
        with pytest.raises(ParameterError):
            mallows_normalizer(phi, 3)

    def test_monotone_in_distance(self):
        center = (1, 3, 0, 2)
        probs = sorted((kendall_tau(s, center), mallows_prob(s, center, 0.6)) for s in all_perms(4))
        for (d1, p1), (d2, p2) in zip(probs, probs[1:]):
            if d2 > d1:
                assert p2 <= p1 + 1e-15

    @pytest.mark.parametrize("m", range(1, 7))
    def test_mahonian_counts(self, m):
        ident = tuple(range(m))
        oracle = np.bincount([brute_kt(s, ident) for s in all_perms(m)], minlength=m * (m - 1) // 2 + 1)
        np.testing.assert_array_equal(mahonian_counts(m), oracle)

    def test_kt_moments_against_enumeration(self):
        m, phi = 5, 0.4
        pmf = kt_distribution(phi, m)
        assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
        d = np.array([brute_kt(s, tuple(range(m))) for s in all_perms(m)])
        w = phi ** d / brute_z(phi, m)
        mu, sd = mallows_kt_moments(phi, m)
        assert mu == pytest.approx(float(w @ d), rel=1e-12)
        assert sd == pytest.approx(math.sqrt(float(w @ (d - w @ d) ** 2)), rel=1e-10)

    def test_uniform_moments(self):
        mu, _ = mallows_kt_moments(1.0, 4)
        assert mu == pytest.approx(4 * 3 / 4)


class TestCmm:
    def test_g1_equals_mallows(self):
        spec = ModelSpec.cmm((1.0,), (0.35,), 4, (3, 1, 0, 2))
        for s in all_perms(4):
            assert cmm_prob(s, spec) == pytest.approx(brute_mallows(s, (3, 1, 0, 2), 0.35), rel=1e-12)

    def test_two_group_hand_values(self):
        spec = ModelSpec.cmm((0.3, 0.7), (0.2, 0.8), 2)
        a = cmm_prob((0, 1), spec)
        b = cmm_prob((1, 0), spec)
        assert a == pytest.approx(0.3 / 1.2 + 0.7 / 1.8, abs=1e-12)
        assert a == pytest.approx(0.638889, abs=1e-6)
        assert b == pytest.approx(0.361111, abs=1e-6)
        assert a + b == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [
        dict(proportions=(0.5, 0.4), dispersions=(0.1, 0.2)),
        dict(proportions=(0.5, 0.5), dispersions=(0.3, 0.2)),
        dict(proportions=(0.5, 0.5), dispersions=(0.1, 1.5)),
        dict(proportions=(1.2, -0.2), dispersions=(0.1, 0.2)),
    ])
    def test_param_validation(self, bad):
        with pytest.raises(ParameterError):
            CmmParams(**bad)

    @pytest.mark.parametrize("m", range(1, 7))
    def test_normalised(self, m):
        rng = np.random.default_rng(100 + m)
        for _ in range(10):
            pr = random_cmm_params(int(rng.integers(1, 4)), rng)
            spec = ModelSpec("CMM", pr, m, tuple(int(a) for a in rng.permutation(m)))
            assert probs_vector(spec).sum() == pytest.approx(1.0, abs=1e-10)


class TestPlackettLuce:
    def test_uniform_strengths(self):
        for s in all_perms(3):
            assert pl_prob(s, (0, 1, 2), (1 / 3, 1 / 3, 1 / 3)) == pytest.approx(1 / 6)

    def test_hand_values(self):
        assert pl_prob((0, 1, 2), (0, 1, 2), (0.5, 0.3, 0.2)) == pytest.approx(0.30)
        assert pl_prob((1, 0, 2), (0, 1, 2), (0.5, 0.3, 0.2)) == pytest.approx(0.3 * 0.5 / 0.7)
        assert pl_prob((1, 0, 2), (0, 1, 2), (0.5, 0.3, 0.2)) == pytest.approx(0.214286, abs=1e-6)

    @given(st.integers(2, 6), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_matches_sequential_oracle(self, m, seed):
        rng = np.random.default_rng(seed)
        theta = rng.dirichlet(np.ones(m))
        center = tuple(int(a) for a in rng.permutation(m))
        sigma = tuple(int(a) for a in rng.permutation(m))
        assert pl_prob(sigma, center, theta) == pytest.approx(brute_pl(sigma, center, theta), rel=1e-12)

    def test_cmpl_g1_and_mixture(self):
        spec = ModelSpec.cmpl((0.4, 0.6), [[0.75, 0.25], [0.6, 0.4]])
        assert cmpl_prob((0, 1), spec) == pytest.approx(0.66)
        assert cmpl_prob((1, 0), spec) == pytest.approx(0.34)
        one = ModelSpec.cmpl((1.0,), [[0.5, 0.3, 0.2]], (2, 0, 1))
        for s in all_perms(3):
            assert cmpl_prob(s, one) == pytest.approx(brute_pl(s, (2, 0, 1), (0.5, 0.3, 0.2)))

    @pytest.mark.parametrize("m", range(2, 7))
    def test_normalised(self, m):
        rng = np.random.default_rng(200 + m)
        for _ in range(10):
            pr = random_cmpl_params(int(rng.integers(1, 4)), m, rng)
            spec = ModelSpec("CMPL", pr, m, tuple(int(a) for a in rng.permutation(m)))
            assert probs_vector(spec).sum() == pytest.approx(1.0, abs=1e-10)

    def test_row_validation(self):
        with pytest.raises(ParameterError):
            CmplParams((0.5, 0.5), [[0.4, 0.35, 0.25], [0.5, 0.3, 0.2]])  # dominance reversed
        with pytest.raises(ParameterError):
            CmplParams((1.0,), [[0.2, 0.3, 0.5]])  # increasing row
        with pytest.raises(ParameterError):
            CmplParams((1.0,), [[0.6, 0.6, -0.2]])
        unordered = CmplParams((1.0,), [[0.2, 0.3, 0.5]], ordered=False)
        assert unordered.m == 3

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            ModelSpec("CMPL", CmplParams((1.0,), [[0.6, 0.4]]), 3, (0, 1, 2))


class TestDominance:
    def test_examples(self):
        assert check_dominance(np.array([[0.5, 0.3, 0.2], [0.5, 0.3, 0.2]]))
        assert check_dominance(np.array([[0.5, 0.3, 0.2], [0.4, 0.35, 0.25]]))
        assert not check_dominance(np.array([[0.4, 0.35, 0.25], [0.5, 0.3, 0.2]]))

    @pytest.mark.parametrize("m", range(2, 6))
    def test_dominance_orders_center_probability(self, m):
        rng = np.random.default_rng(m)
        for _ in range(50):
            rows = random_cmpl_params(2, m, rng).strengths
            assert check_dominance(rows)
            ident = tuple(range(m))
            assert pl_prob(ident, ident, rows[0]) >= pl_prob(ident, ident, rows[1]) - 1e-12


class TestPartialMarginal:
    def test_uniform(self):
        spec = ModelSpec.cmm((1.0,), (1.0,), 4)
        assert partial_marginal(PartialRanking((3, 1), 4), spec) == pytest.approx(0.5)

    def test_hand_value(self):
        spec = ModelSpec.cmm((1.0,), (0.5,), 3)
        assert partial_marginal(PartialRanking((0, 1), 3), spec) == pytest.approx(1.75 / 2.625)

    def test_full_ranking(self):
        spec = ModelSpec.cmm((0.3, 0.7), (0.2, 0.8), 3, (1, 0, 2))
        for s in all_perms(3):
            assert partial_marginal(PartialRanking(s, 3), spec) == pytest.approx(cmm_prob(s, spec))


class TestKernel:
    def test_kernel_columns_are_conditional_laws(self):
        spec = ModelSpec.cmm((0.3, 0.7), (0.2, 0.8), 3)
        K = kernel_matrix(spec)
        R = enumerate_rankings(3)
        for j, center in enumerate(R):
            for i, s in enumerate(R):
                assert K[i, j] == pytest.approx(cmm_prob(s, spec, center=center), rel=1e-12)


def _exact_law(spec):
    return dict(zip(enumerate_rankings(spec.m), probs_vector(spec)))


class TestSamplers:
    def test_degenerate_cmm(self):
        spec = ModelSpec.cmm((0.5, 0.5), (1e-9, 1e-9), 5, (4, 2, 0, 1, 3))
        S = sample_cmm(spec, 100, 3)
        assert all(tuple(s) == (4, 2, 0, 1, 3) for s in S)

    def test_degenerate_cmpl(self):
        eps = 1e-9
        pair = ModelSpec.cmpl((1.0,), [[1 - eps, eps]], (1, 0))
        assert all(tuple(s) == (1, 0) for s in sample_cmpl(pair, 100, 4))
        # Only the top is pinned; the remaining equal strengths stay exchangeable.
        spec = ModelSpec.cmpl((1.0,), [[1 - 3 * eps, eps, eps, eps]], (1, 3, 0, 2))
        S = sample_cmpl(spec, 2000, 4)
        assert np.all(S[:, 0] == 1)
        assert len({tuple(s) for s in S}) == 6

    @pytest.mark.parametrize("fn,spec", [
        (sample_cmm, ModelSpec.cmm((0.3, 0.7), (0.2, 0.8), 4, (2, 0, 3, 1))),
        (sample_cmpl, ModelSpec.cmpl((0.4, 0.6), [[0.5, 0.3, 0.2], [0.4, 0.35, 0.25]], (1, 2, 0))),
    ])
    def test_seed_determinism(self, fn, spec):
        np.testing.assert_array_equal(fn(spec, 500, 11), fn(spec, 500, 11))
        assert not np.array_equal(fn(spec, 500, 11), fn(spec, 500, 12))

    def test_kind_checked(self):
        with pytest.raises(ParameterError):
            sample_cmpl(ModelSpec.cmm((1.0,), (0.5,), 3), 5, 0)

    def test_group_labels(self):
        spec = ModelSpec.cmm((0.25, 0.75), (0.1, 0.9), 3)
        S, g = sample(spec, 20_000, 5, return_groups=True)
        assert S.shape == (20_000, 3) and g.shape == (20_000,)
        assert np.mean(g == 0) == pytest.approx(0.25, abs=0.015)

    @pytest.mark.parametrize("spec", [
        ModelSpec.cmm((1.0,), (0.5,), 3),
        ModelSpec.cmpl((1.0,), [[0.5, 0.3, 0.2]]),
    ])
    def test_tv_single_group(self, spec):
        assert tv_distance(sample(spec, 100_000, 1), _exact_law(spec)) <= 0.01
