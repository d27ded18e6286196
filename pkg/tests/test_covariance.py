import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepcov.covariance import (
    full_covariance,
    hs_norm_dn_diff_streaming,
    hs_norm_dn_streaming,
    marginal_covariances,
    sample_mean,
)
from sepcov.errors import (
    DegenerateSample,
    DimensionTooLarge,
    EmptySample,
    ShapeMismatch,
)
from sepcov.linalg import kron_full, partial_trace_1, partial_trace_2


def naive_marginals(x):
    """Quadruple-loop reference for the raw (unnormalized) marginals."""
    n, d1, d2 = x.shape
    xc = x - x.mean(axis=0)
    c1 = np.zeros((d1, d1))
    for k in range(d1):
        for kp in range(d1):
            acc = 0.0
            for i in range(n):
                for l in range(d2):
                    acc += xc[i, k, l] * xc[i, kp, l]
            c1[k, kp] = acc / n
    c2 = np.zeros((d2, d2))
    for l in range(d2):
        for lp in range(d2):
            acc = 0.0
            for i in range(n):
                for k in range(d1):
                    acc += xc[i, k, l] * xc[i, k, lp]
            c2[l, lp] = acc / n
    return c1, c2


def rank_one_sample(rng, n=10, d1=4, d2=3):
    u = rng.standard_normal(d1)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(d2)
    v /= np.linalg.norm(v)
    xi = rng.standard_normal(n)
    return xi[:, None, None] * np.einsum("i,j->ij", u, v), u, v, xi


class TestSampleMean:
    def test_two_copies(self):
        m = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(sample_mean(np.stack([m, m])), m)

    def test_antisymmetric_pair(self):
        m = np.arange(6.0).reshape(2, 3) + 1
        assert np.array_equal(sample_mean(np.stack([m, -m])), np.zeros((2, 3)))

    def test_matches_naive_loop(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((5, 3, 4))
        expect = np.zeros((3, 4))
        for i in range(5):
            expect += x[i]
        expect /= 5
        assert np.allclose(sample_mean(x), expect, atol=1e-12)

    def test_empty(self):
        with pytest.raises(EmptySample):
            sample_mean(np.empty((0, 2, 2)))


class TestMarginalCovariances:
    def test_degenerate(self):
        m = np.ones((2, 3))
        with pytest.raises(DegenerateSample):
            marginal_covariances(np.stack([m, m, m]))

    def test_rank_one_closed_form(self):
        rng = np.random.default_rng(1)
        x, u, v, xi = rank_one_sample(rng)
        s2 = ((xi - xi.mean()) ** 2).mean()
        s = math.sqrt(s2)
        mp = marginal_covariances(x)
        assert np.allclose(mp.c1, s * np.outer(u, u), atol=1e-10)
        assert np.allclose(mp.c2, s * np.outer(v, v), atol=1e-10)

    def test_fast_path_equals_naive(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((10, 4, 3))
        raw1, raw2 = naive_marginals(x)
        mp = marginal_covariances(x)
        assert np.allclose(mp.c1, raw1 / math.sqrt(np.trace(raw1)), atol=1e-10)
        assert np.allclose(mp.c2, raw2 / math.sqrt(np.trace(raw2)), atol=1e-10)

    def test_normalization_identity(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((8, 5, 4))
        mp = marginal_covariances(x)
        assert mp.trace_c1 == pytest.approx(mp.trace_c2, rel=1e-9)
        xc = x - x.mean(axis=0)
        total = (xc * xc).sum() / 8
        assert mp.trace_c1 * mp.trace_c2 == pytest.approx(total, rel=1e-9)

    def test_shift_invariance(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((6, 3, 4))
        shift = rng.standard_normal((3, 4))
        mp0 = marginal_covariances(x)
        mp1 = marginal_covariances(x + shift)
        assert np.allclose(mp0.c1, mp1.c1, atol=1e-12)
        assert np.allclose(mp0.c2, mp1.c2, atol=1e-12)

    def test_too_few_replicates(self):
        with pytest.raises(EmptySample):
            marginal_covariances(np.ones((1, 2, 2)))


class TestFullCovariance:
    def test_antisymmetric_pair(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((3, 2))
        c = full_covariance(np.stack([m, -m]))
        assert np.allclose(c, np.einsum("ij,kl->ijkl", m, m), atol=1e-12)

    def test_partial_trace_consistency_with_marginals(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((9, 4, 3))
        c = full_covariance(x)
        mp = marginal_covariances(x)
        tr = np.einsum("ijij->", c)
        assert np.allclose(partial_trace_2(c) / math.sqrt(tr), mp.c1, atol=1e-10)
        assert np.allclose(partial_trace_1(c) / math.sqrt(tr), mp.c2, atol=1e-10)

    def test_trace_identity(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((5, 3, 3))
        c = full_covariance(x)
        xc = x - x.mean(axis=0)
        assert np.einsum("ijij->", c) == pytest.approx((xc * xc).sum() / 5, rel=1e-12)

    def test_cap(self):
        with pytest.raises(DimensionTooLarge):
            full_covariance(np.zeros((2, 40, 40)))


def dense_hs_dn(x):
    mp = marginal_covariances(x)
    d = full_covariance(x) - kron_full(mp.c1, mp.c2)
    return float((d * d).sum())


class TestHsNormStreaming:
    def test_exactly_separable_rank_one(self):
        rng = np.random.default_rng(8)
        x, *_ = rank_one_sample(rng, n=12)
        assert hs_norm_dn_streaming(x) <= 1e-12

    def test_matches_dense(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((8, 4, 3))
        assert hs_norm_dn_streaming(x) == pytest.approx(dense_hs_dn(x), rel=1e-9)

    def test_antisymmetric_pair_matches_dense(self):
        rng = np.random.default_rng(10)
        m = rng.standard_normal((3, 2))
        x = np.stack([m, -m])
        assert hs_norm_dn_streaming(x) == pytest.approx(dense_hs_dn(x), rel=1e-9)

    @pytest.mark.parametrize("d1,d2", [(2, 2), (3, 5), (5, 3), (8, 8), (7, 4)])
    def test_grid_sweep(self, d1, d2):
        rng = np.random.default_rng(100 + d1 * 10 + d2)
        x = rng.standard_normal((6, d1, d2))
        assert hs_norm_dn_streaming(x) == pytest.approx(dense_hs_dn(x), rel=1e-9)

    def test_stochastic_decrease_in_n(self):
        # under a separable population covariance the norm shrinks with n
        rng = np.random.default_rng(11)
        a = np.linalg.cholesky(np.eye(6) * 0.5 + 0.5)
        b = np.linalg.cholesky(np.eye(4) * 0.7 + 0.3)

        def draw(n):
            g = rng.standard_normal((n, 6, 4))
            return a @ g @ b.T

        small = np.median([hs_norm_dn_streaming(draw(20)) for _ in range(50)])
        large = np.median([hs_norm_dn_streaming(draw(200)) for _ in range(50)])
        assert large < small


class TestHsNormDiffStreaming:
    def test_identical_inputs_exact_zero(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((6, 3, 4))
        assert hs_norm_dn_diff_streaming(x, x) == 0.0

    def test_matches_dense(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal((7, 4, 3))
        y = x[rng.integers(0, 7, size=7)]
        mp_x = marginal_covariances(x)
        mp_y = marginal_covariances(y)
        dx = full_covariance(x) - kron_full(mp_x.c1, mp_x.c2)
        dy = full_covariance(y) - kron_full(mp_y.c1, mp_y.c2)
        expect = float(((dy - dx) ** 2).sum())
        assert hs_norm_dn_diff_streaming(y, x) == pytest.approx(expect, rel=1e-9)

    def test_symmetry_in_arguments(self):
        rng = np.random.default_rng(14)
        x = rng.standard_normal((6, 3, 3))
        y = rng.standard_normal((6, 3, 3))
        assert hs_norm_dn_diff_streaming(x, y) == pytest.approx(
            hs_norm_dn_diff_streaming(y, x), rel=1e-12
        )

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            hs_norm_dn_diff_streaming(np.zeros((3, 2, 2)), np.zeros((4, 2, 2)))


@settings(max_examples=20, deadline=None)
@given(
    st.integers(2, 8),
    st.integers(2, 5),
    st.integers(2, 4),
    st.integers(0, 2**32 - 1),
)
def test_streaming_vs_dense_fuzz(n, d1, d2, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, d1, d2))
    dense = dense_hs_dn(x)
    assert hs_norm_dn_streaming(x) == pytest.approx(dense, rel=1e-9, abs=1e-12)
