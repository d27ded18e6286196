import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sepcov.errors import (
    DimensionTooLarge,
    NegativeEigenvalue,
    NotSymmetric,
    SingularMatrix,
)
from sepcov.linalg import (
    EigenSystem,
    full_trace,
    inv_sqrt,
    kron_full,
    partial_trace_1,
    partial_trace_2,
    psd_sqrt,
    sym_eigen,
)


def random_symmetric(rng, d, psd=True):
    m = rng.standard_normal((d, d))
    if psd:
        return m @ m.T
    return 0.5 * (m + m.T)


class TestSymEigen:
    def test_identity(self):
        es = sym_eigen(np.eye(3))
        assert np.allclose(es.values, [1.0, 1.0, 1.0])
        assert np.allclose(es.vectors @ es.vectors.T, np.eye(3), atol=1e-10)

    def test_diagonal(self):
        es = sym_eigen(np.diag([4.0, 1.0]))
        assert np.allclose(es.values, [4.0, 1.0])
        # sign convention: largest-magnitude coordinate positive
        assert np.allclose(np.abs(es.vectors), np.eye(2), atol=1e-12)
        assert es.vectors[0, 0] > 0 and es.vectors[1, 1] > 0

    def test_reconstruction(self):
        rng = np.random.default_rng(42)
        m = random_symmetric(rng, 6)
        es = sym_eigen(m)
        rec = (es.vectors * es.values) @ es.vectors.T
        assert np.linalg.norm(rec - m) <= 1e-9 * np.linalg.norm(m)

    def test_descending_orthonormal(self):
        rng = np.random.default_rng(3)
        es = sym_eigen(random_symmetric(rng, 8))
        assert np.all(np.diff(es.values) <= 0)
        assert np.allclose(es.vectors.T @ es.vectors, np.eye(8), atol=1e-10)

    def test_not_symmetric(self):
        m = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NotSymmetric):
            sym_eigen(m)

    def test_negative_eigenvalue(self):
        with pytest.raises(NegativeEigenvalue):
            sym_eigen(np.diag([1.0, -0.5]))

    def test_noise_band_clamped(self):
        # eigenvalue inside [-1e-10*lam_max, 0] clamps to zero
        es = sym_eigen(np.diag([1.0, -1e-12]))
        assert es.values[-1] == 0.0

    def test_symmetrization_noise_invariance(self):
        rng = np.random.default_rng(9)
        m = random_symmetric(rng, 5)
        e = rng.standard_normal((5, 5))
        anti = (e - e.T) * (1e-14 * np.abs(m).max())
        es0, es1 = sym_eigen(m), sym_eigen(m + anti)
        assert np.allclose(es0.values, es1.values, atol=1e-10 * es0.values[0])
        assert np.allclose(es0.vectors, es1.vectors, atol=1e-6)

    def test_zero_matrix(self):
        es = sym_eigen(np.zeros((3, 3)))
        assert np.all(es.values == 0.0)


class TestInvSqrt:
    def test_identity(self):
        assert np.allclose(inv_sqrt(np.eye(4)), np.eye(4), atol=1e-12)

    def test_diagonal(self):
        assert np.allclose(inv_sqrt(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]), atol=1e-12)

    def test_whitening_identity(self):
        rng = np.random.default_rng(7)
        m = random_symmetric(rng, 4) + 0.1 * np.eye(4)
        a = inv_sqrt(m)
        assert np.allclose(a @ m @ a.T, np.eye(4), atol=1e-8)

    def test_symmetric_output(self):
        rng = np.random.default_rng(8)
        a = inv_sqrt(random_symmetric(rng, 5) + 0.1 * np.eye(5))
        assert np.allclose(a, a.T, atol=1e-14)

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            inv_sqrt(np.diag([1.0, 0.0]))

    def test_inv_sqrt_of_square_roundtrip(self):
        rng = np.random.default_rng(11)
        m = random_symmetric(rng, 4) + 0.5 * np.eye(4)
        s = psd_sqrt(m)
        assert np.allclose(s @ s, m, atol=1e-9 * np.abs(m).max())
        a = inv_sqrt(m)
        assert np.allclose(a @ s @ s @ a.T, np.eye(4), atol=1e-8)


class TestKronFull:
    def test_identities(self):
        c = kron_full(np.eye(2), np.eye(2))
        expect = np.einsum("ik,jl->ijkl", np.eye(2), np.eye(2))
        assert np.array_equal(c, expect)

    def test_scalar_factor(self):
        rng = np.random.default_rng(1)
        b = random_symmetric(rng, 3)
        c = kron_full(np.array([[2.0]]), b)
        assert np.allclose(c[0, :, 0, :], 2.0 * b)

    def test_trace_product(self):
        rng = np.random.default_rng(2)
        a, b = random_symmetric(rng, 3), random_symmetric(rng, 2)
        assert full_trace(kron_full(a, b)) == pytest.approx(
            np.trace(a) * np.trace(b), rel=1e-12
        )

    def test_dimension_cap(self):
        with pytest.raises(DimensionTooLarge):
            kron_full(np.eye(64), np.eye(64))


class TestPartialTraces:
    def test_defining_property_exact_on_integers(self):
        # integer-valued entries make the contraction exact in floating point
        rng = np.random.default_rng(4)
        a = rng.integers(-3, 4, size=(3, 3)).astype(float)
        a = a + a.T
        b = rng.integers(-3, 4, size=(2, 2)).astype(float)
        b = b + b.T
        c = kron_full(a, b)
        assert np.array_equal(partial_trace_1(c), np.trace(a) * b)
        assert np.array_equal(partial_trace_2(c), np.trace(b) * a)

    def test_defining_property_floats(self):
        rng = np.random.default_rng(5)
        a, b = random_symmetric(rng, 4), random_symmetric(rng, 3)
        c = kron_full(a, b)
        scale = np.abs(np.trace(a) * b).max()
        assert np.allclose(partial_trace_1(c), np.trace(a) * b, atol=1e-14 * scale)

    def test_identity_factor(self):
        rng = np.random.default_rng(6)
        b = random_symmetric(rng, 3)
        assert np.allclose(partial_trace_1(kron_full(np.eye(2), b)), 2.0 * b)

    def test_linearity(self):
        rng = np.random.default_rng(12)
        c1 = kron_full(random_symmetric(rng, 3), random_symmetric(rng, 2))
        c2 = kron_full(random_symmetric(rng, 3), random_symmetric(rng, 2))
        lhs = partial_trace_1(c1 + c2)
        rhs = partial_trace_1(c1) + partial_trace_1(c2)
        assert np.allclose(lhs, rhs, atol=1e-12 * max(1.0, np.abs(rhs).max()))

    def test_trace_consistency(self):
        rng = np.random.default_rng(13)
        c = kron_full(random_symmetric(rng, 4), random_symmetric(rng, 3))
        t = full_trace(c)
        assert np.trace(partial_trace_1(c)) == pytest.approx(t, rel=1e-10)
        assert np.trace(partial_trace_2(c)) == pytest.approx(t, rel=1e-10)

    def test_duality_with_bounded_factor(self):
        # trace(S . tr1(C)) == trace((Id (x) S) C)
        rng = np.random.default_rng(14)
        c = kron_full(random_symmetric(rng, 4), random_symmetric(rng, 3))
        c = c + 0.3 * kron_full(random_symmetric(rng, 4), random_symmetric(rng, 3))
        s = rng.standard_normal((3, 3))
        lhs = np.trace(s @ partial_trace_1(c))
        rhs = np.einsum("ijil,lj->", c, s)
        assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_partial_trace_properties_fuzz(d1, d2, seed):
    rng = np.random.default_rng(seed)
    a, b = random_symmetric(rng, d1), random_symmetric(rng, d2)
    c = kron_full(a, b)
    t = full_trace(c)
    scale = max(1.0, abs(t))
    assert abs(np.trace(partial_trace_1(c)) - t) <= 1e-10 * scale
    assert abs(np.trace(partial_trace_2(c)) - t) <= 1e-10 * scale
    assert abs(t - np.trace(a) * np.trace(b)) <= 1e-10 * scale


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_inv_sqrt_whitens_fuzz(d, seed):
    rng = np.random.default_rng(seed)
    m = random_symmetric(rng, d) + 0.2 * np.eye(d)
    a = inv_sqrt(m)
    assert np.allclose(a @ m @ a.T, np.eye(d), atol=1e-8)


def test_eigen_system_dim():
    es = EigenSystem(values=np.array([2.0, 1.0]), vectors=np.eye(2))
    assert es.dim == 2
