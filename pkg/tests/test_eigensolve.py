import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from s1dirac.eigensolve import (
    bipartite_eigenvalues,
    eigen_residuals,
    fourier_diff_matrix,
    hermitian_eigenvalues,
    tridiagonal_eigenvalues,
)

from conftest import random_hermitian
from oracles import charpoly_eigenvalues


def test_identity():
    np.testing.assert_array_equal(hermitian_eigenvalues(np.eye(3)), [1, 1, 1])


def test_diagonal():
    np.testing.assert_allclose(hermitian_eigenvalues(np.diag([5.0, -2.0, 0.0])), [-2, 0, 5], atol=0)


def test_one_by_one():
    assert hermitian_eigenvalues([[3.5]]).tolist() == [3.5]


def test_random_12_against_characteristic_polynomial(rng):
    m = random_hermitian(rng, 12)
    np.testing.assert_allclose(hermitian_eigenvalues(m), charpoly_eigenvalues(m), atol=1e-9)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        hermitian_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_rejects_non_square():
    with pytest.raises(ValueError):
        hermitian_eigenvalues(np.zeros((2, 3)))


def test_tridiagonal_known():
    # (2, -1) Toeplitz: 2 - 2 cos(j pi / (n + 1))
    n = 9
    expected = 2 - 2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    np.testing.assert_allclose(tridiagonal_eigenvalues(2 * np.ones(n), -np.ones(n - 1)),
                               np.sort(expected), atol=1e-14)


def test_bipartite_matches_full(rng):
    b = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    z = np.zeros_like(b)
    full = np.block([[z, b], [b.conj().T, z]])
    np.testing.assert_allclose(bipartite_eigenvalues(b), hermitian_eigenvalues(full), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 24), seed=st.integers(0, 2**31 - 1))
def test_trace_and_frobenius_identities(n, seed):
    m = random_hermitian(np.random.default_rng(seed), n)
    lam = hermitian_eigenvalues(m)
    scale = np.sum(np.abs(lam))
    assert abs(lam.sum() - np.trace(m).real) <= 1e-9 * scale
    assert abs(np.sum(lam**2) - np.linalg.norm(m) ** 2) <= 1e-9 * np.linalg.norm(m) ** 2


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 20), seed=st.integers(0, 2**31 - 1))
def test_permutation_invariance(n, seed):
    r = np.random.default_rng(seed)
    m = random_hermitian(r, n)
    p = r.permutation(n)
    np.testing.assert_allclose(hermitian_eigenvalues(m[np.ix_(p, p)]), hermitian_eigenvalues(m),
                               atol=1e-12 * np.linalg.norm(m))


def test_residuals_backward_stable(rng):
    m = random_hermitian(rng, 80, scale=10.0)
    lam = hermitian_eigenvalues(m)
    res = eigen_residuals(m, lam, rng=1)
    assert len(res) == 5
    assert np.max(res) <= 1e-10 * np.linalg.norm(m, 2)


def test_graded_and_degenerate_spectra():
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((10, 10)))
    lam = np.array([1e-8, 1e-8, 1, 1, 1, 2, 1e4, -1e4, -3, 0.0])
    m = q @ np.diag(lam) @ q.T
    m = (m + m.T) / 2
    np.testing.assert_allclose(hermitian_eigenvalues(m), np.sort(lam), atol=1e-11 * 1e4)


class TestFourierDiff:
    def test_annihilates_constants(self):
        D = fourier_diff_matrix(16, 3.0, 0.0)
        assert np.max(np.abs(D @ np.ones(16))) < 1e-13

    def test_exact_on_fundamental_mode(self):
        p = 2.5
        x = np.arange(32) * p / 32
        f = np.exp(2j * np.pi * x / p)
        D = fourier_diff_matrix(32, p, 0.0)
        assert np.max(np.abs(D @ f - (2j * np.pi / p) * f)) <= 1e-12

    def test_half_shift(self):
        p = 1.7
        x = np.arange(20) * p / 20
        f = np.exp(1j * np.pi * x / p)
        D = fourier_diff_matrix(20, p, 0.5)
        assert np.max(np.abs(D @ f - (1j * np.pi / p) * f)) <= 1e-12

    @pytest.mark.parametrize("shift", [0.0, 0.5, 0.25, -0.3])
    def test_skew_hermitian(self, shift):
        D = fourier_diff_matrix(24, 2.0, shift)
        assert np.max(np.abs(D + D.conj().T)) <= 1e-13 * np.max(np.abs(D))

    def test_spectrum_is_mode_lattice(self):
        G, p = 16, 4.0
        D = fourier_diff_matrix(G, p, 0.0)
        lam = hermitian_eigenvalues(-1j * D)
        np.testing.assert_allclose(lam, 2 * np.pi * np.arange(-G // 2, G // 2) / p, atol=1e-12)

    def test_twisted_boundary_condition(self):
        # a mode with psi(x + p) = e^{2 pi i s} psi(x), off the zero-shift lattice
        G, p, s = 16, 1.0, 0.25
        x = np.arange(G) * p / G
        f = np.exp(2j * np.pi * (3 + s) * x / p)
        D = fourier_diff_matrix(G, p, s)
        np.testing.assert_allclose(D @ f, 2j * np.pi * (3 + s) / p * f, atol=1e-11)

    def test_odd_grid_rejected(self):
        with pytest.raises(ValueError):
            fourier_diff_matrix(15, 1.0)
