import numpy as np
import pytest
from math import comb, factorial
from scipy import integrate
from scipy.linalg import solve_triangular

from thorinfit.cumulants import mu_from_tau
from thorinfit.laguerre import (
    DomainError,
    build_a_matrix,
    density_series,
    laguerre_phi,
    phi_table,
)
from thorinfit.multiindex import enumerate_index_set
from thorinfit.thorin import tau_univariate

SQRT2 = np.sqrt(2.0)


def phi_direct(k, x):
    return SQRT2 * sum(comb(k, j) * (-2.0 * x) ** j / factorial(j) for j in range(k + 1)) * np.exp(-x)


class TestPhi:
    def test_values(self):
        assert laguerre_phi(0, 0.0) == pytest.approx(1.4142135623730951, abs=1e-15)
        assert laguerre_phi(1, 0.5) == pytest.approx(0.0, abs=1e-15)
        assert laguerre_phi((1, 0), [0.5, 3.7]) == pytest.approx(0.0, abs=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            laguerre_phi(2, -0.1)
        with pytest.raises(DomainError):
            laguerre_phi((1, 1), [0.2, -1.0])

    def test_matches_direct_sum(self):
        x = np.linspace(0, 10, 41)
        tab = phi_table(15, x)
        for k in range(16):
            np.testing.assert_allclose(tab[k], phi_direct(k, x), atol=1e-8)

    def test_uniform_bound(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 100, 10_000)
        ks = rng.integers(0, 41, 10_000)
        tab = phi_table(40, x)
        vals = tab[ks, np.arange(len(x))]
        assert np.all(np.abs(vals) <= SQRT2 * (1 + 1e-12))
        # bivariate products stay under sqrt(2)^2
        pts = rng.uniform(0, 100, (500, 2))
        for k, p in zip(rng.integers(0, 41, (500, 2)), pts):
            assert abs(laguerre_phi(tuple(k), p)) <= 2.0 * (1 + 1e-12)

    def test_orthonormal(self):
        G = np.empty((11, 11))
        for j in range(11):
            for k in range(j, 11):
                G[j, k] = G[k, j] = integrate.quad(
                    lambda x: phi_table(k, x)[j] * phi_table(k, x)[k], 0, 40, limit=200
                )[0]
        np.testing.assert_allclose(G, np.eye(11), atol=1e-6)


class TestAMatrix:
    def test_small_rows(self):
        A = build_a_matrix(2)
        np.testing.assert_allclose(A[0], SQRT2 * np.array([1, 0, 0]))
        np.testing.assert_allclose(A[1], SQRT2 * np.array([1, -2, 0]))
        np.testing.assert_allclose(A[2], SQRT2 * np.array([1, -4, 2]))

    def test_unit_moment_vector(self):
        for m, d in [(5, 1), (3, 2), (2, 3)]:
            iset = enumerate_index_set(m, d)
            mu = np.zeros(len(iset))
            mu[0] = 1.0
            np.testing.assert_allclose(build_a_matrix(iset) @ mu, SQRT2**d)

    def test_lower_triangular_and_invertible(self):
        for iset in (enumerate_index_set(20, 1), enumerate_index_set(4, 2), enumerate_index_set(3, 3)):
            A = build_a_matrix(iset)
            assert np.all(np.triu(A, 1) == 0)
            assert np.all(np.diag(A) != 0)

    def test_multivariate_entries(self):
        iset = enumerate_index_set(3, 2)
        A = build_a_matrix(iset)
        for r, k in enumerate(iset):
            for c, j in enumerate(iset):
                want = 2.0
                for ki, ji in zip(k, j):
                    want *= comb(ki, ji) * (-2.0) ** ji / factorial(ji) if ji <= ki else 0.0
                assert A[r, c] == pytest.approx(want, abs=1e-14)

    def test_roundtrip(self):
        # cond(A) grows to ~1e22 at m = 20, so the check is on the backward
        # error of the triangular solve, not on componentwise forward error
        rng = np.random.default_rng(1)
        for m in (1, 5, 10, 20):
            A = build_a_matrix(m)
            a = rng.random(m + 1)
            mu = solve_triangular(A, a, lower=True)
            scale = np.abs(A) @ np.abs(mu)
            assert np.max(np.abs(A @ mu - a) / scale) < 1e-10
        # and forward error is fine where A is well conditioned
        A = build_a_matrix(5)
        mu = rng.random(6)
        np.testing.assert_allclose(solve_triangular(A, A @ mu, lower=True), mu, rtol=1e-10)

    def test_univariate_matches_multiindex_form(self):
        np.testing.assert_array_equal(build_a_matrix(6), build_a_matrix(enumerate_index_set(6, 1)))

    def test_data_independent_coefficients_match_phi(self):
        # a_k = E[phi_k(X)] for a point mass X = x: mu_k = x^k e^-x
        x = 0.7
        mu = x ** np.arange(11) * np.exp(-x)
        np.testing.assert_allclose(build_a_matrix(10) @ mu, phi_table(10, x), atol=1e-12)


class TestDensitySeries:
    def test_exponential_density(self):
        m = 30
        tau = tau_univariate([1.0], [1.0], m)
        a = build_a_matrix(m) @ mu_from_tau(tau)
        assert density_series(a, 1.0) == pytest.approx(np.exp(-1.0), abs=1e-4)

    def test_zero_coefficients(self):
        x = np.linspace(0, 5, 7)
        np.testing.assert_array_equal(density_series(np.zeros(6), x), 0.0)

    def test_negative_point(self):
        with pytest.raises(DomainError):
            density_series(np.ones(3), -1.0)
        iset = enumerate_index_set(2, 2)
        with pytest.raises(DomainError):
            density_series(np.ones(len(iset)), [0.5, -0.5], iset)

    def test_dimension_mismatch(self):
        iset = enumerate_index_set(2, 2)
        with pytest.raises(ValueError):
            density_series(np.ones(len(iset)), [0.5, 0.5, 0.5], iset)
        with pytest.raises(ValueError):
            density_series(np.ones(4), [0.5, 0.5], iset)

    def test_bivariate_product(self):
        # independent unit exponentials: density e^{-x-y}
        iset = enumerate_index_set(30, 2)
        tau1 = tau_univariate([1.0], [1.0], 30)
        mu1 = mu_from_tau(tau1)
        mu = np.array([mu1[i] * mu1[j] for i, j in iset])
        a = build_a_matrix(iset) @ mu
        assert density_series(a, [0.5, 1.0], iset) == pytest.approx(np.exp(-1.5), abs=1e-3)
