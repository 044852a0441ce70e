import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phsring.model import ParameterError, Parameters, build_matrices
from phsring.spectral import (
    dense_spectrum_oracle,
    eigenvalues,
    is_asymptotically_stable,
    mode_factors,
    clustered_distance,
    multiset_distance,
)


class TestModeFactors:
    def test_n4(self):
        np.testing.assert_allclose(mode_factors(4), [0, 2, 4, 2], atol=1e-15)

    def test_n3(self):
        np.testing.assert_allclose(mode_factors(3), [0, 3, 3], atol=1e-15)

    @pytest.mark.parametrize("n", [3, 4, 5, 10, 33, 64])
    def test_properties(self, n):
        mu = mode_factors(n)
        assert mu[0] == 0
        assert np.all((mu >= 0) & (mu <= 4))
        assert np.array_equal(mu[1:], mu[1:][::-1])

    def test_matches_eigenvalues_of_AtA(self):
        m = build_matrices(Parameters(11, 11))
        np.testing.assert_allclose(np.sort(mode_factors(11)), np.linalg.eigvalsh(m.AtA), atol=1e-13)

    def test_too_small(self):
        with pytest.raises(ParameterError):
            mode_factors(2)


class TestEigenvalues:
    def test_constant_mode(self):
        ev = eigenvalues(Parameters(6, 6, 1.3, 0.4, 1.0, 1.0)).eigenvalues
        assert ev[0, 0] == 0 and ev[0, 1] == -1.0

    def test_double_root(self):
        ev = eigenvalues(Parameters(4, 4, 1, 1, 0, 1)).eigenvalues
        np.testing.assert_allclose(ev[2], [-2, -2], atol=1e-7)

    def test_real_pair(self):
        ev = eigenvalues(Parameters(4, 4, 1, 1, 1, 1)).eigenvalues
        np.testing.assert_allclose(ev[1], [-2, -1], atol=1e-14)

    def test_complex_pair_has_no_nan(self):
        # beta = gamma = 0 gives a purely oscillatory spectrum
        ev = eigenvalues(Parameters(8, 8, 2.0, 0.0, 0.0, 1.0)).flat
        assert np.all(np.isfinite(ev))
        np.testing.assert_allclose(ev.real, 0, atol=1e-15)
        assert np.any(ev.imag != 0)

    @settings(max_examples=150, deadline=None)
    @given(
        n=st.integers(3, 40),
        alpha=st.floats(0.05, 5),
        beta=st.floats(0, 5),
        gamma=st.floats(0, 5),
    )
    def test_characteristic_equation_and_conjugacy(self, n, alpha, beta, gamma):
        spec = eigenvalues(Parameters(n, n, alpha, beta, gamma, 1.0))
        lam = spec.eigenvalues
        mu = spec.mode_factors[:, None]
        resid = lam**2 + lam * (beta * mu + gamma) + alpha**2 * mu
        scale = 1 + np.abs(lam) ** 2 + np.abs(lam) * (beta * mu + gamma) + alpha**2 * mu
        assert np.all(np.abs(resid) / scale < 1e-10)
        flat = spec.flat
        assert multiset_distance(flat, flat.conj()) < 1e-12

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(3, 40), alpha=st.floats(0.05, 5), beta=st.floats(0, 5), gamma=st.floats(0, 5))
    def test_trace(self, n, alpha, beta, gamma):
        flat = eigenvalues(Parameters(n, n, alpha, beta, gamma, 1.0)).flat
        expected = -2 * beta * n - n * gamma
        assert abs(flat.sum() - expected) <= 1e-9 * max(1.0, abs(expected))

    def test_rows(self):
        rows = list(eigenvalues(Parameters(3, 3, 1, 1, 1, 1)).rows())
        assert [(j, k) for j, k, _, _ in rows] == [(0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)]


class TestStability:
    def test_controlled_is_stable(self):
        assert is_asymptotically_stable(Parameters(10, 501, 1, 1, 1, 1))[0]
        assert is_asymptotically_stable(Parameters(10, 501, 1, 1, 0.1, 1))[0]
        assert is_asymptotically_stable(Parameters(7, 7, 3.0, 0.2, 1.0, 1))[0]

    def test_uncontrolled_is_not(self):
        stable, witness = is_asymptotically_stable(Parameters(10, 501, 1, 1, 0, 1))
        assert not stable and witness == 0

    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(3, 30), alpha=st.floats(0.05, 5), beta=st.floats(0.01, 5), gamma=st.floats(0, 5))
    def test_stable_iff_gamma_positive(self, n, alpha, beta, gamma):
        stable, witness = is_asymptotically_stable(Parameters(n, n, alpha, beta, gamma, 1))
        assert stable == (gamma > 0)
        assert witness <= 0


class TestDenseOracle:
    def test_n3(self):
        p = Parameters(3, 3, 1, 1, 1, 1)
        assert multiset_distance(eigenvalues(p).flat, dense_spectrum_oracle(p)) < 1e-8

    def test_reference_parameters(self):
        p = Parameters(10, 501, 1, 1, 0.1, 1)
        assert multiset_distance(eigenvalues(p).flat, dense_spectrum_oracle(p)) < 1e-8

    def test_sigma_independent(self):
        a = dense_spectrum_oracle(Parameters(9, 9, 1.1, 0.3, 0.7, 0.0))
        b = dense_spectrum_oracle(Parameters(9, 9, 1.1, 0.3, 0.7, 1.0))
        assert np.array_equal(a, b)

    def test_size_limit(self):
        with pytest.raises(ParameterError):
            dense_spectrum_oracle(Parameters(600, 600))


class TestMultisetDistance:
    def test_order_free(self):
        a = np.array([1 + 1j, 2, -3j, 2])
        assert multiset_distance(a, a[::-1]) == 0

    def test_detects_multiplicity(self):
        assert multiset_distance([1, 1, 2], [1, 2, 2]) == pytest.approx(1.0)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            multiset_distance([1, 2], [1])


class TestClusteredDistance:
    def test_defective_double_root(self):
        # j = N/2 with mu = 4 = 4 alpha^2 / beta^2 gives a Jordan block at -2
        p = Parameters(10, 501, 1, 1, 0, 1)
        closed, dense = eigenvalues(p).flat, dense_spectrum_oracle(p)
        assert multiset_distance(closed, dense) > 1e-9
        assert clustered_distance(closed, dense) < 1e-12

    def test_reduces_to_multiset_distance_for_simple_spectra(self):
        p = Parameters(9, 9, 1.1, 0.3, 0.7, 1.0)
        closed, dense = eigenvalues(p).flat, dense_spectrum_oracle(p)
        assert clustered_distance(closed, dense, radius=0.0) == pytest.approx(multiset_distance(closed, dense), rel=1e-12)

    def test_cluster_mean_error_is_reported(self):
        assert clustered_distance([1, 1, 5], [1.1, 1.1, 5]) == pytest.approx(0.1)
