import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phsring.model import (
    ParameterError,
    Parameters,
    State,
    apply_A,
    apply_AtA,
    apply_At,
    build_matrices,
    distances_from_positions,
    drift,
    drift_matrix_form,
    hamiltonian,
    hamiltonian_dissipation_rate,
    hamiltonian_expected_drift,
    potential,
    potential_derivative,
    uniform_state,
    validate_parameters,
)

REFERENCE = Parameters(n_agents=10, ring_length=501, alpha=1, beta=1, gamma=0.1, sigma=1, u=0)


def P(n=3, L=6.0, alpha=1.0, beta=1.0, gamma=0.0, sigma=0.0, u=0.0):
    return Parameters(n, L, alpha, beta, gamma, sigma, u)


class TestValidation:
    def test_reference_parameters_accepted(self):
        assert validate_parameters(REFERENCE) is REFERENCE

    @pytest.mark.parametrize(
        "bad",
        [
            P(n=2, L=1, gamma=1),
            P(alpha=-1.0),
            P(alpha=0.0),
            P(L=0.0),
            P(beta=-0.1),
            P(gamma=-1.0),
            P(sigma=-1.0),
            P(u=float("nan")),
        ],
    )
    def test_domain_violations(self, bad):
        with pytest.raises(ParameterError):
            validate_parameters(bad)

    def test_replace_revalidates(self):
        with pytest.raises(ParameterError):
            REFERENCE.replace(gamma=-1)
        assert REFERENCE.replace(gamma=1).gamma == 1


class TestDistances:
    @pytest.mark.parametrize(
        "q, L, expected",
        [
            ((0, 1, 2, 3), 4, (1, 1, 1, 1)),
            ((0, 1, 3), 6, (1, 2, 3)),
            ((0, 0, 0), 5, (0, 0, 5)),
        ],
    )
    def test_examples(self, q, L, expected):
        Q = distances_from_positions(q, L)
        np.testing.assert_array_equal(Q, expected)
        assert Q.sum() == L

    def test_unordered_rejected(self):
        with pytest.raises(ValueError):
            distances_from_positions([0, 2, 1], 4)


@pytest.mark.parametrize(
    "x, alpha, U, dU",
    [(0.0, 1.0, 0.0, 0.0), (2.0, 1.0, 2.0, 2.0), (1.0, 2.0, 2.0, 4.0)],
)
def test_potential(x, alpha, U, dU):
    assert potential(x, alpha) == U
    assert potential_derivative(x, alpha) == dU


class TestMatrices:
    def test_difference_matrix_n3(self):
        m = build_matrices(P())
        np.testing.assert_array_equal(m.A, [[-1, 1, 0], [0, -1, 1], [1, 0, -1]])
        np.testing.assert_array_equal(m.AtA, [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]])

    @pytest.mark.parametrize("n", [3, 4, 7, 20])
    def test_structure(self, n):
        p = Parameters(n, n, alpha=1.7, beta=0.6, gamma=0.3, sigma=0.9, u=1.2)
        m = build_matrices(p)
        assert np.all(m.J + m.J.T == 0)
        assert np.all(m.R == m.R.T)
        np.testing.assert_array_equal(m.A.sum(axis=1), 0)
        np.testing.assert_array_equal(m.AtA.sum(axis=1), 0)
        np.testing.assert_array_equal(m.A @ np.ones(n), 0)
        np.testing.assert_array_equal(np.diag(m.AtA), 2)
        Z = np.zeros((n, n))
        np.testing.assert_array_equal(m.B[:n, :n], Z)
        np.testing.assert_array_equal(m.B[:n, n:], m.A)
        np.testing.assert_allclose(m.B[n:, :n], -p.alpha**2 * m.A.T)
        np.testing.assert_allclose(m.B[n:, n:], -p.beta * m.AtA - p.gamma * np.eye(n))
        np.testing.assert_array_equal(m.S, np.r_[np.zeros(n), np.full(n, p.gamma)])
        np.testing.assert_array_equal(m.G, np.vstack([Z, p.sigma * np.eye(n)]))

    def test_dissipation_quadratic_form(self):
        p = Parameters(6, 6, 1, 0.7, 0.4, 1, 0)
        m = build_matrices(p)
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.normal(size=12)
            Q, v = x[:6], x[6:]
            form = x @ m.R @ x
            assert form >= -1e-12
            expected = p.beta * np.sum(apply_A(v) ** 2) + p.gamma * v @ v
            assert form == pytest.approx(expected, rel=1e-12, abs=1e-12)
            # R acts on velocities only
            y = np.r_[Q, np.zeros(6)]
            assert y @ m.R @ y == 0

    def test_matrix_free_operators_match_dense(self):
        m = build_matrices(P(n=9, L=9))
        x = np.random.default_rng(1).normal(size=(4, 9))
        np.testing.assert_allclose(apply_A(x), x @ m.A.T, atol=1e-14)
        np.testing.assert_allclose(apply_At(x), x @ m.A, atol=1e-14)
        np.testing.assert_allclose(apply_AtA(x), x @ m.AtA.T, atol=1e-14)

    def test_dense_size_limit(self):
        with pytest.raises(ParameterError):
            build_matrices(Parameters(513, 513))


class TestDrift:
    def test_uniform_state_is_equilibrium(self):
        p = Parameters(10, 501, 1.3, 0.7, 0.5, 1.0, 2.5)
        d = drift(uniform_state(p, velocity=p.u), p)
        assert np.all(d.Q == 0) and np.all(d.p == 0)

    def test_hand_example_distances(self):
        d = drift(State([1, 2, 3], [0, 0, 0]), P())
        np.testing.assert_array_equal(d.Q, [0, 0, 0])
        np.testing.assert_array_equal(d.p, [-2, 1, 1])

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 3.0])
    def test_hand_example_velocities(self, alpha):
        d = drift(State([2, 2, 2], [1, 0, 0]), P(alpha=alpha))
        np.testing.assert_array_equal(d.Q, [-1, 0, 1])
        np.testing.assert_array_equal(d.p, [-2, 1, 1])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            drift(State([1, 2, 3, 4], [0, 0, 0, 0]), P())

    def test_componentwise_equals_port_hamiltonian_form(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            n = int(rng.integers(3, 12))
            p = Parameters(
                n,
                float(rng.uniform(1, 50)),
                alpha=float(rng.uniform(0.1, 3)),
                beta=float(rng.uniform(0, 3)),
                gamma=float(rng.uniform(0, 3)),
                sigma=1.0,
                u=float(rng.normal()),
            )
            s = State(rng.normal(p.spacing, 1, n), rng.normal(0, 2, n))
            a, b = drift(s, p), drift_matrix_form(s, p)
            scale = 1 + np.abs(np.r_[a.Q, a.p]).max()
            np.testing.assert_allclose(np.r_[a.Q, a.p], np.r_[b.Q, b.p], rtol=1e-12, atol=1e-12 * scale)


class TestHamiltonian:
    def test_values(self):
        p = P(n=4, L=4)
        assert hamiltonian(State(np.ones(4), np.zeros(4)), p) == 2.0
        assert hamiltonian(State(np.ones(4), [1, 0, 0, 0]), p) == 2.5
        assert hamiltonian(State(np.ones(4), np.zeros(4)), P(n=4, L=4, alpha=2)) == 8.0

    def test_dissipation_rate_examples(self):
        s = State(np.ones(3), [1, 0, 0])
        assert hamiltonian_dissipation_rate(s, P(gamma=1)) == -3.0
        assert hamiltonian_dissipation_rate(State(np.ones(3), [1, 1, 1]), P(beta=5)) == 0.0
        eq = Parameters(5, 5, 1, 1, 1, 0, u=0.7)
        assert hamiltonian_dissipation_rate(uniform_state(eq, 0.7), eq) == 0.0

    def test_expected_drift_examples(self):
        assert hamiltonian_expected_drift(uniform_state(P(u=1.5), 1.5), P(u=1.5, gamma=2)) == 0.0
        assert hamiltonian_expected_drift(State([5, -1, 2], np.zeros(3)), P(sigma=1)) == 1.5
        assert hamiltonian_expected_drift(State(np.ones(3), [1, 0, 0]), P(gamma=1)) == -3.0

    @settings(max_examples=200, deadline=None)
    @given(
        n=st.integers(3, 15),
        beta=st.floats(0, 5),
        gamma=st.floats(0, 5),
        u=st.floats(-3, 3),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_dissipation_never_positive(self, n, beta, gamma, u, seed):
        rng = np.random.default_rng(seed)
        p = Parameters(n, n, 1.0, beta, gamma, 0.0, u)
        s = State(rng.normal(1, 1, n), rng.normal(0, 3, n))
        assert hamiltonian_dissipation_rate(s, p) <= 0.0

    def test_rate_matches_gradient_of_drift(self):
        # dH/dt = grad H . f  for sigma = 0, evaluated independently of the closed form
        rng = np.random.default_rng(3)
        p = Parameters(7, 7, 1.4, 0.8, 0.6, 0.0, 0.0)
        for _ in range(50):
            s = State(rng.normal(1, 0.5, 7), rng.normal(0, 1, 7))
            f = drift(s, p)
            direct = np.dot(p.alpha**2 * s.Q, f.Q) + np.dot(s.p, f.p)
            assert hamiltonian_dissipation_rate(s, p) == pytest.approx(direct, rel=1e-12, abs=1e-12)
