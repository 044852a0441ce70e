"""Model parameters, state, system matrices and Hamiltonian diagnostics.

The ring holds ``N`` agents. The state is kept in gap coordinates: ``Q[n]`` is
the distance from agent ``n`` to its right neighbour and ``p[n]`` its velocity.
All vector routines operate along the last axis, so batches of shape
``(R, N)`` are accepted wherever a single ``(N,)`` vector is.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Largest ring for which dense ``2N x 2N`` matrices are materialized.
DENSE_MAX_N = 512


class ParameterError(ValueError):
    """Raised when model or run parameters violate their domain."""


@dataclass(frozen=True)
class Parameters:
    n_agents: int
    ring_length: float
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.0
    sigma: float = 1.0
    u: float = 0.0

    @property
    def spacing(self) -> float:
        """Uniform equilibrium gap ``L / N``."""
        return self.ring_length / self.n_agents

    def replace(self, **changes) -> "Parameters":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update(changes)
        return validate_parameters(Parameters(**values))


@dataclass
class State:
    Q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.Q = np.array(self.Q, dtype=np.float64)
        self.p = np.array(self.p, dtype=np.float64)
        if self.Q.shape != self.p.shape or self.Q.ndim != 1:
            raise ValueError(
                f"Q and p must be 1-D vectors of equal length, got {self.Q.shape} and {self.p.shape}"
            )

    @property
    def n_agents(self) -> int:
        return self.Q.shape[0]

    def as_vector(self) -> np.ndarray:
        """Stacked ``(Q, p)`` vector of length ``2N``."""
        return np.concatenate([self.Q, self.p])


@dataclass(frozen=True)
class SystemMatrices:
    A: np.ndarray
    AtA: np.ndarray
    J: np.ndarray
    R: np.ndarray
    B: np.ndarray
    S: np.ndarray
    G: np.ndarray
    extras: dict = field(default_factory=dict, compare=False)


def validate_parameters(raw: Parameters) -> Parameters:
    """Return ``raw`` unchanged if it lies in the model's domain, else raise."""
    n = raw.n_agents
    if isinstance(n, bool) or int(n) != n:
        raise ParameterError(f"n_agents must be an integer, got {n!r}")
    if n < 3:
        raise ParameterError(f"n_agents must be >= 3, got {n}")
    checks = [
        ("ring_length", raw.ring_length, lambda x: x > 0, "> 0"),
        ("alpha", raw.alpha, lambda x: x > 0, "> 0"),
        ("beta", raw.beta, lambda x: x >= 0, ">= 0"),
        ("gamma", raw.gamma, lambda x: x >= 0, ">= 0"),
        ("sigma", raw.sigma, lambda x: x >= 0, ">= 0"),
    ]
    for name, value, ok, rule in checks:
        if not np.isfinite(value) or not ok(value):
            raise ParameterError(f"{name} must be finite and {rule}, got {value!r}")
    if not np.isfinite(raw.u):
        raise ParameterError(f"u must be finite, got {raw.u!r}")
    return raw


def distances_from_positions(q, L: float) -> np.ndarray:
    """Gaps to the right neighbour for ordered positions ``q`` on a ring of length ``L``."""
    q = np.asarray(q, dtype=np.float64)
    Q = np.empty_like(q)
    Q[:-1] = q[1:] - q[:-1]
    Q[-1] = L + q[0] - q[-1]
    if np.any(Q < 0):
        raise ValueError("positions must satisfy 0 <= q_1 <= ... <= q_N <= L")
    return Q


def potential(x, alpha: float):
    """Quadratic interaction potential ``(alpha x)^2 / 2``."""
    return 0.5 * (alpha * x) ** 2


def potential_derivative(x, alpha: float):
    return alpha * alpha * x


# Matrix-free operators. A is the circulant forward difference (Ap)_n = p_{n+1} - p_n.

def apply_A(x: np.ndarray) -> np.ndarray:
    return np.roll(x, -1, axis=-1) - x


def apply_At(x: np.ndarray) -> np.ndarray:
    return np.roll(x, 1, axis=-1) - x


def apply_AtA(x: np.ndarray) -> np.ndarray:
    return 2.0 * x - np.roll(x, 1, axis=-1) - np.roll(x, -1, axis=-1)


def difference_matrix(n: int) -> np.ndarray:
    A = -np.eye(n) + np.eye(n, k=1)
    A[n - 1, 0] = 1.0
    return A


def build_matrices(params: Parameters) -> SystemMatrices:
    """Dense port-Hamiltonian matrices and the drift matrix of the shifted process."""
    n = params.n_agents
    if n > DENSE_MAX_N:
        raise ParameterError(
            f"dense matrices are limited to n_agents <= {DENSE_MAX_N}; use the apply_* operators"
        )
    A = difference_matrix(n)
    AtA = A.T @ A
    I = np.eye(n)
    Z = np.zeros((n, n))
    damping = params.beta * AtA + params.gamma * I

    J = np.block([[Z, A], [-A.T, Z]])
    R = np.block([[Z, Z], [Z, damping]])
    B = np.block([[Z, A], [-params.alpha**2 * A.T, -damping]])
    S = np.concatenate([np.zeros(n), np.full(n, params.gamma)])
    G = np.vstack([Z, params.sigma * I])
    return SystemMatrices(A=A, AtA=AtA, J=J, R=R, B=B, S=S, G=G)


def _check_dims(state: State, params: Parameters) -> None:
    if state.n_agents != params.n_agents:
        raise ValueError(
            f"state has {state.n_agents} agents but parameters specify {params.n_agents}"
        )


def drift_arrays(Q: np.ndarray, p: np.ndarray, params: Parameters):
    """Componentwise drift ``(dQ/dt, dp/dt)``; accepts batched arrays.

    The expression order here is mirrored exactly by both stepping kernels.
    """
    a2 = params.alpha * params.alpha
    p_right = np.roll(p, -1, axis=-1)
    p_left = np.roll(p, 1, axis=-1)
    Q_left = np.roll(Q, 1, axis=-1)
    dQ = p_right - p
    dp = (
        (a2 * Q - a2 * Q_left)
        + params.beta * ((p_right - 2.0 * p) + p_left)
        + params.gamma * (params.u - p)
    )
    return dQ, dp


def drift(state: State, params: Parameters) -> State:
    """Deterministic part of the dynamics, returned as a ``State`` of time derivatives."""
    _check_dims(state, params)
    dQ, dp = drift_arrays(state.Q, state.p, params)
    return State(dQ, dp)


def gradient_hamiltonian(state: State, params: Parameters) -> np.ndarray:
    return np.concatenate([potential_derivative(state.Q, params.alpha), state.p])


def drift_matrix_form(state: State, params: Parameters, matrices: SystemMatrices | None = None) -> State:
    """Drift as ``(J - R) grad H + S u``; independent route used to cross-check :func:`drift`."""
    _check_dims(state, params)
    m = matrices if matrices is not None else build_matrices(params)
    out = (m.J - m.R) @ gradient_hamiltonian(state, params) + m.S * params.u
    n = params.n_agents
    return State(out[:n], out[n:])


def hamiltonian_arrays(Q: np.ndarray, p: np.ndarray, alpha: float) -> np.ndarray:
    return 0.5 * np.sum(p * p, axis=-1) + np.sum(potential(Q, alpha), axis=-1)


def hamiltonian(state: State, params: Parameters) -> float:
    """Kinetic plus interaction energy."""
    return float(hamiltonian_arrays(state.Q, state.p, params.alpha))


def hamiltonian_dissipation_rate(state: State, params: Parameters) -> float:
    """dH/dt of the noise-free system, measured relative to the target velocity ``u``."""
    pt = state.p - params.u
    Ap = apply_A(pt)
    return float(-params.beta * np.dot(Ap, Ap) - params.gamma * np.dot(pt, pt))


def hamiltonian_expected_drift(state: State, params: Parameters) -> float:
    """Coefficient of ``dt`` in the Ito differential of ``H``."""
    p = state.p
    Ap = apply_A(p)
    return float(
        -params.beta * np.dot(Ap, Ap)
        + params.gamma * np.dot(p, params.u - p)
        + 0.5 * params.n_agents * params.sigma**2
    )


def uniform_state(params: Parameters, velocity: float = 0.0) -> State:
    n = params.n_agents
    return State(np.full(n, params.spacing), np.full(n, float(velocity)))
