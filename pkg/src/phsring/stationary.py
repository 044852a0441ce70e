"""Stationary Gaussian law of the velocity-controlled ring (gamma > 0)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DENSE_MAX_N, ParameterError, Parameters, build_matrices


class NoStationaryDistribution(ParameterError):
    pass


def _require_control(params: Parameters) -> None:
    if not params.gamma > 0:
        raise NoStationaryDistribution(
            "no stationary distribution exists: the relaxation rate gamma must be > 0 "
            f"(got gamma={params.gamma!r}); without it the mean velocity performs a Brownian motion"
        )


def circulant(first_column) -> np.ndarray:
    """Circulant matrix with ``C[i, k] = c[(i - k) mod N]``."""
    c = np.asarray(first_column, dtype=np.float64)
    n = c.shape[0]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return c[idx]


@dataclass(frozen=True)
class StationaryCovariance:
    v: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    Sigma: np.ndarray
    mean: np.ndarray


def stationary_v(params: Parameters) -> np.ndarray:
    """First column of the stationary velocity covariance.

    ``v_j = sigma^2/(2N) sum_k cos(2 pi j k / N) / (gamma + 4 beta sin^2(pi k / N))``,
    evaluated as a real cosine sum in O(N^2).
    """
    _require_control(params)
    n = params.n_agents
    k = np.arange(n)
    denom = params.gamma + 4.0 * params.beta * np.sin(np.pi * k / n) ** 2
    out = np.empty(n)
    for lo in range(0, n, 512):
        j = k[lo:lo + 512]
        # reduce jk mod N before scaling to keep the cosine argument in [0, 2 pi)
        phase = np.outer(j, k) % n
        out[lo:lo + 512] = (np.cos(2.0 * np.pi * phase / n) / denom).sum(axis=1)
    return params.sigma**2 / (2.0 * n) * out


def stationary_covariance(params: Parameters) -> StationaryCovariance:
    _require_control(params)
    n = params.n_agents
    if n > DENSE_MAX_N:
        raise ParameterError(f"dense covariance limited to n_agents <= {DENSE_MAX_N}; use stationary_v")
    v = stationary_v(params)
    V3 = circulant(v)
    V2 = np.zeros((n, n))
    shift = params.sigma**2 / (2.0 * params.gamma * n)
    V1 = (V3 - shift) / params.alpha**2
    Sigma = np.block([[V1, V2], [V2.T, V3]])
    mean = np.concatenate([np.full(n, params.spacing), np.zeros(n)])
    return StationaryCovariance(v=v, V1=V1, V2=V2, V3=V3, Sigma=Sigma, mean=mean)


def lyapunov_residual(Sigma, params: Parameters) -> float:
    """Largest absolute entry of ``B Sigma + Sigma B^T + G G^T``."""
    Sigma = np.asarray(Sigma, dtype=np.float64)
    m = build_matrices(params)
    if Sigma.shape != m.B.shape:
        raise ValueError(f"Sigma must have shape {m.B.shape}, got {Sigma.shape}")
    BS = m.B @ Sigma
    return float(np.max(np.abs(BS + BS.T + m.G @ m.G.T)))


@dataclass(frozen=True)
class LimitCovariance:
    """Large-ring limit of ``v_j``: ``sigma^2 a^j / (2F)``."""

    F: float
    a: float
    sigma: float

    def v(self, j) -> np.ndarray | float:
        return self.sigma**2 * np.power(self.a, j) / (2.0 * self.F)


def limit_parameters(params: Parameters) -> LimitCovariance:
    _require_control(params)
    if not params.beta > 0:
        raise ParameterError("the large-N limit needs beta > 0")
    beta, gamma = params.beta, params.gamma
    F = math.sqrt(gamma * gamma + 4.0 * beta * gamma)
    # a * b = 1; dividing avoids the cancellation in 1 + gamma/2beta - F/2beta
    b = 1.0 + gamma / (2.0 * beta) + F / (2.0 * beta)
    a = 1.0 / b
    return LimitCovariance(F=F, a=a, sigma=params.sigma)


def limit_covariance(params: Parameters, j: int) -> float:
    if j < 0:
        raise ValueError(f"lag must be >= 0, got {j}")
    return float(limit_parameters(params).v(j))
