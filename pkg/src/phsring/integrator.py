"""Euler-Maruyama integration of the ring dynamics and trajectory recording."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from . import kernels
from .model import (
    ParameterError,
    Parameters,
    State,
    drift_arrays,
    hamiltonian_arrays,
    validate_parameters,
)

# Largest mode factor 2 - 2cos(2 pi j / N); bounds the stiffness of the damping block.
MAX_MODE_FACTOR = 4.0

# Cap on noise draws held in memory per replica at once.
_NOISE_BLOCK = 1 << 18

InitialCondition = Union[str, State]


class StabilityWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.001
    t_end: float = 500.0
    seed: int = 0
    record_every: int = 100
    initial_condition: InitialCondition = "uniform_rest"

    @property
    def n_steps(self) -> int:
        # tolerate t_end/dt landing a hair below an integer
        return int(math.floor(self.t_end / self.dt + 1e-9))

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.record_every + 1


def validate_config(config: SimConfig) -> SimConfig:
    if not (config.dt > 0 and math.isfinite(config.dt)):
        raise ParameterError(f"dt must be positive, got {config.dt!r}")
    if not (math.isfinite(config.t_end) and config.t_end >= config.dt):
        raise ParameterError(f"t_end must be >= dt, got {config.t_end!r}")
    if int(config.record_every) != config.record_every or config.record_every < 1:
        raise ParameterError(f"record_every must be a positive integer, got {config.record_every!r}")
    check_seed(config.seed)
    ic = config.initial_condition
    if isinstance(ic, str) and ic not in ("uniform_rest", "uniform_speed"):
        raise ParameterError(f"unknown initial_condition {ic!r}")
    return config


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed < 2**64:
        raise ParameterError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def replica_seed(base_seed: int, index: int) -> int:
    """Seed of replica ``index``: ``base_seed XOR index``."""
    return check_seed(base_seed) ^ int(index)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream for one replica."""
    return np.random.Generator(np.random.Philox(check_seed(seed)))


def initial_state(params: Parameters, config: SimConfig) -> State:
    ic = config.initial_condition
    n = params.n_agents
    if isinstance(ic, State):
        if ic.n_agents != n:
            raise ParameterError(f"explicit initial state has {ic.n_agents} agents, expected {n}")
        return State(ic.Q.copy(), ic.p.copy())
    velocity = params.u if ic == "uniform_speed" else 0.0
    return State(np.full(n, params.spacing), np.full(n, velocity))


def check_step_stability(params: Parameters, dt: float) -> None:
    """Warn when the explicit step is too coarse for the damping block."""
    stiffness = dt * (params.beta * MAX_MODE_FACTOR + params.gamma)
    if stiffness > 1.0:
        warnings.warn(
            f"dt*(4*beta + gamma) = {stiffness:.3g} > 1; explicit Euler steps may be unstable",
            StabilityWarning,
            stacklevel=3,
        )


def em_step(state: State, params: Parameters, dt: float, noise) -> State:
    """One Euler-Maruyama step driven by ``N`` standard normal draws."""
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != state.Q.shape:
        raise ValueError(f"noise must have shape {state.Q.shape}, got {noise.shape}")
    dQ, dp = drift_arrays(state.Q, state.p, params)
    scale = params.sigma * math.sqrt(dt)
    return State(state.Q + dQ * dt, (state.p + dp * dt) + scale * noise)


@dataclass
class Trajectory:
    """Recorded samples of one run.

    ``Q`` and ``p`` have shape ``(K, N)``; ``q1`` is the unwrapped position of
    agent 1, and absolute positions are rebuilt from it by cumulative sums.
    """

    times: np.ndarray
    Q: np.ndarray
    p: np.ndarray
    q1: np.ndarray
    hamiltonian: np.ndarray
    mean_velocity: np.ndarray
    ring_length: float
    ordering_violations: int = 0

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def states(self) -> list[State]:
        return [State(q, p) for q, p in zip(self.Q, self.p)]

    def positions(self, wrap: bool = True) -> np.ndarray:
        q = np.empty_like(self.Q)
        q[:, 0] = self.q1
        q[:, 1:] = self.q1[:, None] + np.cumsum(self.Q[:, :-1], axis=1)
        return np.mod(q, self.ring_length) if wrap else q


@dataclass
class Snapshot:
    """Batched state at a recorded instant; arrays are live views, copy to keep."""

    index: int
    time: float
    Q: np.ndarray
    p: np.ndarray
    q1: np.ndarray
    violations: np.ndarray


def iterate_batch(
    params: Parameters,
    config: SimConfig,
    seeds: Sequence[int],
    kernel: str | None = None,
) -> Iterator[Snapshot]:
    """Run replicas with the given seeds in lockstep, yielding every recorded instant.

    Replica ``r`` uses only its own RNG stream, drawing ``N`` normals per step in
    agent order, so results do not depend on how replicas are batched.
    """
    validate_parameters(params)
    validate_config(config)
    check_step_stability(params, config.dt)
    advance = kernels.get_advance(kernel)

    start = initial_state(params, config)
    R, N = len(seeds), params.n_agents
    Q = np.ascontiguousarray(np.tile(start.Q, (R, 1)))
    p = np.ascontiguousarray(np.tile(start.p, (R, 1)))
    q1 = np.zeros(R)
    violations = np.zeros(R, dtype=np.int64)
    rngs = [make_rng(s) for s in seeds]

    dt = float(config.dt)
    scale = params.sigma * math.sqrt(dt)
    alpha2 = params.alpha * params.alpha
    block = max(1, _NOISE_BLOCK // N)

    yield Snapshot(0, 0.0, Q, p, q1, violations)
    for k in range(1, config.n_samples):
        remaining = config.record_every
        while remaining:
            steps = min(block, remaining)
            if scale != 0.0:
                noise = np.empty((R, steps, N))
                for r, rng in enumerate(rngs):
                    rng.standard_normal(out=noise[r])
            else:
                noise = np.empty((R, steps, 0))
            advance(Q, p, q1, noise, alpha2, params.beta, params.gamma, params.u, dt, scale, violations)
            remaining -= steps
        yield Snapshot(k, k * config.record_every * dt, Q, p, q1, violations)


def simulate_replicas(
    params: Parameters,
    config: SimConfig,
    seeds: Sequence[int],
    kernel: str | None = None,
) -> list[Trajectory]:
    """Full trajectories for a batch of replicas (one per seed)."""
    validate_config(config)
    K, R, N = config.n_samples, len(seeds), params.n_agents
    times = np.empty(K)
    Qs = np.empty((R, K, N))
    ps = np.empty((R, K, N))
    q1s = np.empty((R, K))
    violations = np.zeros(R, dtype=np.int64)
    for snap in iterate_batch(params, config, seeds, kernel=kernel):
        times[snap.index] = snap.time
        Qs[:, snap.index] = snap.Q
        ps[:, snap.index] = snap.p
        q1s[:, snap.index] = snap.q1
        violations = snap.violations
    H = hamiltonian_arrays(Qs, ps, params.alpha)
    pbar = ps.mean(axis=-1)
    return [
        Trajectory(
            times=times.copy(),
            Q=Qs[r],
            p=ps[r],
            q1=q1s[r],
            hamiltonian=H[r],
            mean_velocity=pbar[r],
            ring_length=params.ring_length,
            ordering_violations=int(violations[r]),
        )
        for r in range(R)
    ]


def simulate(params: Parameters, config: SimConfig, kernel: str | None = None) -> Trajectory:
    """Single run seeded with ``config.seed``."""
    return simulate_replicas(params, config, [config.seed], kernel=kernel)[0]


def mean_velocity_statistics(trajectories: Sequence[Trajectory]):
    """Cross-replica variance of the mean velocity at each recorded time.

    Returns ``(times, variance)`` with the unbiased (``ddof=1``) estimator.
    """
    if len(trajectories) < 2:
        raise ValueError("need at least two replicas")
    times = trajectories[0].times
    for tr in trajectories[1:]:
        if tr.times.shape != times.shape or not np.array_equal(tr.times, times):
            raise ValueError("replicas were recorded on different time grids")
    pbar = np.stack([tr.mean_velocity for tr in trajectories])
    return times.copy(), pbar.var(axis=0, ddof=1)
