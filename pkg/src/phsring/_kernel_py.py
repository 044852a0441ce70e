"""Pure numpy Euler-Maruyama stepping, vectorized over replicas."""
from __future__ import annotations

import numpy as np


def advance(Q, p, q1, noise, alpha2, beta, gamma, u, dt, noise_scale, violations):
    """Advance a batch of replicas in place by ``noise.shape[1]`` steps.

    Parameters
    ----------
    Q, p : ndarray, shape (R, N)
        Gaps and velocities, updated in place.
    q1 : ndarray, shape (R,)
        Unwrapped position of agent 1, updated in place.
    noise : ndarray, shape (R, K, N)
        Standard normal draws; row ``k`` drives step ``k``. Ignored when
        ``noise_scale == 0``.
    violations : ndarray of int64, shape (R,)
        Incremented once per step in which some gap is negative.
    """
    n_steps = noise.shape[1]
    use_noise = noise_scale != 0.0
    for s in range(n_steps):
        p_right = np.roll(p, -1, axis=1)
        p_left = np.roll(p, 1, axis=1)
        Q_left = np.roll(Q, 1, axis=1)
        dQ = p_right - p
        dp = (alpha2 * Q - alpha2 * Q_left) + beta * ((p_right - 2.0 * p) + p_left) + gamma * (u - p)
        q1 += p[:, 0] * dt
        Q += dQ * dt
        if use_noise:
            p[...] = (p + dp * dt) + noise_scale * noise[:, s, :]
        else:
            p[...] = p + dp * dt
        violations += (Q < 0.0).any(axis=1)
