"""Closed-form spectrum of the shifted-process drift matrix.

Each block of the drift matrix is circulant, so the Fourier mode ``j`` decouples
into a 2x2 problem whose eigenvalues solve

    lambda^2 + lambda (beta mu_j + gamma) + alpha^2 mu_j = 0,
    mu_j = 2 - 2 cos(2 pi j / N).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DENSE_MAX_N, ParameterError, Parameters, build_matrices


class SpectralError(RuntimeError):
    """The dense eigensolver failed to converge."""


@dataclass(frozen=True)
class SpectralDecomposition:
    mode_factors: np.ndarray
    #: shape (N, 2); column k-1 holds lambda_{j,k}
    eigenvalues: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.eigenvalues.reshape(-1)

    def rows(self):
        """Yield ``(j, k, lambda, mu_j)`` in mode order."""
        for j, mu in enumerate(self.mode_factors):
            for k in (1, 2):
                yield j, k, complex(self.eigenvalues[j, k - 1]), float(mu)


def mode_factors(n: int) -> np.ndarray:
    if n < 3:
        raise ParameterError(f"n_agents must be >= 3, got {n}")
    j = np.arange(n)
    # fold j onto min(j, N-j) so mu_j == mu_{N-j} holds bit for bit
    j = np.minimum(j, n - j)
    return 2.0 - 2.0 * np.cos(2.0 * np.pi * j / n)


def _mode_roots(damping: np.ndarray, stiffness: np.ndarray):
    disc = damping * damping - 4.0 * stiffness
    root = np.where(disc >= 0, np.sqrt(np.abs(disc)) + 0j, 1j * np.sqrt(np.abs(disc)))
    return 0.5 * (-damping - root), 0.5 * (-damping + root)


def eigenvalues(params: Parameters) -> SpectralDecomposition:
    mu = mode_factors(params.n_agents)
    damping = params.beta * mu + params.gamma
    lam1, lam2 = _mode_roots(damping, params.alpha**2 * mu)
    ev = np.stack([lam1, lam2], axis=1)
    # the constant mode: positions have a neutral direction, velocities relax at rate gamma
    ev[0, 0] = 0.0
    ev[0, 1] = -params.gamma
    return SpectralDecomposition(mode_factors=mu, eigenvalues=ev)


def is_asymptotically_stable(params: Parameters) -> tuple[bool, float]:
    """Stability of the uniform flow in every direction except the conserved ring length.

    Returns the verdict and the largest real part over all eigenvalues other
    than the structural zero ``lambda_{0,1}``.
    """
    ev = eigenvalues(params).flat[1:]
    witness = float(np.max(ev.real))
    return witness < 0.0, witness


def dense_spectrum_oracle(params: Parameters) -> np.ndarray:
    """Eigenvalues of the materialized drift matrix by a general dense eigensolver."""
    if params.n_agents > DENSE_MAX_N:
        raise ParameterError(f"dense oracle limited to n_agents <= {DENSE_MAX_N}")
    B = build_matrices(params).B
    try:
        values = np.linalg.eigvals(B)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"dense eigensolver did not converge: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise SpectralError("dense eigensolver returned non-finite eigenvalues")
    return values


def _greedy_match(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``match[i]`` is the index in ``b`` paired with ``a[i]``, nearest pairs first."""
    d = np.abs(a[:, None] - b[None, :])
    order = np.argsort(d, axis=None, kind="stable")
    match = np.full(a.size, -1)
    used_b = np.zeros(b.size, dtype=bool)
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), b.size)
        if match[i] >= 0 or used_b[j]:
            continue
        match[i] = j
        used_b[j] = True
        matched += 1
        if matched == a.size:
            break
    return match


def _as_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.shape != b.shape:
        raise ValueError(f"multisets differ in size: {a.size} vs {b.size}")
    return a, b


def multiset_distance(a, b) -> float:
    """Largest pair distance after greedily matching nearest unmatched elements."""
    a, b = _as_pair(a, b)
    if a.size == 0:
        return 0.0
    return float(np.abs(a - b[_greedy_match(a, b)]).max())


def clustered_distance(reference, computed, radius: float = 1e-6) -> float:
    """Like :func:`multiset_distance`, but eigenvalues of ``reference`` closer
    than ``radius`` are compared through their cluster means.

    A defective multiple eigenvalue is only resolved to about ``sqrt(eps)`` by a
    dense eigensolver, while the mean of the computed cluster stays accurate to
    working precision. Isolated eigenvalues are compared one to one.
    """
    a, b = _as_pair(reference, computed)
    if a.size == 0:
        return 0.0
    b = b[_greedy_match(a, b)]
    # single-linkage clusters of the reference values
    label = np.arange(a.size)
    close = (np.abs(a[:, None] - a[None, :]) < radius) | np.eye(a.size, dtype=bool)
    changed = True
    while changed:
        new = np.where(close, label[None, :], a.size).min(axis=1)
        changed = bool(np.any(new != label))
        label = new
    worst = 0.0
    for c in np.unique(label):
        idx = label == c
        worst = max(worst, float(abs(a[idx].mean() - b[idx].mean())))
    return worst
