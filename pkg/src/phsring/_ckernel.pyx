# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Euler-Maruyama stepping; same contract as ``_kernel_py.advance``."""

import numpy as np


cdef void _step_replica(double[::1] Q, double[::1] p, double* q1,
                        const double[:, ::1] noise, long long* violations,
                        double[::1] dQ, double[::1] dp,
                        double alpha2, double beta, double gamma, double u,
                        double dt, double noise_scale, bint use_noise) noexcept nogil:
    cdef Py_ssize_t N = Q.shape[0]
    cdef Py_ssize_t K = noise.shape[0]
    cdef Py_ssize_t s, n, nr, nl
    cdef bint negative
    for s in range(K):
        for n in range(N):
            nr = n + 1 if n + 1 < N else 0
            nl = n - 1 if n > 0 else N - 1
            dQ[n] = p[nr] - p[n]
            dp[n] = ((alpha2 * Q[n] - alpha2 * Q[nl])
                     + beta * ((p[nr] - 2.0 * p[n]) + p[nl])
                     + gamma * (u - p[n]))
        q1[0] = q1[0] + p[0] * dt
        negative = False
        for n in range(N):
            Q[n] = Q[n] + dQ[n] * dt
            if use_noise:
                p[n] = (p[n] + dp[n] * dt) + noise_scale * noise[s, n]
            else:
                p[n] = p[n] + dp[n] * dt
            if Q[n] < 0.0:
                negative = True
        if negative:
            violations[0] += 1


def advance(double[:, ::1] Q, double[:, ::1] p, double[::1] q1,
            const double[:, :, ::1] noise, double alpha2, double beta,
            double gamma, double u, double dt, double noise_scale,
            long long[::1] violations):
    cdef Py_ssize_t R = Q.shape[0]
    cdef Py_ssize_t N = Q.shape[1]
    cdef Py_ssize_t r
    cdef bint use_noise = noise_scale != 0.0
    if p.shape[0] != R or p.shape[1] != N or q1.shape[0] != R or violations.shape[0] != R:
        raise ValueError("state arrays have inconsistent shapes")
    if noise.shape[0] != R or (use_noise and noise.shape[2] != N):
        raise ValueError("noise must have shape (R, K, N)")
    cdef double[:, ::1] dQ = np.empty((R, N))
    cdef double[:, ::1] dp = np.empty((R, N))
    with nogil:
        for r in range(R):
            _step_replica(Q[r], p[r], &q1[r], noise[r], &violations[r],
                          dQ[r], dp[r], alpha2, beta, gamma, u, dt,
                          noise_scale, use_noise)
