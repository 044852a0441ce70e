"""Time the compiled and pure-Python Euler-Maruyama kernels on identical input.

    python3 benchmarks/bench_kernels.py --n-agents 10 --replicas 8 --steps 20000
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from phsring import kernels


def make_inputs(n_agents: int, replicas: int, steps: int, seed: int):
    rng = np.random.default_rng(seed)
    Q = np.full((replicas, n_agents), 50.1) + 0.1 * rng.standard_normal((replicas, n_agents))
    p = 0.1 * rng.standard_normal((replicas, n_agents))
    noise = rng.standard_normal((replicas, steps, n_agents))
    return Q, p, noise


def run(name: str, Q0, p0, noise, dt: float, repeat: int):
    advance = kernels.get_advance(name)
    best = float("inf")
    for _ in range(repeat):
        Q, p = Q0.copy(), p0.copy()
        q1 = np.zeros(Q.shape[0])
        violations = np.zeros(Q.shape[0], dtype=np.int64)
        t0 = time.perf_counter()
        advance(Q, p, q1, noise, 1.0, 1.0, 0.1, 0.0, dt, np.sqrt(dt), violations)
        best = min(best, time.perf_counter() - t0)
    return best, Q, p


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-agents", type=int, default=10)
    ap.add_argument("--replicas", type=int, default=8)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    Q0, p0, noise = make_inputs(args.n_agents, args.replicas, args.steps, args.seed)
    agent_steps = args.n_agents * args.replicas * args.steps
    print(f"N={args.n_agents} replicas={args.replicas} steps={args.steps} (best of {args.repeat})")
    print(f"{'kernel':<8} {'seconds':>10} {'ns/agent-step':>14} {'speedup':>8}")
    results = {}
    for name in ("python", "cython"):
        if name not in kernels.AVAILABLE:
            print(f"{name:<8} {'not built':>10}")
            continue
        results[name] = run(name, Q0, p0, noise, 1e-3, args.repeat)
    ref = results["python"][0]
    for name, (secs, _, _) in results.items():
        print(f"{name:<8} {secs:10.4f} {1e9 * secs / agent_steps:14.2f} {ref / secs:8.1f}x")
    if len(results) == 2:
        same = np.array_equal(results["python"][1], results["cython"][1]) and np.array_equal(
            results["python"][2], results["cython"][2]
        )
        print("outputs bit-identical:", same)


if __name__ == "__main__":
    main()
