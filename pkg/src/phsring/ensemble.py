"""Replica ensembles: moment estimation against the stationary law, the
mean-velocity divergence probe, and the Hamiltonian drift check.

Standard errors come from the spread of per-replica estimates, which absorbs
temporal autocorrelation without an effective-sample-size model.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .integrator import (
    SimConfig,
    initial_state,
    iterate_batch,
    mean_velocity_statistics,
    replica_seed,
    simulate_replicas,
    validate_config,
)
from .model import (
    ParameterError,
    Parameters,
    State,
    hamiltonian_expected_drift,
    validate_parameters,
)
from .stationary import stationary_v

# Batch-means blocks used for standard errors when there is a single replica.
_SINGLE_REPLICA_BATCHES = 10


@dataclass(frozen=True)
class EnsembleConfig:
    replicas: int = 1
    burn_in: float | None = None
    sample_stride: int = 1
    base_seed: int = 0
    workers: int = 1

    def resolved_burn_in(self, params: Parameters) -> float:
        """Explicit burn-in, else ten relaxation times ``10/gamma`` (zero without control)."""
        if self.burn_in is not None:
            return float(self.burn_in)
        return 10.0 / params.gamma if params.gamma > 0 else 0.0


def validate_ensemble(ens: EnsembleConfig, sim: SimConfig, params: Parameters) -> EnsembleConfig:
    if int(ens.replicas) != ens.replicas or ens.replicas < 1:
        raise ParameterError(f"replicas must be a positive integer, got {ens.replicas!r}")
    if int(ens.sample_stride) != ens.sample_stride or ens.sample_stride < 1:
        raise ParameterError(f"sample_stride must be a positive integer, got {ens.sample_stride!r}")
    if int(ens.workers) != ens.workers or ens.workers < 1:
        raise ParameterError(f"workers must be a positive integer, got {ens.workers!r}")
    burn = ens.resolved_burn_in(params)
    if burn < 0:
        raise ParameterError(f"burn_in must be >= 0, got {burn!r}")
    if burn >= sim.t_end:
        raise ParameterError(f"burn_in ({burn}) must be < t_end ({sim.t_end})")
    return ens


def _seeds(ens: EnsembleConfig) -> list[int]:
    return [replica_seed(ens.base_seed, i) for i in range(ens.replicas)]


def _blocks(seeds: list[int], workers: int) -> list[list[int]]:
    k = max(1, min(workers, len(seeds)))
    return [list(chunk) for chunk in np.array_split(np.array(seeds, dtype=np.uint64), k) if len(chunk)]


def _map_blocks(fn, seeds: list[int], workers: int) -> list:
    """Apply ``fn`` to contiguous seed blocks, returning results in replica order."""
    blocks = [[int(s) for s in b] for b in _blocks(seeds, workers)]
    if len(blocks) == 1:
        return [fn(blocks[0])]
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        return list(pool.map(fn, blocks))


@dataclass
class MomentReport:
    empirical_mean_Q: np.ndarray
    empirical_mean_p: np.ndarray
    empirical_var_Q: np.ndarray
    empirical_var_p: np.ndarray
    empirical_cov_lag: np.ndarray
    standard_errors: dict
    comparison: dict | None = None
    targets: dict | None = None
    replicas: int = 0
    samples_per_replica: int = 0
    mode: str = "raw"
    extras: dict = field(default_factory=dict)

    def fraction_within(self, z_max: float = 3.0) -> float:
        """Share of compared entries with ``|z| <= z_max``."""
        if not self.comparison:
            return float("nan")
        z = np.concatenate([np.ravel(v) for v in self.comparison.values()])
        return float(np.mean(np.abs(z) <= z_max))

    def to_dict(self) -> dict:
        def conv(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            if isinstance(x, (np.floating, np.integer)):
                return x.item()
            return x

        return {k: conv(v) for k, v in asdict(self).items()}


class MomentAccumulator:
    """Running per-replica sums of first and second moments.

    With ``centers`` given, variances and lag covariances are taken about those
    known means; otherwise about the empirical means.
    """

    def __init__(
        self,
        n_replicas: int,
        n_agents: int,
        centers: tuple[float, float] | None = None,
        shift: tuple[float, float] | None = None,
    ):
        self.R, self.N = n_replicas, n_agents
        self.centers = centers
        # offset subtracted before squaring; must be shared by accumulators that get merged
        self._shift = centers if centers is not None else shift
        self.count = 0
        self.sum_Q = np.zeros((n_replicas, n_agents))
        self.sum_p = np.zeros((n_replicas, n_agents))
        self.sum_QQ = np.zeros((n_replicas, n_agents))
        self.sum_pp = np.zeros((n_replicas, n_agents))
        self.sum_lag = np.zeros((n_replicas, n_agents))
        self._history: list[np.ndarray] | None = [] if n_replicas == 1 else None

    def update(self, Q: np.ndarray, p: np.ndarray) -> None:
        if self._shift is None:
            self._shift = (float(Q[0].mean()), float(p[0].mean()))
        dQ = Q - self._shift[0]
        dp = p - self._shift[1]
        self.count += 1
        self.sum_Q += dQ
        self.sum_p += dp
        self.sum_QQ += dQ * dQ
        self.sum_pp += dp * dp
        spec = np.fft.rfft(dp, axis=1)
        lag = np.fft.irfft(spec * spec.conj(), n=self.N, axis=1) / self.N
        self.sum_lag += lag
        if self._history is not None:
            self._history.append(np.concatenate([dQ[0], dp[0], lag[0], dQ[0] * dQ[0], dp[0] * dp[0]]))

    @staticmethod
    def merge(parts: list["MomentAccumulator"]) -> "MomentAccumulator":
        first = parts[0]
        if any(p._shift != first._shift for p in parts):
            raise ValueError("cannot merge accumulators with different centring offsets")
        out = MomentAccumulator(sum(p.R for p in parts), first.N, first.centers, first._shift)
        out.count = first.count
        for name in ("sum_Q", "sum_p", "sum_QQ", "sum_pp", "sum_lag"):
            setattr(out, name, np.concatenate([getattr(p, name) for p in parts]))
        if out.R == 1:
            out._history = first._history
        return out

    def _per_replica(self):
        """Per-replica estimates, each of shape (R, N)."""
        c = self.count
        mQ, mp = self.sum_Q / c, self.sum_p / c
        lag = self.sum_lag / c
        if self.centers is not None:
            vQ, vp = self.sum_QQ / c, self.sum_pp / c
        else:
            vQ = self.sum_QQ / c - mQ * mQ
            vp = self.sum_pp / c - mp * mp
            lag = lag - mp.mean(axis=1, keepdims=True) ** 2
        return mQ + self._shift[0], mp + self._shift[1], vQ, vp, lag

    def _single_replica_errors(self) -> list[np.ndarray]:
        h = np.array(self._history)
        nb = min(_SINGLE_REPLICA_BATCHES, h.shape[0])
        means = np.stack([b.mean(axis=0) for b in np.array_split(h, nb)])
        se = means.std(axis=0, ddof=1) / math.sqrt(nb)
        N = self.N
        return [se[0:N], se[N:2 * N], se[3 * N:4 * N], se[4 * N:5 * N], se[2 * N:3 * N]]

    def estimates(self):
        """Pooled estimates and their standard errors."""
        if self.count == 0:
            raise ValueError("no samples accumulated")
        parts = self._per_replica()
        est = [x.mean(axis=0) for x in parts]
        if self.R > 1:
            se = [x.std(axis=0, ddof=1) / math.sqrt(self.R) for x in parts]
        elif self.count > 1:
            se = self._single_replica_errors()
        else:
            se = [np.full(self.N, np.nan) for _ in parts]
        return est, se

    def report(self, targets: dict | None = None) -> MomentReport:
        (mQ, mp, vQ, vp, lag), (sQ, sp, svQ, svp, slag) = self.estimates()
        errors = {"mean_Q": sQ, "mean_p": sp, "var_Q": svQ, "var_p": svp, "cov_lag": slag}
        comparison = None
        if targets is not None:
            est = {"mean_Q": mQ, "mean_p": mp, "var_Q": vQ, "var_p": vp, "cov_lag": lag}
            comparison = {k: _z(est[k], targets[k], errors[k]) for k in targets}
        return MomentReport(
            empirical_mean_Q=mQ,
            empirical_mean_p=mp,
            empirical_var_Q=vQ,
            empirical_var_p=vp,
            empirical_cov_lag=lag,
            standard_errors=errors,
            comparison=comparison,
            targets=targets,
            replicas=self.R,
            samples_per_replica=self.count,
            mode="stationary" if targets is not None else "raw",
        )


def _z(est, target, se):
    diff = np.asarray(est) - np.asarray(target)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, diff / se, np.where(np.abs(diff) < 1e-12, 0.0, np.inf))
    return z


def stationary_targets(params: Parameters) -> dict:
    n = params.n_agents
    v = stationary_v(params)
    shift = params.sigma**2 / (2.0 * params.gamma * n)
    return {
        "mean_Q": np.full(n, params.spacing),
        "mean_p": np.full(n, params.u),
        "var_Q": np.full(n, (v[0] - shift) / params.alpha**2),
        "var_p": np.full(n, v[0]),
        "cov_lag": v,
    }


def _sample_indices(sim: SimConfig, burn_in: float, stride: int) -> tuple[int, int]:
    """First recorded index at or after ``burn_in`` and the stride."""
    step_time = sim.record_every * sim.dt
    first = int(math.ceil(burn_in / step_time - 1e-9))
    if first >= sim.n_samples:
        raise ParameterError("no recorded samples after burn-in")
    return first, stride


def run_ensemble(
    params: Parameters,
    sim: SimConfig,
    ens: EnsembleConfig,
    stationary: bool | None = None,
    kernel: str | None = None,
) -> MomentReport:
    """Empirical moments over replicas and post-burn-in samples.

    In stationary mode (default when ``gamma > 0``) the spreads are centred on
    the known stationary means ``(L/N, u)`` and each estimate gets a z-score
    against the closed-form law.
    """
    validate_parameters(params)
    validate_config(sim)
    validate_ensemble(ens, sim, params)
    if stationary is None:
        stationary = params.gamma > 0
    targets = stationary_targets(params) if stationary else None
    centers = (params.spacing, params.u) if stationary else None
    start = initial_state(params, sim)
    shift = (params.spacing, float(start.p.mean()))
    first, stride = _sample_indices(sim, ens.resolved_burn_in(params), ens.sample_stride)

    def run(block):
        acc = MomentAccumulator(len(block), params.n_agents, centers, shift)
        for snap in iterate_batch(params, sim, block, kernel=kernel):
            if snap.index >= first and (snap.index - first) % stride == 0:
                acc.update(snap.Q, snap.p)
        return acc

    acc = MomentAccumulator.merge(_map_blocks(run, _seeds(ens), ens.workers))
    report = acc.report(targets)
    report.extras["burn_in"] = ens.resolved_burn_in(params)
    return report


def _variance_slope(times: np.ndarray, var: np.ndarray) -> float:
    """Weighted least-squares slope of a variance curve that grows linearly in time.

    The sampling spread of a variance estimate at time ``t`` is proportional to
    ``t``, so points are weighted by ``1/t`` (``1/t^2`` in squared residuals);
    ``t = 0`` borrows the weight of the first positive time.
    """
    if times.size < 2:
        return float("nan")
    positive = times[times > 0]
    floor = positive[0] if positive.size else 1.0
    w = 1.0 / np.maximum(times, floor)
    return float(np.polyfit(times, var, 1, w=w)[0])


@dataclass
class DivergenceReport:
    slope: float
    expected_slope: float
    times: np.ndarray
    variance: np.ndarray

    @property
    def relative_error(self) -> float:
        if self.expected_slope == 0:
            return abs(self.slope)
        return abs(self.slope - self.expected_slope) / self.expected_slope


def divergence_probe(
    params: Parameters, sim: SimConfig, ens: EnsembleConfig, kernel: str | None = None
) -> DivergenceReport:
    """Least-squares slope of the cross-replica variance of the mean velocity.

    Without control the mean velocity is a Brownian motion, so the slope should
    be ``sigma^2 / N``.
    """
    if params.gamma != 0:
        raise ParameterError("divergence_probe applies only to the uncontrolled model (gamma = 0)")
    validate_ensemble(ens, sim, params)
    if ens.replicas < 2:
        raise ParameterError("divergence_probe needs at least two replicas")
    first, stride = _sample_indices(sim, ens.resolved_burn_in(params), ens.sample_stride)
    trajectories = []
    for part in _map_blocks(lambda b: simulate_replicas(params, sim, b, kernel=kernel), _seeds(ens), ens.workers):
        trajectories.extend(part)
    times, var = mean_velocity_statistics(trajectories)
    times, var = times[first::stride], var[first::stride]
    slope = _variance_slope(times, var)
    return DivergenceReport(
        slope=slope,
        expected_slope=params.sigma**2 / params.n_agents,
        times=times,
        variance=var,
    )


@dataclass
class HamiltonianDriftReport:
    observed: float
    predicted: float
    difference: float
    standard_error: float


def hamiltonian_drift_check(
    params: Parameters, sim: SimConfig, ens: EnsembleConfig, kernel: str | None = None
) -> HamiltonianDriftReport:
    """Compare the observed mean rate of change of H with its Ito drift.

    Over the post-burn-in window ``[t0, t1]`` the observed value is
    ``(H(t1) - H(t0)) / (t1 - t0)`` averaged over replicas; the prediction is
    the left-point time average of the drift coefficient along the same paths.
    """
    validate_ensemble(ens, sim, params)
    first, _ = _sample_indices(sim, ens.resolved_burn_in(params), 1)
    if first >= sim.n_samples - 1:
        raise ParameterError("need at least two recorded samples after burn-in")

    def run(block):
        trs = simulate_replicas(params, sim, block, kernel=kernel)
        obs, pred = [], []
        for tr in trs:
            t, H = tr.times[first:], tr.hamiltonian[first:]
            obs.append((H[-1] - H[0]) / (t[-1] - t[0]))
            rates = [hamiltonian_expected_drift(State(q, p), params) for q, p in zip(tr.Q[first:-1], tr.p[first:-1])]
            pred.append(float(np.mean(rates)))
        return np.array(obs), np.array(pred)

    parts = _map_blocks(run, _seeds(ens), ens.workers)
    obs = np.concatenate([o for o, _ in parts])
    pred = np.concatenate([p for _, p in parts])
    diff = obs - pred
    se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else float("nan")
    return HamiltonianDriftReport(
        observed=float(obs.mean()),
        predicted=float(pred.mean()),
        difference=float(diff.mean()),
        standard_error=se,
    )
