"""Command-line entry point: ``phsring <command> --config FILE --out DIR``.

Exit codes: 0 success, 2 configuration error, 3 numerical check failed.
Outputs are staged in a temporary directory and only moved into ``--out``
when the command finishes without error.
"""
from __future__ import annotations

import argparse
import logging
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, from_mapping, manifest, parse_config
from .ensemble import divergence_probe, run_ensemble
from .integrator import simulate
from .model import DENSE_MAX_N, ParameterError
from .serialize import fmt, write_json, write_matrix, write_rows, write_trajectory_csv
from .spectral import clustered_distance, dense_spectrum_oracle, eigenvalues, is_asymptotically_stable
from .stationary import limit_parameters, lyapunov_residual, stationary_covariance

log = logging.getLogger("phsring")

EXIT_CONFIG = 2
EXIT_CHECK = 3

SPECTRUM_TOL = 1e-8
LYAPUNOV_TOL = 1e-9
DIVERGENCE_TOL = 0.15
Z_LIMIT = 3.0
Z_FRACTION = 0.95


class CheckFailed(RuntimeError):
    """A numerical self-check did not meet its tolerance."""


def _limit_column(run: RunConfig, n: int):
    p = run.params
    if not (p.beta > 0 and p.gamma > 0):
        return [None] * n
    lim = limit_parameters(p)
    return [lim.v(j) for j in range(n)]


def cmd_simulate(run: RunConfig, out: Path) -> dict:
    tr = simulate(run.params, run.sim)
    write_trajectory_csv(out / "trajectory.csv", tr)
    write_rows(out / "q1_unwrapped.csv", ["t", "q1"], zip(tr.times, tr.q1))
    return {
        "samples": len(tr),
        "ordering_violations": tr.ordering_violations,
        "final_mean_velocity": float(tr.mean_velocity[-1]),
    }


def _spectrum_summary(run: RunConfig) -> dict:
    p = run.params
    spec = eigenvalues(p)
    stable, witness = is_asymptotically_stable(p)
    summary = {
        "verdict": "stable" if stable else "not asymptotically stable",
        "max_real_part_nonzero_modes": witness,
        "spectrum": spec,
    }
    if p.n_agents <= DENSE_MAX_N:
        summary["oracle_distance"] = clustered_distance(spec.flat, dense_spectrum_oracle(p))
    return summary


def cmd_spectrum(run: RunConfig, out: Path) -> dict:
    s = _spectrum_summary(run)
    spec = s.pop("spectrum")
    write_rows(
        out / "spectrum.csv",
        ["j", "k", "re", "im", "mu_j"],
        ((j, k, lam.real, lam.imag, mu) for j, k, lam, mu in spec.rows()),
    )
    dist = s.get("oracle_distance")
    if dist is not None and not dist <= SPECTRUM_TOL:
        s["check_failed"] = f"dense oracle distance {dist:.3g} exceeds {SPECTRUM_TOL:g}"
    return s


def cmd_covariance(run: RunConfig, out: Path) -> dict:
    p = run.params
    cov = stationary_covariance(p)
    n = p.n_agents
    write_rows(out / "v.csv", ["j", "v_j", "limit_j"], zip(range(n), cov.v, _limit_column(run, n)))
    write_matrix(out / "sigma.csv", cov.Sigma)
    res = lyapunov_residual(cov.Sigma, p)
    s = {"lyapunov_residual": res, "sum_v": float(cov.v.sum()), "target_sum_v": p.sigma**2 / (2 * p.gamma)}
    if res > LYAPUNOV_TOL * p.sigma**2:
        s["check_failed"] = f"Lyapunov residual {res:.3g} exceeds {LYAPUNOV_TOL:g}*sigma^2"
    return s


def cmd_validate(run: RunConfig, out: Path) -> dict:
    p = run.params
    if p.gamma > 0:
        report = run_ensemble(p, run.sim, run.ens)
        doc = report.to_dict()
        frac = report.fraction_within(Z_LIMIT)
        doc["fraction_within_3se"] = frac
        doc["passed"] = bool(frac >= Z_FRACTION)
        write_json(out / "moment_report.json", doc)
        s = {"mode": "stationary", "fraction_within_3se": frac}
        if not doc["passed"]:
            s["check_failed"] = f"only {frac:.1%} of z-scores within +-{Z_LIMIT:g}"
        return s
    rep = divergence_probe(p, run.sim, run.ens)
    passed = rep.relative_error <= DIVERGENCE_TOL
    doc = {
        "mode": "divergence",
        "slope": rep.slope,
        "expected_slope": rep.expected_slope,
        "relative_error": rep.relative_error,
        "passed": passed,
        "times": rep.times,
        "variance": rep.variance,
    }
    write_json(out / "moment_report.json", doc)
    s = {"mode": "divergence", "slope": rep.slope, "expected_slope": rep.expected_slope}
    if not passed:
        s["check_failed"] = f"slope {rep.slope:.4g} is not within {DIVERGENCE_TOL:.0%} of {rep.expected_slope:.4g}"
    return s


def parse_grid(spec: str):
    """``name=start:stop:step`` (stop inclusive) or ``name=v1,v2,...``."""
    name, sep, rng = spec.partition("=")
    if not sep:
        raise ConfigError(f"--vary expects name=start:stop:step, got {spec!r}")
    name = name.strip()
    if ":" in rng:
        try:
            start, stop, step = (float(x) for x in rng.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {rng!r}") from None
        if step <= 0 or stop < start:
            raise ConfigError(f"bad grid {rng!r}: need step > 0 and stop >= start")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        values = [start + i * step for i in range(count)]
    else:
        values = [float(x) for x in rng.split(",") if x.strip()]
    return name, values


SWEEP_KEYS = ("n_agents", "ring_length", "alpha", "beta", "gamma", "sigma", "u")


def cmd_sweep(run: RunConfig, out: Path, vary: str) -> dict:
    name, values = parse_grid(vary)
    if name not in SWEEP_KEYS:
        raise ConfigError(f"cannot vary {name!r}; choose from {SWEEP_KEYS}")
    header = [name, "verdict", "max_real_part_nonzero_modes", "oracle_distance", "v_0", "limit_0", "lyapunov_residual"]
    rows, failures = [], []
    base = run.as_dict()
    for value in values:
        point = dict(base, **{name: int(round(value)) if name == "n_agents" else value})
        sub = from_mapping(point)
        s = _spectrum_summary(sub)
        row = [value, s["verdict"], s["max_real_part_nonzero_modes"], s.get("oracle_distance"), None, None, None]
        if s.get("oracle_distance") is not None and s["oracle_distance"] > SPECTRUM_TOL:
            failures.append(f"{name}={value}: spectrum oracle distance {s['oracle_distance']:.3g}")
        if sub.params.gamma > 0:
            if sub.params.n_agents <= DENSE_MAX_N:
                cov = stationary_covariance(sub.params)
                res = lyapunov_residual(cov.Sigma, sub.params)
                row[4], row[6] = cov.v[0], res
                if res > LYAPUNOV_TOL * sub.params.sigma**2:
                    failures.append(f"{name}={value}: Lyapunov residual {res:.3g}")
            row[5] = _limit_column(sub, 1)[0]
        rows.append(row)
    write_rows(out / "sweep.csv", header, rows)
    s = {"grid_points": len(values), "parameter": name}
    if failures:
        s["check_failed"] = "; ".join(failures)
    return s


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phsring", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate": "integrate one trajectory and write trajectory.csv",
        "spectrum": "closed-form eigenvalues, stability verdict and dense cross-check",
        "covariance": "stationary covariance, Lyapunov residual and large-N limit",
        "validate": "Monte-Carlo check of the stationary moments (gamma>0) or divergence law (gamma=0)",
        "sweep": "repeat spectrum/covariance over a parameter grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="key = value file or a manifest.json")
        p.add_argument("--out", required=True, type=Path, help="output directory")
        if name == "sweep":
            p.add_argument("--vary", required=True, help="e.g. gamma=0:2:0.1 (inclusive) or gamma=0.1,1")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "covariance": cmd_covariance,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    staging = Path(tempfile.mkdtemp(prefix=".phsring-"))
    try:
        try:
            run = parse_config(args.config.read_text(encoding="utf-8"))
            if args.command == "sweep":
                summary = cmd_sweep(run, staging, args.vary)
            else:
                summary = COMMANDS[args.command](run, staging)
        except (ConfigError, ParameterError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        failed = summary.pop("check_failed", None)
        if failed:
            print(f"check failed: {failed}", file=sys.stderr)
            return EXIT_CHECK
        write_json(staging / "manifest.json", manifest(run, args.command, {"summary": summary}))
        args.out.mkdir(parents=True, exist_ok=True)
        for f in sorted(staging.iterdir()):
            shutil.move(str(f), str(args.out / f.name))
        for key, value in summary.items():
            print(f"{key}: {value if isinstance(value, str) else fmt(value) if isinstance(value, float) else value}")
        return 0
    finally:
        shutil.rmtree(staging, ignore_errors=True)


if __name__ == "__main__":
    sys.exit(main())
