"""Flat ``key = value`` run configuration and run manifests."""
from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass

from . import __version__
from .ensemble import EnsembleConfig
from .integrator import SimConfig, validate_config
from .model import ParameterError, Parameters, State, validate_parameters


class ConfigError(ParameterError):
    """Malformed configuration text."""


def _int(text: str) -> int:
    value = float(text) if any(c in text for c in ".eE") else int(text, 0)
    if int(value) != value:
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


#: key -> (section, converter, default). ``None`` default means required.
KEYS = {
    "n_agents": ("params", _int, None),
    "ring_length": ("params", float, None),
    "alpha": ("params", float, 1.0),
    "beta": ("params", float, 1.0),
    "gamma": ("params", float, 0.0),
    "sigma": ("params", float, 1.0),
    "u": ("params", float, 0.0),
    "dt": ("sim", float, 0.001),
    "t_end": ("sim", float, 500.0),
    "seed": ("sim", _int, 0),
    "record_every": ("sim", _int, 100),
    "initial_condition": ("sim", str, "uniform_rest"),
    "initial_Q": ("explicit", _floats, None),
    "initial_p": ("explicit", _floats, None),
    "replicas": ("ens", _int, 1),
    "burn_in": ("ens", float, None),
    "sample_stride": ("ens", _int, 1),
    "base_seed": ("ens", _int, None),
    "workers": ("ens", _int, 1),
}

_OPTIONAL_NONE = {"burn_in", "base_seed", "initial_Q", "initial_p"}


@dataclass(frozen=True)
class RunConfig:
    params: Parameters
    sim: SimConfig
    ens: EnsembleConfig

    def as_dict(self) -> dict:
        """Flat mapping of every resolved key; feeds the manifest."""
        p, s, e = self.params, self.sim, self.ens
        out = {
            "n_agents": p.n_agents,
            "ring_length": p.ring_length,
            "alpha": p.alpha,
            "beta": p.beta,
            "gamma": p.gamma,
            "sigma": p.sigma,
            "u": p.u,
            "dt": s.dt,
            "t_end": s.t_end,
            "seed": s.seed,
            "record_every": s.record_every,
            "replicas": e.replicas,
            "burn_in": e.resolved_burn_in(p),
            "sample_stride": e.sample_stride,
            "base_seed": e.base_seed,
            "workers": e.workers,
        }
        ic = s.initial_condition
        if isinstance(ic, State):
            out["initial_condition"] = "explicit"
            out["initial_Q"] = ic.Q.tolist()
            out["initial_p"] = ic.p.tolist()
        else:
            out["initial_condition"] = ic
        return out


def parse_lines(text: str) -> dict:
    """Raw ``key -> (line number, string)`` mapping; rejects unknown and duplicate keys."""
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = (lineno, value)
    return raw


def from_mapping(values: dict) -> RunConfig:
    """Build and validate a run configuration from already-typed values."""
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    resolved = {}
    for key, (_, conv, default) in KEYS.items():
        if key in values and values[key] is not None:
            resolved[key] = values[key]
        elif default is None and key not in _OPTIONAL_NONE:
            raise ConfigError(f"missing required key {key!r}")
        else:
            resolved[key] = default

    params = validate_parameters(Parameters(**{k: resolved[k] for k, v in KEYS.items() if v[0] == "params"}))

    ic = resolved["initial_condition"]
    if ic == "explicit":
        if resolved["initial_Q"] is None or resolved["initial_p"] is None:
            raise ConfigError("initial_condition = explicit needs initial_Q and initial_p")
        ic = State(resolved["initial_Q"], resolved["initial_p"])
    elif resolved["initial_Q"] is not None or resolved["initial_p"] is not None:
        raise ConfigError("initial_Q/initial_p are only valid with initial_condition = explicit")
    sim = validate_config(
        SimConfig(
            dt=resolved["dt"],
            t_end=resolved["t_end"],
            seed=resolved["seed"],
            record_every=resolved["record_every"],
            initial_condition=ic,
        )
    )
    base_seed = resolved["base_seed"] if resolved["base_seed"] is not None else sim.seed
    ens = EnsembleConfig(
        replicas=resolved["replicas"],
        burn_in=resolved["burn_in"],
        sample_stride=resolved["sample_stride"],
        base_seed=base_seed,
        workers=resolved["workers"],
    )
    return RunConfig(params, sim, ens)


def parse_config(text: str) -> RunConfig:
    """Parse a flat config file, or the ``config`` block of a run manifest (JSON)."""
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}: invalid manifest JSON: {exc.msg}") from exc
        return from_mapping(dict(doc["config"]))
    raw = parse_lines(text)
    typed = {}
    for key, (lineno, value) in raw.items():
        conv = KEYS[key][1]
        try:
            typed[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return from_mapping(typed)


def manifest(run: RunConfig, command: str, extra: dict | None = None) -> dict:
    from . import kernels

    doc = {
        "tool": "phsring",
        "version": __version__,
        "command": command,
        "kernel": kernels.BACKEND,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": run.as_dict(),
    }
    if extra:
        doc.update(extra)
    return doc
