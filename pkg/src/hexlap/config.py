"""Run configuration: one YAML (or JSON) file, validated field by field."""
from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .hypotheses import KINDS, ProfileSpec

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class RunConfig:
    # truncation box for spectra and Mourre checks
    N: int = 32
    bc: str = "periodic"
    # momentum grid for symbol-side minimizations
    M: int = 512
    # profiles; None means the trivial metric / zero potential
    eta: Optional[ProfileSpec] = None
    V: Optional[ProfileSpec] = None
    eps_factor: float = 0.5
    intervals: list = field(default_factory=lambda: [[0.5, 0.9]])
    # LAP sweep
    s: float = 0.6
    lap_N: int = 48
    lambdas: list = field(default_factory=lambda: [0.5, 0.6, 0.7, 1 / 3 - 0.01, 1 / 3 + 0.01])
    rho_start: float = 0.1
    rho_points: int = 6
    # dynamics
    evolve_N: int = 96
    horizon: float = 200.0
    dt: float = 0.5
    decay_horizon: float = 80.0
    # hypotheses
    R: int = 64
    gamma: float = 0.5
    output: str = "hexlap-out"
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eta"] = self.eta.to_dict() if self.eta else None
        d["V"] = self.V.to_dict() if self.V else None
        return d

    @property
    def perturbed(self) -> bool:
        return self.eta is not None or self.V is not None


def _num(raw: dict, key: str, cast, default, *, section="", positive=False, minimum=None):
    name = f"{section}.{key}" if section else key
    if key not in raw or raw[key] is None:
        return default
    if isinstance(raw[key], bool):
        raise ConfigError(name, f"expected {cast.__name__}, got {raw[key]!r}")
    try:
        v = cast(raw[key])
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected {cast.__name__}, got {raw[key]!r}") from None
    if positive and v <= 0:
        raise ConfigError(name, f"must be positive, got {v}")
    if minimum is not None and v < minimum:
        raise ConfigError(name, f"must be at least {minimum}, got {v}")
    return v


def _profile(raw, name: str) -> Optional[ProfileSpec]:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError(name, "expected a mapping {kind, a, delta, gamma, seed}")
    unknown = set(raw) - {"kind", "a", "delta", "gamma", "seed", "frequency"}
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}", "unknown profile field")
    if raw.get("kind") not in KINDS:
        raise ConfigError(f"{name}.kind", f"expected one of {list(KINDS)}, got {raw.get('kind')!r}")
    for key in ("a", "delta"):
        if key not in raw:
            raise ConfigError(f"{name}.{key}", "missing")
    try:
        spec = ProfileSpec.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from None
    if spec.kind == "PowerLaw" and spec.a <= -1:
        raise ConfigError(f"{name}.a", "amplitude must exceed -1 so that 1 + eta stays positive")
    return spec


def _floats(raw, where: str) -> list:
    try:
        return [float(x) for x in raw]
    except (TypeError, ValueError):
        raise ConfigError(where, f"expected a list of numbers, got {raw!r}") from None


def _interval(raw, where: str) -> list:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 2):
        raise ConfigError(where, f"expected [a, b], got {raw!r}")
    a, b = _floats(raw, where)
    if not (-1 <= a < b <= 1):
        raise ConfigError(where, f"need -1 <= a < b <= 1, got [{a}, {b}]")
    return [a, b]


def from_mapping(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")
    _sections_are_mappings(raw)
    box = raw.get("box", {}) or {}
    grid = raw.get("grid", {}) or {}
    prof = raw.get("profile", {}) or {}
    lapc = raw.get("lap", {}) or {}
    tim = raw.get("time", {}) or {}
    hyp = raw.get("hypotheses", {}) or {}
    d = RunConfig()
    cfg = RunConfig(
        N=_num(box, "N", int, d.N, section="box", minimum=2),
        bc=box.get("bc", d.bc),
        M=_num(grid, "M", int, d.M, section="grid", minimum=64),
        eta=_profile(prof.get("eta"), "profile.eta"),
        V=_profile(prof.get("V"), "profile.V"),
        eps_factor=_num(prof, "eps_factor", float, d.eps_factor, section="profile"),
        intervals=[_interval(I, f"intervals[{i}]") for i, I in enumerate(raw.get("intervals", d.intervals))],
        s=_num(lapc, "s", float, d.s, section="lap"),
        lap_N=_num(lapc, "N", int, d.lap_N, section="lap", minimum=8),
        lambdas=_floats(lapc.get("lambdas", d.lambdas), "lap.lambdas"),
        rho_start=_num(lapc, "rho_start", float, d.rho_start, section="lap", positive=True),
        rho_points=_num(lapc, "rho_points", int, d.rho_points, section="lap", minimum=2),
        evolve_N=_num(tim, "N", int, d.evolve_N, section="time", minimum=8),
        horizon=_num(tim, "horizon", float, d.horizon, section="time", positive=True),
        dt=_num(tim, "dt", float, d.dt, section="time", positive=True),
        decay_horizon=_num(tim, "decay_horizon", float, d.decay_horizon, section="time", positive=True),
        R=_num(hyp, "R", int, d.R, section="hypotheses", minimum=8),
        gamma=_num(hyp, "gamma", float, d.gamma, section="hypotheses", positive=True),
        output=str(raw.get("output", d.output)),
        seed=_num(raw, "seed", int, d.seed),
    )
    if cfg.bc not in ("periodic", "dirichlet"):
        raise ConfigError("box.bc", f"expected periodic or dirichlet, got {cfg.bc!r}")
    if cfg.s <= 0.5:
        raise ConfigError("lap.s", f"must exceed 1/2, got {cfg.s}")
    if cfg.dt > cfg.horizon:
        raise ConfigError("time.dt", "must not exceed the horizon")
    if 2 * cfg.N**2 > 8192 and cfg.bc == "periodic":
        raise ConfigError("box.N", "dense eigensolves are limited to dimension 8192 (N <= 64)")
    return cfg


def load(path=None) -> RunConfig:
    """Read ``path`` (YAML or JSON); ``None`` gives the shipped golden config."""
    try:
        if path is None:
            text = resources.files("hexlap").joinpath("data/golden.yaml").read_text()
        else:
            text = Path(path).read_text()
        raw = yaml.safe_load(text) or {}
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"not valid YAML/JSON: {exc}") from None
    return from_mapping(raw)


def _sections_are_mappings(raw: dict) -> None:
    for sec in ("box", "grid", "profile", "lap", "time", "hypotheses"):
        if sec in raw and raw[sec] is not None and not isinstance(raw[sec], dict):
            raise ConfigError(sec, "expected a mapping")


def output_dir(cfg: RunConfig, override: Optional[str] = None) -> Path:
    """``--out`` beats ``OUTPUT_DIR``, which beats the config entry."""
    return Path(override or os.environ.get("OUTPUT_DIR") or cfg.output)
