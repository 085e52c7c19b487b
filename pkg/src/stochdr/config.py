"""Run configuration: YAML/JSON file plus ``key=value`` overrides."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .operators import SCALAR_MAPS

SCHEMA_VERSION = 1

EQUATIONS = ("quasilinear", "porous_media", "reaction_diffusion_h")
SCHEMES = ("dr_v", "dr_h")
INITIAL = ("sine", "bump", "random_V")

# equation -> schemes it may be run with
COMPATIBLE = {
    "quasilinear": ("dr_v",),
    "porous_media": ("dr_v",),
    "reaction_diffusion_h": ("dr_v", "dr_h"),
}

# Largest admissible reaction growth exponent for the quasilinear problem
# in d = 1: |psi(r)| <= C(|r|^{2d/(d+2)} + 1).
QUASILINEAR_GROWTH_EXPONENT = 2.0 / 3.0


def _coerce_numbers(obj) -> None:
    """Cast int/float fields in place; YAML reads ``1e-9`` as a string."""
    for f in dataclasses.fields(obj):
        kind = type(f.default) if f.default is not dataclasses.MISSING else None
        if kind not in (int, float):
            continue
        val = getattr(obj, f.name)
        if isinstance(val, bool):
            raise ConfigError(f"{f.name} must be a number, got {val!r}")
        try:
            num = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{f.name} must be a number, got {val!r}") from None
        if kind is int:
            if num != int(num):
                raise ConfigError(f"{f.name} must be an integer, got {val!r}")
            num = int(num)
        setattr(obj, f.name, num)


@dataclass
class NoiseConfig:
    J_modes: int = 8
    mu0: float = 0.2
    decay_p: float = 2.0


@dataclass
class RunConfig:
    equation: str = "quasilinear"
    scheme: str = "dr_v"
    n: int = 32
    K: int = 50
    T: float = 0.5
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    lam: float = 0.5
    delta: float = 0.0
    N_max: int = 300
    stop_tol: float = 1e-8
    newton_tol: float = 1e-10
    max_newton: int = 50
    paths: int = 16
    base_seed: int = 2024
    initial: str = "sine"
    x_amp: float = 1.0
    flux: str = "default_flux"
    reaction: str = "auto"
    nu_react: float = 0.1
    nu_lin: float = 0.1
    profile_amp: float = 0.0
    profile_freq: float = 1.0
    snapshot_times: list[float] = field(default_factory=list)
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        if isinstance(self.noise, dict):
            unknown = set(self.noise) - {f.name for f in dataclasses.fields(NoiseConfig)}
            if unknown:
                raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
            self.noise = NoiseConfig(**self.noise)
        _coerce_numbers(self)
        _coerce_numbers(self.noise)

    @property
    def reaction_name(self) -> str:
        """Reaction (or porous psi) map; ``auto`` picks the equation's default."""
        if self.reaction != "auto":
            return self.reaction
        return {"quasilinear": "saturating", "porous_media": "porous_default",
                "reaction_diffusion_h": "cubic_saturating"}.get(self.equation, "zero")

    @property
    def triple(self) -> str:
        return "porous" if self.equation == "porous_media" else "standard"

    def validate(self) -> RunConfig:
        if self.equation not in EQUATIONS:
            raise ConfigError(f"equation must be one of {EQUATIONS}, got {self.equation!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.scheme not in COMPATIBLE[self.equation]:
            raise ConfigError(f"equation {self.equation!r} cannot be run with scheme {self.scheme!r}")
        if self.initial not in INITIAL:
            raise ConfigError(f"initial must be one of {INITIAL}")
        for name in ("n", "K", "N_max", "paths", "max_newton", "workers"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        for name in ("T", "lam", "stop_tol", "newton_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("delta", "nu_react", "nu_lin", "x_amp"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0 <= self.profile_amp < 1:
            raise ConfigError("profile_amp must lie in [0, 1)")
        nz = self.noise
        if nz.J_modes < 1 or nz.mu0 < 0 or nz.decay_p <= 1.5:
            raise ConfigError("noise needs J_modes >= 1, mu0 >= 0, decay_p > 3/2")
        for name in (self.flux, self.reaction_name):
            if name not in SCALAR_MAPS:
                raise ConfigError(f"unknown scalar map {name!r}")
        if (self.equation == "quasilinear"
                and SCALAR_MAPS[self.reaction_name].growth_exponent > QUASILINEAR_GROWTH_EXPONENT):
            raise ConfigError(f"reaction {self.reaction_name!r} grows faster than |r|^(2/3)")
        for s in self.snapshot_times:
            if not 0 <= s <= self.T:
                raise ConfigError(f"snapshot time {s} outside [0, T]")
        return self

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def hash(self) -> str:
        """SHA-256 over every parameter that can change the numbers."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **kw) -> RunConfig:
        noise = kw.pop("noise", None)
        cfg = dataclasses.replace(self, **kw)
        if noise is not None:
            cfg.noise = NoiseConfig(**noise) if isinstance(noise, dict) else noise
        return cfg


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return RunConfig.from_dict(data)


def _coerce(old, text: str):
    val = yaml.safe_load(text)
    if isinstance(old, bool):
        return bool(val)
    if isinstance(old, (int, float)):
        return text  # cast and checked when the config is rebuilt
    if isinstance(old, str):
        return str(text)
    return val


def apply_overrides(cfg: RunConfig, items: list[str]) -> RunConfig:
    """Apply ``key=value`` items; nested noise keys use ``noise.mu0=0.1``."""
    d = cfg.to_dict()
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, text = item.split("=", 1)
        key = key.strip()
        if key == "lam":
            key = "lambda"
        target = d
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(target.get(p), dict):
                raise ConfigError(f"unknown config key {key!r}")
            target = target[p]
        if parts[-1] not in target:
            raise ConfigError(f"unknown config key {key!r}")
        target[parts[-1]] = _coerce(target[parts[-1]], text.strip())
    return RunConfig.from_dict(d)
