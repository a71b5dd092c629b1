"""Flat key=value run configuration.

Configs are plain text, one ``key=value`` per line, ``#`` comments allowed;
keys carry a section prefix (``noise.G=0.5``).  Exactly one ``mode`` is
required; every key must belong to the schema of that mode, and unknown or
duplicate keys are rejected rather than ignored.  Frequencies are in units
of the tunnel coupling (time in its inverse) except in mechanics mode,
which is fully dimensional.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .envelope import TLSParams
from .mechanics import DriveSpec, MechanicalParams
from .noise import OUParams

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "MODES"]

MODES = (
    "mechanics",
    "envelope",
    "ensemble",
    "redfield",
    "times",
    "appendix",
    "fig2",
    "fig3",
    "svea-check",
)

_GLOBAL_KEYS = {"mode": str, "seed": int, "workers": int}

_GROUPS: dict[str, dict[str, type]] = {
    "noise": {"G": float, "tau_c": float},
    "tls": {"Delta": float, "eps0": float, "D": float, "omega": float, "gamma": float},
    "grid": {"dt": float, "T": float, "stride": int},
    "initial": {"rx": float, "ry": float, "rz": float},
    "ensemble": {"n_traj": int},
    "mech": {
        "m": float,
        "k": float,
        "h": float,
        "gamma": float,
        "eps0": float,
        "D": float,
        "omega": float,
        "x1": float,
        "v1": float,
        "x2": float,
        "v2": float,
        "cutoff": float,
    },
    "appendix": {"n_samples": int, "n_tuples": int},
    "svea": {"omega0": float, "quality": float, "periods": float, "tolerance": float},
}

# which groups each mode accepts
_MODE_GROUPS: dict[str, tuple[str, ...]] = {
    "mechanics": ("mech", "noise", "grid"),
    "envelope": ("tls", "noise", "grid", "initial"),
    "ensemble": ("tls", "noise", "grid", "initial", "ensemble"),
    "redfield": ("tls", "noise", "grid", "initial"),
    "times": ("tls", "noise"),
    "appendix": ("tls", "noise", "appendix"),
    "fig2": ("ensemble", "grid"),
    "fig3": ("grid",),
    "svea-check": ("svea", "noise"),
}

_DEFAULTS: dict[str, dict[str, object]] = {
    "noise": {"G": 0.0, "tau_c": 0.0},
    "tls": {"Delta": 1.0, "eps0": 0.0, "D": 0.0, "omega": 0.0, "gamma": 0.0},
    "grid": {"dt": 0.01, "T": 10.0, "stride": 10},
    "initial": {"rx": 0.0, "ry": 0.0, "rz": 1.0},
    "ensemble": {"n_traj": 2000},
    "mech": {
        "m": 1.0,
        "k": 99.0,
        "h": 1.0,
        "gamma": 0.0,
        "eps0": 0.0,
        "D": 0.0,
        "omega": 0.0,
        "x1": 1.0,
        "v1": 0.0,
        "x2": 0.0,
        "v2": 0.0,
        "cutoff": 0.0,  # 0 selects omega0 / 10
    },
    "appendix": {"n_samples": 10_000, "n_tuples": 8},
    "svea": {"omega0": 100.0, "quality": 1.0e4, "periods": 10.0, "tolerance": 0.05},
}


class ConfigError(ValueError):
    """Malformed, unknown, or inconsistent configuration input."""


def _parse_bool(_: str):  # placeholder if boolean keys appear later
    raise ConfigError("boolean keys are not part of the schema")


def parse_kv(text: str) -> dict[str, str]:
    """Key=value lines to a dict; rejects duplicates and malformed lines."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {ln}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigError(f"line {ln}: duplicate key {key!r}")
        out[key] = value
    return out


@dataclass
class ExperimentConfig:
    """Validated, fully resolved run configuration."""

    mode: str
    seed: int = 0
    workers: int = 1
    groups: dict = field(default_factory=dict)
    explicit: set = field(default_factory=set)

    def __getitem__(self, dotted: str):
        group, key = dotted.split(".", 1)
        return self.groups[group][key]

    def was_set(self, dotted: str) -> bool:
        """Whether the key came from the config rather than a default."""
        return dotted in self.explicit

    def noise_params(self) -> OUParams:
        g = self.groups["noise"]
        return OUParams(strength=g["G"], tau_c=g["tau_c"], seed=self.seed)

    def tls_params(self) -> TLSParams:
        g = self.groups["tls"]
        return TLSParams(
            delta=g["Delta"],
            eps0=g["eps0"],
            drive_amp=g["D"],
            drive_freq=g["omega"],
            gamma=g["gamma"],
        )

    def mech_params(self) -> MechanicalParams:
        g = self.groups["mech"]
        return MechanicalParams(
            m=g["m"],
            k=g["k"],
            h=g["h"],
            gamma=g["gamma"],
            drive=DriveSpec(eps0=g["eps0"], amp=g["D"], freq=g["omega"]),
        )

    def initial_bloch(self) -> tuple[float, float, float]:
        g = self.groups["initial"]
        return (g["rx"], g["ry"], g["rz"])

    def resolved_text(self) -> str:
        """Echo of every key actually in force, in a stable order."""
        lines = [f"mode={self.mode}", f"seed={self.seed}", f"workers={self.workers}"]
        for group in sorted(self.groups):
            for key in sorted(self.groups[group]):
                lines.append(f"{group}.{key}={self.groups[group][key]}")
        return "\n".join(lines) + "\n"


def parse_config(source: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config file or literal text.

    ``overrides`` may replace ``seed`` and ``workers`` (command-line flags
    take precedence over the file).
    """
    path = Path(source)
    if path.exists() and path.is_file():
        text = path.read_text()
    elif isinstance(source, Path):
        raise ConfigError(f"config file not found: {source}")
    else:
        text = source
    kv = parse_kv(text)
    if "mode" not in kv:
        raise ConfigError("config must set mode=<" + "|".join(MODES) + ">")
    mode = kv.pop("mode")
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")

    cfg = ExperimentConfig(mode=mode)
    for key, caster in (("seed", int), ("workers", int)):
        if key in kv:
            try:
                setattr(cfg, key, caster(kv.pop(key)))
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None

    allowed = _MODE_GROUPS[mode]
    cfg.groups = {g: dict(_DEFAULTS[g]) for g in allowed}
    for dotted, value in kv.items():
        if "." not in dotted:
            raise ConfigError(f"unknown key {dotted!r}")
        group, key = dotted.split(".", 1)
        if group not in allowed:
            raise ConfigError(f"group {group!r} not valid in mode {mode!r}")
        schema = _GROUPS[group]
        if key not in schema:
            raise ConfigError(f"unknown key {dotted!r}")
        try:
            cfg.groups[group][key] = schema[key](value)
        except ValueError:
            raise ConfigError(
                f"{dotted}: cannot parse {value!r} as {schema[key].__name__}"
            ) from None
        cfg.explicit.add(dotted)

    if overrides:
        for key in ("seed", "workers"):
            if overrides.get(key) is not None:
                setattr(cfg, key, int(overrides[key]))
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg
