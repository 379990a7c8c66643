"""Experiment configuration: parsing, validation, canonical serialization.

Configs come from a plain-text ``key = value`` file, command-line flags, or
both (flags override the file). The canonical serialization sorts keys and
formats numbers with repr, so parse -> serialize round-trips byte identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Tuple

from .curves import DISPLACEMENT_CRITICAL
from .errors import ConfigError

__all__ = ["ExperimentConfig", "EXPERIMENTS", "parse_config_text",
           "canonical_text", "validate"]

EXPERIMENTS = (
    "tube-prob",
    "lambda-tail",
    "jaffuel-survival",
    "neveu",
    "moment-check",
    "feller-validate",
    "lambda-location",
)

_DEFAULT_DT = {
    "tube-prob": 0.01,
    "lambda-tail": 0.25,
    "jaffuel-survival": 0.02,
    "neveu": 0.25,
    "moment-check": 0.01,
    "feller-validate": 0.005,
    "lambda-location": 0.25,
}


@dataclass
class ExperimentConfig:
    experiment: str = ""
    seed: int = 1
    replicas: int = 10_000
    dt: Optional[float] = None
    t: Optional[float] = None
    z: Tuple[float, ...] = ()
    y: Tuple[float, ...] = ()
    s: Tuple[float, ...] = ()
    ts: Tuple[float, ...] = ()
    u: Optional[float] = None
    pair_m: Optional[float] = None
    pair_n: Optional[float] = None
    single_replicas: Optional[int] = None
    workers: Optional[int] = None
    out: str = "results.csv"
    format: str = "csv"

    def effective_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        return _DEFAULT_DT.get(self.experiment, 0.01)


_LIST_KEYS = {"z", "y", "s", "ts"}
_INT_KEYS = {"seed", "replicas", "single_replicas", "workers"}
_FLOAT_KEYS = {"dt", "t", "u", "pair_m", "pair_n"}
_STR_KEYS = {"experiment", "out", "format"}
_ALL_KEYS = _LIST_KEYS | _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _LIST_KEYS:
        if not raw:
            return ()
        return tuple(float(x) for x in raw.split(","))
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out: Dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, raw)
    return out


def _format_value(key: str, value) -> str:
    if key in _LIST_KEYS:
        return ",".join(repr(float(v)) for v in value)
    if key in _FLOAT_KEYS:
        return repr(float(value))
    return str(value)


def canonical_text(config: "ExperimentConfig") -> str:
    """Canonical key-sorted serialization; omits unset optional keys."""
    lines = []
    for f in sorted(fields(config), key=lambda f: f.name):
        value = getattr(config, f.name)
        if value is None or value == () or value == "":
            continue
        lines.append(f"{f.name} = {_format_value(f.name, value)}")
    return "\n".join(lines) + "\n"


def from_mapping(mapping: Dict[str, object]) -> ExperimentConfig:
    cfg = ExperimentConfig()
    for key, value in mapping.items():
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    return cfg


def validate(config: ExperimentConfig) -> List[str]:
    """List of violations; empty iff a run would start.

    Each violation names the offending field and the constraint, including
    the stated tail validity range z in [1, a t^(1/3)/2] for the tail
    experiment's hard floor z >= 1.
    """
    v: List[str] = []
    if config.experiment not in EXPERIMENTS:
        v.append(f"experiment: must be one of {', '.join(EXPERIMENTS)}")
        return v
    if config.seed < 0:
        v.append("seed: must be a nonnegative integer")
    if config.replicas <= 0:
        v.append("replicas: must be positive")
    if config.dt is not None and config.dt <= 0:
        v.append("dt: must be positive")
    if config.format not in ("csv", "json"):
        v.append("format: must be csv or json")
    e = config.experiment
    needs_t = e in ("tube-prob", "lambda-tail", "jaffuel-survival", "moment-check",
                    "feller-validate")
    if needs_t and config.t is None:
        v.append("t: required for this experiment")
    if needs_t and config.t is not None and config.t <= 0:
        v.append("t: must be positive")
    if e == "lambda-tail" and config.t is not None:
        if not config.z:
            v.append("z: required (comma-separated list)")
        bound = DISPLACEMENT_CRITICAL * config.t ** (1.0 / 3.0)
        for z in config.z:
            if z < 1.0:
                v.append(
                    f"z: {z:g} below the stated tail validity range "
                    f"[1, a t^(1/3)/2] = [1, {bound / 2.0:.3f}]")
            if bound - z <= 0.0:
                v.append(f"z: {z:g} puts the absorbing line above the origin "
                         f"(a t^(1/3) = {bound:.3f})")
    if e == "tube-prob":
        if not config.z or len(config.z) != 1:
            v.append("z: exactly one value required")
        if not config.s:
            v.append("s: required (comma-separated observation times)")
        if config.t is not None and config.s and any(
                not 0 < s_ <= config.t for s_ in config.s):
            v.append("s: values must lie in (0, t]")
    if e == "neveu":
        if not config.y:
            v.append("y: required (comma-separated list)")
        elif any(b <= a for a, b in zip(config.y, config.y[1:])):
            v.append("y: values must be strictly increasing")
        elif any(y <= 0 for y in config.y):
            v.append("y: values must be positive")
    if e == "moment-check":
        if config.u is None and config.pair_m is None:
            v.append("u: required (or pair_m/pair_n for the pair check)")
        if config.u is not None and config.t is not None and not 0 < config.u <= config.t:
            v.append("u: must lie in (0, t]")
        if config.u is not None and not config.z:
            v.append("z: required for the many-to-one check")
        if (config.pair_m is None) != (config.pair_n is None):
            v.append("pair_m/pair_n: must be given together")
        if config.pair_m is not None and config.t is not None:
            if not 0 < config.pair_m <= config.pair_n <= config.t:
                v.append("pair_m/pair_n: need 0 < pair_m <= pair_n <= t")
    if e == "lambda-location":
        if not config.ts:
            v.append("ts: required (comma-separated horizons)")
        elif any(t_ <= 0 for t_ in config.ts):
            v.append("ts: horizons must be positive")
    return v
