"""Run configuration: one TOML file, merged over printable defaults."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .potential import PotentialError, PotentialSpec

DEFAULTS: dict = {
    "seed": 20240601,
    "nu": 2,
    "ell": 3.0,
    "L": 90.0,
    "potential": {
        "family": "square_well",
        "f": 1.0,
        "d": 1.0,
        "u0": 0.0,
        "well_depth": 1.0,
        "well_end": 1.5,
    },
    "contour": {"m": 0.9, "delta": 0.5},
    "bounds": {
        "lambda_range": [1e-4, 1e3, 61],
        "plus_side": True,
    },
    "sampler": {
        "burn_in": 200,
        "n_sweeps": 1,
        "thin": 1,
        "move_mix": [0.35, 0.35, 0.30],
        "min_moves": 64,
    },
    "simulate": {"lambda": 1.0, "beta": 6.0, "n_sweeps": 100, "thin": 10},
    "percolation": {"points": [[1.0, 6.0]], "replicas": 20, "proxy": "crossing"},
    "contours": {"points": [[1.0, 6.0]], "replicas": 20},
    "gw": {"points": [[0.01, 0.0]], "replicas": 100000, "max_generations": 10000},
    "validate": {"grid_step": 0.0, "horizon": 0.0},
}


# keys that may appear without a default
OPTIONAL_KEYS = {"bounds.lambdas"}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            # the potential table carries family-specific keys
            if path != "potential." and where not in OPTIONAL_KEYS:
                raise ConfigError(f"unknown config key {where!r}")
            out[k] = v
        elif isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where!r} must be a table")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = v
    return out


@dataclass
class RunConfig:
    raw: dict
    potential: PotentialSpec

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def nu(self) -> int:
        return int(self.raw["nu"])

    @property
    def ell(self) -> float:
        return float(self.raw["ell"])

    @property
    def L(self) -> float:
        return float(self.raw["L"])

    def section(self, name: str) -> dict:
        return self.raw[name]

    def sha256(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def lambda_grid(self) -> list[float]:
        b = self.raw["bounds"]
        if "lambdas" in b:
            return [float(x) for x in b["lambdas"]]
        lo, hi, num = b["lambda_range"]
        if int(num) <= 0:
            return []
        return [float(x) for x in np.geomspace(float(lo), float(hi), int(num))]

    def points(self, name: str) -> list[tuple[float, float]]:
        pts = self.raw[name]["points"]
        try:
            return [(float(a), float(b)) for a, b in pts]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}.points must be a list of [lambda, beta] pairs") from exc


def build(raw: dict) -> RunConfig:
    """Validate a merged configuration."""
    try:
        pot = PotentialSpec.from_dict(raw["potential"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"incomplete potential table: {exc}") from exc
    except PotentialError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = RunConfig(raw, pot)
    if cfg.nu < 1:
        raise ConfigError("nu must be >= 1")
    if not (cfg.ell > 0 and cfg.L > 0):
        raise ConfigError("ell and L must be positive")
    if not 0 <= cfg.seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    for name in ("percolation", "contours", "gw"):
        if int(raw[name]["replicas"]) < 1:
            raise ConfigError(f"{name}.replicas must be >= 1")
    c = raw["contour"]
    if not (math.isfinite(c["m"]) and c["delta"] > 0):
        raise ConfigError("contour.m must be finite and contour.delta positive")
    return cfg


def load(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    user: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                user = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = _merge(DEFAULTS, user)
    if overrides:
        raw = _merge(raw, overrides)
    return build(raw)


def defaults_toml() -> str:
    return tomli_w.dumps(DEFAULTS)


def dumps(raw: dict) -> str:
    return tomli_w.dumps(raw)


def to_jsonable(x: Any) -> Any:
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x
