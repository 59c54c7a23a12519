"""Run configuration: schema-validated YAML plus dotted-path overrides.

One config file is the canonical input artifact of a run; every output
carries the hash of the fully resolved config so results are traceable.
Unknown keys are rejected rather than ignored.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .model import BasisTruncation, BiasPoint, CircuitParams

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_override"]

CONFIG_VERSION = 1

_SCHEMA = {
    "config_version": None,
    "circuit": {
        "eps_J": None, "eps_C": None, "eps_L": None, "x": None,
        "delta_J": None, "delta_C": None, "delta_A": None, "delta_L": None,
    },
    "bias": {"phi_ext": None, "N_g": None},
    "truncation": {"N0": None, "p0": None, "q0": None},
    "temperature": None,
    "seed": None,
    "jobs": None,
    "cache": None,
    "output_dir": None,
    "dense_threshold": None,
    "sweep": {
        "flux_start": None, "flux_stop": None, "flux_points": None,
        "ng_points": None, "deltas": None, "kind": None, "k": None,
    },
    "channels": {
        "enabled": None, "q_cap": None, "q_ind": None,
        "sqrt_A_flux": None, "sqrt_A_epsJ_rel": None, "x_qp": None,
    },
    "mathieu": {"E_J": None, "E_C": None, "N0_toy": None, "ratios": None},
    "instanton": {"n_beads": None, "max_outer": None},
    "converge": {"levels": None, "k": None, "tolerance": None},
}

_DEFAULTS = {
    "config_version": CONFIG_VERSION,
    "circuit": {
        "eps_J": 15.0, "eps_C": 2.0, "eps_L": 1.0, "x": 0.02,
        "delta_J": 0.0, "delta_C": 0.0, "delta_A": 0.0, "delta_L": 0.0,
    },
    "bias": {"phi_ext": float(np.pi), "N_g": 0.0},
    "truncation": {"N0": 7, "p0": 7, "q0": 30},
    "temperature": 0.016,
    "seed": 7,
    "jobs": 1,
    "cache": True,
    "output_dir": None,
    "dense_threshold": None,
    "sweep": {
        "flux_start": 0.6 * float(np.pi), "flux_stop": 1.4 * float(np.pi),
        "flux_points": 21, "ng_points": 41,
        "deltas": [0.0, 0.3, 0.6, 0.9], "kind": "L", "k": 6,
    },
    "channels": {
        "enabled": [
            "capacitive", "inductive", "purcell", "quasiparticle",
            "charge", "flux", "shot", "critical_current",
        ],
        "q_cap": 1.0e6, "q_ind": 5.0e8,
        "sqrt_A_flux": 2 * float(np.pi) * 3.0e-6,
        "sqrt_A_epsJ_rel": 5.0e-7, "x_qp": 3.3e-6,
    },
    "mathieu": {"E_J": 100.0, "E_C": 2.0, "N0_toy": 60,
                "ratios": [30, 40, 50, 60, 70, 80]},
    "instanton": {"n_beads": 385, "max_outer": 200},
    "converge": {"levels": [[5, 5, 20], [7, 7, 30], [9, 9, 40]], "k": 4,
                 "tolerance": 1e-4},
}


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


def _validate(tree: dict, schema: dict, path: str = "") -> None:
    for key, val in tree.items():
        if key not in schema:
            raise ConfigError(f"unknown config key {path + key!r}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key!r} must be a mapping")
            _validate(val, sub, path + key + ".")


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def parse_override(text: str) -> dict:
    """Turn a dotted ``key.path=value`` string into a nested mapping."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key.path=value")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw)
    tree: dict = {}
    node = tree
    parts = key.strip().split(".")
    for p in parts[:-1]:
        node[p] = {}
        node = node[p]
    node[parts[-1]] = value
    return tree


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration with typed accessors."""

    raw: dict = field(repr=False)

    @property
    def circuit(self) -> CircuitParams:
        c = self.raw["circuit"]
        return CircuitParams(
            eps_J=float(c["eps_J"]), eps_C=float(c["eps_C"]),
            eps_L=float(c["eps_L"]), x=float(c["x"]),
            delta_J=float(c["delta_J"]), delta_C=float(c["delta_C"]),
            delta_A=float(c["delta_A"]), delta_L=float(c["delta_L"]),
        )

    @property
    def bias(self) -> BiasPoint:
        b = self.raw["bias"]
        return BiasPoint(float(b["phi_ext"]), float(b["N_g"]))

    @property
    def truncation(self) -> BasisTruncation:
        t = self.raw["truncation"]
        return BasisTruncation(int(t["N0"]), int(t["p0"]), int(t["q0"]))

    @property
    def temperature(self) -> float:
        return float(self.raw["temperature"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def jobs(self) -> int:
        return int(self.raw["jobs"])

    @property
    def cache_enabled(self) -> bool:
        return bool(self.raw["cache"])

    @property
    def dense_threshold(self) -> int | None:
        v = self.raw.get("dense_threshold")
        return None if v is None else int(v)

    def section(self, name: str) -> dict:
        return self.raw[name]

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, default=float)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        from . import __version__

        return {
            "config_hash": self.config_hash,
            "code_version": __version__,
            "seed": self.seed,
        }


def load_config(path: str | Path | None, overrides=()) -> RunConfig:
    """Read, validate, default-fill, and override a config file."""
    tree: dict = {}
    if path is not None:
        with open(path) as fh:
            tree = yaml.safe_load(fh) or {}
        if not isinstance(tree, dict):
            raise ConfigError("config root must be a mapping")
    _validate(tree, _SCHEMA)
    merged = _merge(_DEFAULTS, tree)
    for text in overrides:
        o = parse_override(text)
        _validate(o, _SCHEMA)
        merged = _merge(merged, o)
    if int(merged["config_version"]) != CONFIG_VERSION:
        raise ConfigError(
            f"unsupported config_version {merged['config_version']!r}; "
            f"this build reads version {CONFIG_VERSION}"
        )
    cfg = RunConfig(raw=merged)
    cfg.circuit, cfg.bias, cfg.truncation  # eager validation
    return cfg
