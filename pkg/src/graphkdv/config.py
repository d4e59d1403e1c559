"""Run configuration: strict JSON schema, validation, and the run manifest."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, asdict


class ConfigError(ValueError):
    pass


EXPERIMENTS = ("profiles", "roots", "trace-matrix", "linear-ibvp", "evolve",
               "spectrum", "instability", "probes")

# every key the schema accepts, with defaults; unknown keys are errors
_DEFAULTS = {
    "experiment": None,
    "alpha": 1.0,
    "beta": -1.0,
    "Z": 1.0,
    "c": 2.0,
    "L": 40.0,
    "h": 1.0 / 64,
    "dt": 2e-3,
    "T": 1.0,
    "n_x": 8192,
    "half_width": 64.0,
    "t_pad": 8.0,
    "n_t": 2048,
    "eta": 1.0,
    "tau_min": -10.0,
    "tau_max": 10.0,
    "tau_points": 201,
    "solver": "fd",
    "side": "right",
    "profile": "UZ",
    "initial_csv": None,
    "boundary_csv": None,
    "delta_rel": 1e-4,
    "eigen_length": 60.0,
    "eigen_h": 0.1,
    "eigen_ladder": 2,
    "psi_prefactor": False,
    "probe_samples": 50,
    "seed": 0,
    "tolerances": None,
    "sweep": None,
    "out_dir": "out",
}

_TYPES = {
    "experiment": str, "solver": str, "side": str, "profile": str,
    "initial_csv": (str, type(None)), "boundary_csv": (str, type(None)),
    "psi_prefactor": bool, "seed": int, "tau_points": int, "n_x": int,
    "n_t": int, "eigen_ladder": int, "probe_samples": int,
    "tolerances": (dict, type(None)), "sweep": (dict, type(None)),
    "out_dir": str,
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        vals = object.__getattribute__(self, "values")
        if name in vals:
            return vals[name]
        raise AttributeError(name)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        vals = dict(_DEFAULTS)
        vals.update(data)
        if vals["experiment"] not in EXPERIMENTS:
            raise ConfigError(
                f"experiment must be one of {EXPERIMENTS}, got {vals['experiment']!r}")
        for key, typ in _TYPES.items():
            if key in vals and vals[key] is not None and not isinstance(vals[key], typ):
                if typ is not bool and isinstance(vals[key], bool):
                    raise ConfigError(f"config key {key} has wrong type")
        # numeric coercion for the float-valued keys
        for key, dv in _DEFAULTS.items():
            if isinstance(dv, float) and vals[key] is not None:
                try:
                    vals[key] = float(vals[key])
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"config key {key} must be numeric") from exc
        cfg = cls(values=vals)
        cfg.validate_physics()
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(data)

    def validate_physics(self):
        v = self.values
        if v["alpha"] <= 0:
            raise ConfigError("alpha must be positive")
        if v["beta"] >= 0:
            raise ConfigError("beta must be negative")
        if v["Z"] == 0:
            raise ConfigError("Z must be nonzero")
        if v["experiment"] in ("profiles", "evolve", "spectrum", "instability"):
            omega = -v["beta"] / v["alpha"]
            if omega <= v["Z"] ** 2 / 4:
                raise ConfigError("omega must exceed Z^2/4 for the profile family")

    def to_dict(self) -> dict:
        return dict(self.values)


@dataclass
class RunManifest:
    config: dict
    version: str
    started: str
    finished: str = ""
    checks: dict = field(default_factory=dict)
    headline: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_time_s: float = 0.0

    @classmethod
    def start(cls, config: RunConfig, version: str) -> "RunManifest":
        return cls(config=config.to_dict(), version=version,
                   started=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()))

    def finish(self, t0: float):
        self.finished = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        self.wall_time_s = time.monotonic() - t0

    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def write(self, path):
        from .csvio import write_json

        write_json(path, asdict(self))
