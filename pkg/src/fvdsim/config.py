"""Run configuration: TOML/JSON files, flag overrides, FVDSIM_ env overrides.

Unknown keys are rejected with their full key path; all physical values are
validated against the type invariants before any compute starts.
"""

import json
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import ConfigError, InvalidParameterError
from .lattice import GEOMETRY_MODES, PhysicalParams

ENV_PREFIX = "FVDSIM_"

_SYSTEM_KEYS = {
    "n_s": int, "rb_over_a": float, "alpha": float, "beta": float,
    "omega_mhz": float, "geometry_mode": str, "a_um": float, "c6": float,
}
_EXPERIMENT_KEYS = {
    "kind": str, "horizon_cycles": float, "n_samples": int,
    "fit_interval_cycles": list, "sg_window": int, "sg_order": int,
    "beta_start": float, "beta_stop": float, "tau_us": float,
    "anneal_samples": int, "beta_values": list, "rba_values": list,
    "alpha_values": list, "fit_window_betainv": list,
}
_IO_KEYS = {"out_dir": str, "force": bool, "formats": list}
_COMPUTE_KEYS = {"threads": int, "tol": float, "anneal_tol": float,
                 "krylov_dim": int, "anneal_krylov_dim": int, "dt_max": float}

_SECTIONS = {"system": _SYSTEM_KEYS, "experiment": _EXPERIMENT_KEYS,
             "io": _IO_KEYS, "compute": _COMPUTE_KEYS}

_SYSTEM_DEFAULTS = {"n_s": 16, "rb_over_a": 1.2, "alpha": 2.5, "beta": 0.3,
                    "omega_mhz": 1.0, "geometry_mode": "chord", "a_um": 8.13,
                    "c6": None}
_EXPERIMENT_DEFAULTS = {"kind": "decay", "horizon_cycles": 1.0,
                        "n_samples": 401, "fit_interval_cycles": [0.1, 0.4],
                        "sg_window": 21, "sg_order": 3, "beta_start": 2.0,
                        "beta_stop": -1.5, "tau_us": 16.0,
                        "anneal_samples": 600, "beta_values": None,
                        "rba_values": None, "alpha_values": None,
                        "fit_window_betainv": [2.5, 4.0]}
_IO_DEFAULTS = {"out_dir": "out", "force": False, "formats": ["csv", "json"]}
_COMPUTE_DEFAULTS = {"threads": os.cpu_count() or 1, "tol": 1e-9,
                     "anneal_tol": 1e-7, "krylov_dim": 16,
                     "anneal_krylov_dim": 24, "dt_max": 0.005}


@dataclass
class RunConfig:
    system: dict = field(default_factory=dict)
    experiment: dict = field(default_factory=dict)
    io: dict = field(default_factory=dict)
    compute: dict = field(default_factory=dict)

    def physical_params(self):
        s = self.system
        try:
            return PhysicalParams.from_dimensionless(
                n_s=s["n_s"], rb_over_a=s["rb_over_a"], alpha=s["alpha"],
                beta=s["beta"], omega_mhz=s["omega_mhz"], a=s["a_um"],
                geometry_mode=s["geometry_mode"], c6=s["c6"])
        except InvalidParameterError as exc:
            raise ConfigError(f"system: {exc}") from exc

    def echo(self):
        return {"system": dict(self.system), "experiment": dict(self.experiment),
                "io": dict(self.io), "compute": dict(self.compute)}


def _coerce(section, key, value, want):
    path = f"{section}.{key}"
    try:
        if want is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if want is int:
            if isinstance(value, bool) or (isinstance(value, float)
                                           and not float(value).is_integer()):
                raise TypeError
            return int(value)
        if want is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if want is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if want is list:
            if value is None:
                return None
            return list(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected {want.__name__}, got {value!r}")
    raise ConfigError(f"{path}: unsupported type")


def _load_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        blob = fh.read()
    if path.endswith(".json"):
        try:
            return json.loads(blob)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return tomllib.loads(blob.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from exc


def _env_overrides():
    found = {}
    for name, raw in os.environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX):].lower()
        section, _, key = rest.partition("_")
        if section not in _SECTIONS:
            continue
        keys = _SECTIONS[section]
        if key not in keys:
            raise ConfigError(f"environment override {name}: unknown key {section}.{key}")
        want = keys[key]
        if want is bool:
            value = raw.lower() in ("1", "true", "yes")
        elif want is list:
            value = [float(v) for v in raw.split(",") if v]
        elif want is str:
            value = raw
        else:
            value = want(raw)
        found.setdefault(section, {})[key] = value
    return found


def parse_config(path=None, overrides=None, use_env=True):
    """Resolve defaults <- file <- environment <- flag overrides.

    overrides is a mapping {section: {key: value}} from CLI flags; unknown
    keys anywhere are a ConfigError carrying the key path.
    """
    resolved = {
        "system": dict(_SYSTEM_DEFAULTS),
        "experiment": dict(_EXPERIMENT_DEFAULTS),
        "io": dict(_IO_DEFAULTS),
        "compute": dict(_COMPUTE_DEFAULTS),
    }

    layers = []
    if path is not None:
        layers.append(("config file", _load_file(path)))
    if use_env:
        layers.append(("environment", _env_overrides()))
    if overrides:
        layers.append(("flags", overrides))

    for origin, layer in layers:
        if not isinstance(layer, dict):
            raise ConfigError(f"{origin}: top level must be a table")
        for section, table in layer.items():
            if section not in _SECTIONS:
                raise ConfigError(f"{origin}: unknown section {section!r}")
            if not isinstance(table, dict):
                raise ConfigError(f"{origin}: section {section!r} must be a table")
            for key, value in table.items():
                if key not in _SECTIONS[section]:
                    raise ConfigError(f"{origin}: unknown key {section}.{key}")
                if value is None:
                    continue
                resolved[section][key] = _coerce(section, key, value,
                                                 _SECTIONS[section][key])

    cfg = RunConfig(**resolved)
    _validate(cfg)
    return cfg


def _validate(cfg):
    s = cfg.system
    if s["n_s"] % 2 != 0 or s["n_s"] < 2:
        raise ConfigError("system.n_s must be even and >= 2")
    if s["geometry_mode"] not in GEOMETRY_MODES:
        raise ConfigError(f"system.geometry_mode must be one of {GEOMETRY_MODES}")
    if s["a_um"] <= 0:
        raise ConfigError("system.a_um must be > 0")
    if s["omega_mhz"] < 0:
        raise ConfigError("system.omega_mhz must be >= 0")
    e = cfg.experiment
    if e["kind"] not in ("decay", "anneal", "gap_scan", "rate_diagram",
                         "rate_vs_beta", "rate_vs_gap", "phase_diagram",
                         "sweep"):
        raise ConfigError(f"experiment.kind {e['kind']!r} not recognized")
    if e["kind"] == "decay" and not 0.0 < s["beta"]:
        raise ConfigError("experiment.kind=decay requires system.beta > 0")
    if e["kind"] == "anneal":
        if e["tau_us"] <= 0:
            raise ConfigError("experiment.tau_us must be > 0")
        if not e["beta_start"] > e["beta_stop"]:
            raise ConfigError("experiment: beta_start must exceed beta_stop")
    if e["sg_window"] % 2 == 0 or e["sg_window"] <= e["sg_order"]:
        raise ConfigError("experiment.sg_window must be odd and > sg_order")
    bad = [f for f in cfg.io["formats"] if f not in ("csv", "json")]
    if bad:
        raise ConfigError(f"io.formats: unknown format(s) {bad}; use csv/json")
    c = cfg.compute
    if c["threads"] < 1:
        raise ConfigError("compute.threads must be >= 1")
    if c["tol"] <= 0 or c["anneal_tol"] <= 0:
        raise ConfigError("compute tolerances must be > 0")
