"""Run configuration: strict schema, defaults, and figure presets."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .nanosphere import DrudeMetal, SystemGeometry
from .scenario import Numerics


class ConfigError(ValueError):
    pass


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


_POS = {"type": "number", "exclusiveMinimum": 0}
_SWEEP = _section({
    "parameter": {"enum": ["distance_nm", "r", "count", "N"]},
    "values": {"type": "array", "items": {"type": "number"}},
    "start": {"type": "number"},
    "stop": {"type": "number"},
    "num": {"type": "integer", "minimum": 0},
}, required=["parameter"])

SCHEMA = _section({
    "name": {"type": "string"},
    "metal": _section({
        "hbar_omega_p_ev": _POS,
        "eps_inf": {"type": "number", "minimum": 1},
        "hbar_gamma_p_ev": {"type": "number", "minimum": 0},
    }),
    "medium": _section({"eps_d": _POS}),
    "sphere": _section({"radius_nm": _POS}),
    "emitters": _section({
        "count": {"type": "integer", "minimum": 1},
        "distance_nm": _POS,
        "hbar_omega0_ev": _POS,
        "hbar_gamma0_ev": _POS,
    }),
    "numerics": _section({
        "n_max": {"type": "integer", "minimum": 1, "maximum": 200},
        "omega_min_ev": _POS,
        "omega_max_ev": _POS,
        "omega_points": {"type": "integer", "minimum": 3},
        "t_max_fs": {"anyOf": [_POS, {"type": "null"}]},
        "dt_fs": {"anyOf": [_POS, {"type": "null"}]},
    }),
    "scenario": _section({
        "kind": {"enum": ["dynamics", "spectrum_scan", "spectral_density", "steady_sweep"]},
        "initial": {"enum": ["single_excited", "w_state"]},
        "sweep": {"anyOf": [_SWEEP, {"type": "null"}]},
        "channels": {"anyOf": [{"type": "array", "items": {"type": "integer", "minimum": 0}}, {"type": "null"}]},
        "with_dynamics": {"type": "boolean"},
    }),
    "output": _section({"directory": {"type": "string"}, "emit_plots": {"type": "boolean"}}),
})

DEFAULTS = {
    "name": "run",
    "metal": {"hbar_omega_p_ev": 9.01, "eps_inf": 3.718, "hbar_gamma_p_ev": 0.09},
    "medium": {"eps_d": 1.0},
    "sphere": {"radius_nm": 5.0},
    "emitters": {"count": 2, "distance_nm": 9.0, "hbar_omega0_ev": 0.8, "hbar_gamma0_ev": 1e-4},
    "numerics": {"n_max": 40, "omega_min_ev": 0.01, "omega_max_ev": 8.0, "omega_points": 4000,
                 "t_max_fs": None, "dt_fs": None},
    "scenario": {"kind": "dynamics", "initial": "single_excited", "sweep": None, "channels": None,
                 "with_dynamics": False},
    "output": {"directory": "out", "emit_plots": False},
}


@dataclass(frozen=True)
class RunConfig:
    name: str
    metal: DrudeMetal
    geometry: SystemGeometry
    numerics: Numerics
    kind: str
    initial: str
    sweep_parameter: str | None
    sweep_values: tuple
    channels: tuple | None
    with_dynamics: bool
    output_dir: str
    emit_plots: bool
    resolved: dict = field(compare=False)
    notes: tuple = ()

    def points(self) -> list[SystemGeometry]:
        """Geometry for each sweep point (a single point without a sweep)."""
        if self.sweep_parameter is None:
            return [self.geometry]
        if self.sweep_parameter == "distance_nm":
            return [self.geometry.with_(distance_nm=float(v)) for v in self.sweep_values]
        return [self.geometry.with_(n_emitters=int(v)) for v in self.sweep_values]


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _path(err) -> str:
    return ".".join(str(p) for p in err.absolute_path) or "<root>"


def resolve(raw: dict) -> RunConfig:
    """Validate a raw mapping, fill defaults, and build a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    errors = sorted(jsonschema.Draft7Validator(SCHEMA).iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        msg = "; ".join(f"{_path(e)}: {e.message}" for e in errors)
        raise ConfigError(f"invalid configuration: {msg}")
    notes = []
    if "eps_d" not in raw.get("medium", {}):
        notes.append("medium.eps_d not given; using default 1.0")
    cfg = _merge(DEFAULTS, raw)
    sweep = cfg["scenario"]["sweep"]
    param, values = None, ()
    if sweep is not None:
        param = {"r": "distance_nm", "N": "count"}.get(sweep["parameter"], sweep["parameter"])
        if "values" in sweep:
            values = tuple(float(v) for v in sweep["values"])
        elif {"start", "stop", "num"} <= sweep.keys():
            values = tuple(float(v) for v in np.linspace(sweep["start"], sweep["stop"], sweep["num"]))
        else:
            raise ConfigError("scenario.sweep: give either 'values' or 'start', 'stop', 'num'")
        if param == "count" and any(v != int(v) or v < 1 for v in values):
            raise ConfigError("scenario.sweep.values: emitter counts must be positive integers")
        cfg["scenario"]["sweep"] = {"parameter": param, "values": list(values)}
    m, e, num = cfg["metal"], cfg["emitters"], cfg["numerics"]
    try:
        metal = DrudeMetal(m["hbar_omega_p_ev"], m["eps_inf"], m["hbar_gamma_p_ev"])
        geom = SystemGeometry(radius_nm=cfg["sphere"]["radius_nm"], distance_nm=e["distance_nm"],
                              n_emitters=e["count"], eps_d=cfg["medium"]["eps_d"],
                              hbar_omega0=e["hbar_omega0_ev"], hbar_gamma0=e["hbar_gamma0_ev"])
        if param == "distance_nm" and any(v <= geom.radius_nm for v in values):
            raise ValueError("scenario.sweep.values: distances must exceed sphere.radius_nm")
        if num["omega_max_ev"] <= num["omega_min_ev"]:
            raise ValueError("numerics.omega_max_ev must exceed numerics.omega_min_ev")
        numerics = Numerics(n_max=num["n_max"], omega_min=num["omega_min_ev"], omega_max=num["omega_max_ev"],
                            omega_points=num["omega_points"], t_max=num["t_max_fs"], dt=num["dt_fs"])
    except ValueError as exc:
        msg = str(exc)
        if "distance_nm > radius_nm" in msg:
            msg = f"emitters.distance_nm: {msg}"
        raise ConfigError(msg) from exc
    sc = cfg["scenario"]
    return RunConfig(
        name=cfg["name"], metal=metal, geometry=geom, numerics=numerics, kind=sc["kind"],
        initial=sc["initial"], sweep_parameter=param, sweep_values=values,
        channels=None if sc["channels"] is None else tuple(sc["channels"]),
        with_dynamics=sc["with_dynamics"], output_dir=cfg["output"]["directory"],
        emit_plots=cfg["output"]["emit_plots"], resolved=cfg, notes=tuple(notes),
    )


def load_config(path) -> RunConfig:
    """Read a YAML (or JSON) file, or a preset name such as ``"fig2"``."""
    if isinstance(path, str) and path in PRESETS:
        return preset(path)[0]
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    text = p.read_text()
    try:
        raw = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    return resolve(raw if raw is not None else {})


_FIG2_BASE = {"emitters": {"count": 2, "hbar_omega0_ev": 0.8}, "sphere": {"radius_nm": 5.0}}

PRESETS: dict[str, list[dict]] = {
    "fig2": [
        _merge(_FIG2_BASE, {"name": "fig2_dynamics", "scenario": {
            "kind": "dynamics", "initial": "single_excited",
            "sweep": {"parameter": "r", "values": [8.0, 9.0, 9.5]}}}),
        _merge(_FIG2_BASE, {"name": "fig2_spectrum", "scenario": {
            "kind": "spectrum_scan", "sweep": {"parameter": "r", "start": 7.5, "stop": 10.0, "num": 26}}}),
        _merge(_FIG2_BASE, {"name": "fig2_steady", "scenario": {
            "kind": "steady_sweep", "initial": "single_excited",
            "sweep": {"parameter": "r", "start": 7.5, "stop": 10.0, "num": 26}}}),
    ],
    "fig3": [
        _merge(_FIG2_BASE, {"name": "fig3_dynamics", "emitters": {"distance_nm": 9.5}, "scenario": {
            "kind": "dynamics", "initial": "w_state", "sweep": {"parameter": "N", "values": [2, 4, 8, 16, 32]}}}),
        _merge(_FIG2_BASE, {"name": "fig3_spectrum", "emitters": {"distance_nm": 9.5}, "scenario": {
            "kind": "spectrum_scan", "channels": [0], "sweep": {"parameter": "N", "start": 1, "stop": 40, "num": 40}}}),
        _merge(_FIG2_BASE, {"name": "fig3_density", "emitters": {"distance_nm": 9.5}, "scenario": {
            "kind": "spectral_density", "sweep": {"parameter": "N", "values": [1, 2, 4, 8]}}}),
    ],
    "fig4": [
        _merge(_FIG2_BASE, {"name": "fig4_dynamics", "emitters": {"count": 4}, "scenario": {
            "kind": "dynamics", "initial": "single_excited", "sweep": {"parameter": "r", "values": [8.0, 9.0, 9.5]}}}),
        _merge(_FIG2_BASE, {"name": "fig4_spectrum", "emitters": {"count": 4}, "scenario": {
            "kind": "spectrum_scan", "sweep": {"parameter": "r", "start": 7.5, "stop": 10.0, "num": 26}}}),
    ],
}


def preset(name: str) -> list[RunConfig]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return [resolve(copy.deepcopy(raw)) for raw in PRESETS[name]]
