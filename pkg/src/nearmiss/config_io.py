"""Scenario configuration as JSON, mirrored field-for-field.

The loader is strict: unknown keys anywhere in the document are rejected so
typos cannot silently fall back to defaults. `dump_config(load_config(d))`
round-trips exactly.
"""
from __future__ import annotations

import dataclasses
import json
from importlib import resources
from pathlib import Path

from .controllers import (AgentConstParams, AgentTrackParams, EgoControlParams,
                          SensorSpec)
from .errors import ConfigError
from .scenario import (ROLE_CONSTANT, ROLE_EGO, ROLE_TRACKED,
                       FalsificationParams, IntervalBox, ReportParams,
                       RoadSpec, ScenarioConfig, SearchParams, VehicleSpec)

PRESETS = ("case1", "case2")


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing key {key!r} in {where}")
    return obj[key]


def _pair(value, where: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{where} must be a [low, high] pair")
    return float(value[0]), float(value[1])


def _interval_box(obj: dict, where: str) -> IntervalBox:
    _check_keys(obj, {"x", "y", "theta", "v"}, where)
    return IntervalBox(x=_pair(_require(obj, "x", where), f"{where}.x"),
                       y=_pair(_require(obj, "y", where), f"{where}.y"),
                       theta=_pair(_require(obj, "theta", where), f"{where}.theta"),
                       v=_pair(_require(obj, "v", where), f"{where}.v"))


def _dataclass_from(obj: dict, cls, where: str):
    fields = {f.name for f in dataclasses.fields(cls)}
    _check_keys(obj, fields, where)
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


def _sensor(obj: dict, where: str) -> SensorSpec:
    _check_keys(obj, {"zone", "offset", "boresight", "fov", "range"}, where)
    ox, oy = _pair(_require(obj, "offset", where), f"{where}.offset")
    try:
        return SensorSpec(zone=_require(obj, "zone", where), offset_x=ox, offset_y=oy,
                          boresight=float(_require(obj, "boresight", where)),
                          fov=float(_require(obj, "fov", where)),
                          range_m=float(_require(obj, "range", where)))
    except ValueError as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


_CONTROLLER_CLS = {ROLE_EGO: EgoControlParams, ROLE_TRACKED: AgentTrackParams,
                   ROLE_CONSTANT: AgentConstParams}


def _vehicle(obj: dict, where: str) -> VehicleSpec:
    allowed = {"name", "role", "length", "width", "wheelbase", "max_speed",
               "max_accel", "max_decel", "max_steer", "sensors", "controller_params"}
    _check_keys(obj, allowed, where)
    role = _require(obj, "role", where)
    if role not in _CONTROLLER_CLS:
        raise ConfigError(f"unknown role {role!r} in {where}")
    sensors = tuple(_sensor(s, f"{where}.sensors[{i}]")
                    for i, s in enumerate(obj.get("sensors", [])))
    controller = None
    if "controller_params" in obj:
        controller = _dataclass_from(obj["controller_params"], _CONTROLLER_CLS[role],
                                     f"{where}.controller_params")
    kwargs = {k: float(obj[k]) for k in ("length", "width", "wheelbase", "max_speed",
                                         "max_accel", "max_decel", "max_steer")
              if k in obj}
    try:
        return VehicleSpec(name=_require(obj, "name", where), role=role,
                           sensors=sensors, controller=controller, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc


def config_from_dict(doc: dict) -> ScenarioConfig:
    top = {"rng_seed", "road", "egos", "agents", "init_sampling",
           "waypoint_space", "d_leg", "search", "falsification", "report"}
    _check_keys(doc, top, "config")
    road_obj = _require(doc, "road", "config")
    _check_keys(road_obj, {"lanes", "lane_width", "length"}, "config.road")
    road = RoadSpec(lanes=int(_require(road_obj, "lanes", "road")),
                    lane_width=float(_require(road_obj, "lane_width", "road")),
                    length=float(_require(road_obj, "length", "road")))
    egos = tuple(_vehicle(v, f"config.egos[{i}]")
                 for i, v in enumerate(_require(doc, "egos", "config")))
    agents = tuple(_vehicle(v, f"config.agents[{i}]")
                   for i, v in enumerate(_require(doc, "agents", "config")))
    init_obj = _require(doc, "init_sampling", "config")
    init = {name: _interval_box(box, f"config.init_sampling[{name!r}]")
            for name, box in init_obj.items()}
    wspace = _interval_box(_require(doc, "waypoint_space", "config"),
                           "config.waypoint_space")
    search = _dataclass_from(doc.get("search", {}), SearchParams, "config.search")
    fals = _dataclass_from(doc.get("falsification", {}), FalsificationParams,
                           "config.falsification")
    report = _dataclass_from(doc.get("report", {}), ReportParams, "config.report")
    return ScenarioConfig(ego_specs=egos, agent_specs=agents, road=road,
                          init_sampling=init, waypoint_space=wspace,
                          d_leg=float(doc.get("d_leg", 15.0)), search=search,
                          falsification=fals, report=report,
                          rng_seed=int(doc.get("rng_seed", 0)))


def _box_to_dict(box: IntervalBox) -> dict:
    return {"x": list(box.x), "y": list(box.y),
            "theta": list(box.theta), "v": list(box.v)}


def _vehicle_to_dict(spec: VehicleSpec) -> dict:
    out = {
        "name": spec.name, "role": spec.role,
        "length": spec.length, "width": spec.width, "wheelbase": spec.wheelbase,
        "max_speed": spec.max_speed, "max_accel": spec.max_accel,
        "max_decel": spec.max_decel, "max_steer": spec.max_steer,
        "controller_params": dataclasses.asdict(spec.controller),
    }
    if spec.sensors:
        out["sensors"] = [{"zone": s.zone, "offset": [s.offset_x, s.offset_y],
                           "boresight": s.boresight, "fov": s.fov,
                           "range": s.range_m} for s in spec.sensors]
    return out


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "rng_seed": config.rng_seed,
        "road": {"lanes": config.road.lanes, "lane_width": config.road.lane_width,
                 "length": config.road.length},
        "egos": [_vehicle_to_dict(s) for s in config.ego_specs],
        "agents": [_vehicle_to_dict(s) for s in config.agent_specs],
        "init_sampling": {name: _box_to_dict(box)
                          for name, box in config.init_sampling.items()},
        "waypoint_space": _box_to_dict(config.waypoint_space),
        "d_leg": config.d_leg,
        "search": dataclasses.asdict(config.search),
        "falsification": dataclasses.asdict(config.falsification),
        "report": dataclasses.asdict(config.report),
    }


def load_config(source) -> ScenarioConfig:
    """Load a scenario from a JSON file path, preset name, or parsed dict."""
    if isinstance(source, dict):
        return config_from_dict(source)
    if isinstance(source, str) and source in PRESETS:
        return load_preset(source)
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return config_from_dict(doc)


def load_preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {PRESETS}")
    text = resources.files("nearmiss.presets").joinpath(f"{name}.json").read_text()
    return config_from_dict(json.loads(text))


def dump_config(config: ScenarioConfig, path=None) -> str:
    text = json.dumps(config_to_dict(config), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
