"""Scenario configuration: defaults, TOML/JSON loading, overrides and hashing.

A scenario is a tree of small dataclasses. Unknown keys and out-of-range
values raise :class:`ConfigError` naming the offending ``section.field``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import pathlib
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ConfigError(f"{name}: must be a positive number, got {value!r}")


def _nonneg(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise ConfigError(f"{name}: must be a non-negative number, got {value!r}")


def _fraction(name, value, open_low=False, open_high=False):
    ok = isinstance(value, (int, float)) and math.isfinite(value)
    if ok:
        ok = (value > 0 if open_low else value >= 0) and (value < 1 if open_high else value <= 1)
    if not ok:
        raise ConfigError(f"{name}: must be a fraction in [0, 1], got {value!r}")


@dataclass
class OnshoreTank:
    volume: float = 50000.0
    initial_fill: float = 0.90
    pressure_setpoint: float = 1.10e5
    overall_U: float = 0.0044
    ambient_T: float = 298.15

    def validate(self, path):
        _positive(f"{path}.volume", self.volume)
        _fraction(f"{path}.initial_fill", self.initial_fill, True, True)
        _positive(f"{path}.pressure_setpoint", self.pressure_setpoint)
        _nonneg(f"{path}.overall_U", self.overall_U)
        _positive(f"{path}.ambient_T", self.ambient_T)


@dataclass
class SeaborneTank:
    volume: float = 45000.0
    initial_fill: float = 0.011
    max_working_pressure: float = 1.15e5
    overall_U: float = 0.0044
    ambient_T: float = 298.15
    stop_fill: float = 0.90

    def validate(self, path):
        _positive(f"{path}.volume", self.volume)
        _fraction(f"{path}.initial_fill", self.initial_fill, True, True)
        _positive(f"{path}.max_working_pressure", self.max_working_pressure)
        _nonneg(f"{path}.overall_U", self.overall_U)
        _positive(f"{path}.ambient_T", self.ambient_T)
        _fraction(f"{path}.stop_fill", self.stop_fill, True, True)
        if self.stop_fill <= self.initial_fill:
            raise ConfigError(f"{path}.stop_fill: must exceed initial_fill")


@dataclass
class Pump:
    ref_speed: float = 60.0
    min_speed: float = 25.0
    max_speed: float = 60.0
    best_point_flow: float = 3250.0
    best_point_dp: float = 2.0e5
    shutoff_head_ratio: float = 1.25
    peak_efficiency: float = 0.60
    efficiency_curvature: float = 0.393
    efficiency_floor: float = 0.05
    speed_lag: float = 5.0

    def validate(self, path):
        for name in ("ref_speed", "min_speed", "max_speed", "best_point_flow", "best_point_dp",
                     "speed_lag"):
            _positive(f"{path}.{name}", getattr(self, name))
        if self.min_speed > self.max_speed:
            raise ConfigError(f"{path}.min_speed: must not exceed max_speed")
        if not self.shutoff_head_ratio > 1.0:
            raise ConfigError(f"{path}.shutoff_head_ratio: must exceed 1")
        _fraction(f"{path}.peak_efficiency", self.peak_efficiency, True)
        _nonneg(f"{path}.efficiency_curvature", self.efficiency_curvature)
        _fraction(f"{path}.efficiency_floor", self.efficiency_floor, True, True)


@dataclass
class LiquidPipe:
    length: float = 1100.0
    internal_diameter: float = 0.406
    roughness: float = 0.07e-3
    heat_ingress_per_m: float = 8.5
    n_cells: int = 20
    parallel_count: int = 2
    wall_thickness: float = 6e-3
    wall_density: float = 7900.0
    wall_cp: float = 10.0
    wall_conductance_per_m: float = 100.0
    initial_wall_T: float = 20.0

    def validate(self, path):
        for name in ("length", "internal_diameter", "wall_thickness", "wall_density",
                     "wall_cp", "wall_conductance_per_m", "initial_wall_T"):
            _positive(f"{path}.{name}", getattr(self, name))
        _nonneg(f"{path}.roughness", self.roughness)
        _nonneg(f"{path}.heat_ingress_per_m", self.heat_ingress_per_m)
        for name in ("n_cells", "parallel_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{path}.{name}: must be an integer >= 1, got {v!r}")


@dataclass
class VaporPipe:
    length: float = 1100.0
    internal_diameter: float = 0.4572
    roughness: float = 0.07e-3
    heat_ingress_per_m: float = 1.0
    parallel_count: int = 2

    def validate(self, path):
        _positive(f"{path}.length", self.length)
        _positive(f"{path}.internal_diameter", self.internal_diameter)
        _nonneg(f"{path}.roughness", self.roughness)
        _nonneg(f"{path}.heat_ingress_per_m", self.heat_ingress_per_m)
        if not isinstance(self.parallel_count, int) or self.parallel_count < 1:
            raise ConfigError(f"{path}.parallel_count: must be an integer >= 1")


@dataclass
class Valves:
    # full-open pressure drop of the LH2 valve at the sizing flow
    lh2_sizing_dp: float = 0.02e5
    lh2_sizing_flow: float = 3585.0
    lh2_characteristic: str = "linear"
    rangeability: float = 50.0
    vapor_return_cv: float = 0.035
    vapor_return_characteristic: str = "linear"
    bog_cv: float = 0.02
    bog_characteristic: str = "linear"
    liquefier_pressure: float = 1.03e5
    valve_lag: float = 2.0

    def validate(self, path):
        for name in ("lh2_sizing_dp", "lh2_sizing_flow", "vapor_return_cv", "bog_cv",
                     "liquefier_pressure", "valve_lag"):
            _positive(f"{path}.{name}", getattr(self, name))
        if not self.rangeability > 1.0:
            raise ConfigError(f"{path}.rangeability: must exceed 1")
        for name in ("lh2_characteristic", "vapor_return_characteristic", "bog_characteristic"):
            if getattr(self, name) not in ("linear", "equal-percentage"):
                raise ConfigError(f"{path}.{name}: must be 'linear' or 'equal-percentage'")


@dataclass
class Loop:
    """Identified plant model of one loop plus its SIMC closed-loop time."""

    gain: float = 1.0
    time_constant: float = 1.0
    dead_time: float = 0.0
    closed_loop_tc: float | None = None

    def validate(self, path):
        if not (isinstance(self.gain, (int, float)) and math.isfinite(self.gain) and self.gain != 0):
            raise ConfigError(f"{path}.gain: must be finite and non-zero")
        _positive(f"{path}.time_constant", self.time_constant)
        _nonneg(f"{path}.dead_time", self.dead_time)
        if self.closed_loop_tc is not None:
            _positive(f"{path}.closed_loop_tc", self.closed_loop_tc)


# plant models from `lh2transfer tune` on the default scenario
def _fc_loop():
    return Loop(gain=7573.05, time_constant=4.996, dead_time=0.0)


def _fc_fixed_loop():
    return Loop(gain=24255.2, time_constant=1.975, dead_time=0.0)


def _pc1_loop():
    return Loop(gain=-19232.8, time_constant=20629.4, dead_time=1.979)


def _pc2_loop():
    return Loop(gain=-401111.6, time_constant=60000.0, dead_time=5.870)


@dataclass
class Control:
    mode: str = "split-range"
    flow_setpoint: float = 3250.0
    split_point: float = 0.5
    fixed_speed: float = 60.0
    fc: Loop = field(default_factory=_fc_loop)
    fc_fixed: Loop = field(default_factory=_fc_fixed_loop)
    pc1: Loop = field(default_factory=_pc1_loop)
    pc2: Loop = field(default_factory=_pc2_loop)

    def validate(self, path):
        if self.mode not in ("split-range", "fixed-speed"):
            raise ConfigError(f"{path}.mode: must be 'split-range' or 'fixed-speed', got {self.mode!r}")
        _positive(f"{path}.flow_setpoint", self.flow_setpoint)
        _fraction(f"{path}.split_point", self.split_point, True, True)
        _positive(f"{path}.fixed_speed", self.fixed_speed)
        for name in ("fc", "fc_fixed", "pc1", "pc2"):
            getattr(self, name).validate(f"{path}.{name}")


@dataclass
class Exergy:
    reference_T: float = 298.15

    def validate(self, path):
        _positive(f"{path}.reference_T", self.reference_T)


@dataclass
class Kpi:
    transferred_mass_t: float = 2812.0
    transferred_volume: float = 40000.0

    def validate(self, path):
        _positive(f"{path}.transferred_mass_t", self.transferred_mass_t)
        _positive(f"{path}.transferred_volume", self.transferred_volume)


@dataclass
class Run:
    rtol: float = 1e-6
    comm_interval: float = 2.5
    max_step: float = 5.0
    time_limit_h: float = 30.0

    def validate(self, path):
        for name in ("rtol", "comm_interval", "max_step", "time_limit_h"):
            _positive(f"{path}.{name}", getattr(self, name))


def _default_parameters():
    return [
        {"name": "pump.peak_efficiency", "low": 0.50, "high": 0.70},
        {"name": "lh2_pipe.heat_ingress_per_m", "low": 5.5, "high": 12.0},
        {"name": "pipe.roughness", "low": 0.04e-3, "high": 0.15e-3},
        {"name": "control.flow_setpoint", "low": 2560.0, "high": 3585.0},
        {"name": "onshore.bor", "low": 0.045, "high": 0.123},
        {"name": "seaborne.bor", "low": 0.046, "high": 0.127},
    ]


@dataclass
class Ugsa:
    n: int = 1000
    seed: int = 20240601
    resamples: int = 100
    bins: int = 50
    # coarser controller/recording interval for campaign runs
    comm_interval: float = 5.0
    parameters: list = field(default_factory=_default_parameters)

    def validate(self, path):
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"{path}.n: must be an integer >= 2")
        if not isinstance(self.resamples, int) or self.resamples < 1:
            raise ConfigError(f"{path}.resamples: must be an integer >= 1")
        if not isinstance(self.bins, int) or self.bins < 1:
            raise ConfigError(f"{path}.bins: must be an integer >= 1")
        _positive(f"{path}.comm_interval", self.comm_interval)
        if not self.parameters:
            raise ConfigError(f"{path}.parameters: must not be empty")
        seen = set()
        for i, p in enumerate(self.parameters):
            where = f"{path}.parameters[{i}]"
            if not isinstance(p, dict) or set(p) != {"name", "low", "high"}:
                raise ConfigError(f"{where}: needs exactly name, low, high")
            if p["name"] not in UGSA_TARGETS:
                raise ConfigError(f"{where}.name: unknown parameter {p['name']!r}")
            if p["name"] in seen:
                raise ConfigError(f"{where}.name: duplicate parameter {p['name']!r}")
            seen.add(p["name"])
            if not p["low"] < p["high"]:
                raise ConfigError(f"{where}: low must be below high")


UGSA_TARGETS = (
    "pump.peak_efficiency",
    "lh2_pipe.heat_ingress_per_m",
    "pipe.roughness",
    "control.flow_setpoint",
    "onshore.bor",
    "seaborne.bor",
    "seaborne.max_working_pressure",
)


@dataclass
class ScenarioConfig:
    onshore: OnshoreTank = field(default_factory=OnshoreTank)
    seaborne: SeaborneTank = field(default_factory=SeaborneTank)
    pump: Pump = field(default_factory=Pump)
    lh2_pipe: LiquidPipe = field(default_factory=LiquidPipe)
    vapor_pipe: VaporPipe = field(default_factory=VaporPipe)
    valves: Valves = field(default_factory=Valves)
    control: Control = field(default_factory=Control)
    exergy: Exergy = field(default_factory=Exergy)
    kpi: Kpi = field(default_factory=Kpi)
    run: Run = field(default_factory=Run)
    ugsa: Ugsa = field(default_factory=Ugsa)

    def validate(self) -> "ScenarioConfig":
        for f in dataclasses.fields(self):
            getattr(self, f.name).validate(f.name)
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Short hash of the resolved configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def replace(self, **dotted) -> "ScenarioConfig":
        """Copy with ``section.key`` style overrides applied."""
        data = self.to_dict()
        for key, value in dotted.items():
            _assign(data, key.replace("__", "."), value)
        return from_dict(data)


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a table, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{sorted(unknown)[0]}: unknown key")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        where = f"{path}.{name}" if path else name
        default = getattr(cls(), name)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        else:
            kwargs[name] = _coerce(where, default, value)
    return cls(**kwargs)


def _coerce(where, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or (default is None and isinstance(value, (int, float))):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return [dict(v) if isinstance(v, dict) else v for v in value]
    return value


def from_dict(data: dict) -> ScenarioConfig:
    """Merge ``data`` onto the defaults and validate."""
    return _build(ScenarioConfig, data, "").validate()


def _assign(data: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = data
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"{dotted}: unknown section {p!r}")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"{dotted}: unknown key")
    node[parts[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """Parse ``section.key=value``; the value is read as a TOML literal."""
    if "=" not in text:
        raise ConfigError(f"override {text!r}: expected section.key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def load_config(path: str | pathlib.Path | None = None, overrides: list[str] | None = None) -> ScenarioConfig:
    """Read a TOML (or JSON) scenario, apply ``--set`` overrides, validate."""
    data: dict = {}
    if path is not None:
        p = pathlib.Path(path)
        try:
            text = p.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from exc
        try:
            if p.suffix.lower() in (".json", ".resolved"):
                data = json.loads(text)
            else:
                data = tomllib.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"{p}: {exc}") from exc
    base = ScenarioConfig().to_dict()
    _merge(base, data, "")
    for item in overrides or []:
        key, value = parse_override(item)
        _assign(base, key, value)
    return from_dict(base)


def _merge(base: dict, new: dict, path: str) -> None:
    if not isinstance(new, dict):
        raise ConfigError(f"{path or 'config'}: expected a table")
    for k, v in new.items():
        where = f"{path}.{k}" if path else k
        if k not in base:
            raise ConfigError(f"{where}: unknown key")
        if isinstance(base[k], dict) and isinstance(v, dict):
            _merge(base[k], v, where)
        else:
            base[k] = v
