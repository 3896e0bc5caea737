"""Run configuration: one TOML file, one table per stage.

Validation happens before any computation. Unknown tables or keys and
out-of-range values raise :class:`ConfigError` with a dotted field path.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import tomli

from .errors import ConfigError

_pos = {"type": "number", "exclusiveMinimum": 0}
_sector = {"enum": ["interior", "exterior"]}
_window = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "bethe": {
            "type": "object",
            "additionalProperties": False,
            "required": ["L", "N"],
            "properties": {
                "L": {"type": "integer", "minimum": 1},
                "N": {"type": "integer", "minimum": 0},
                "qn": {"type": "array", "items": {"type": "number"}},
                "sector": _sector,
                "tol": _pos,
                "kappa": _pos,
                "delta": _pos,
                "convention": {"enum": ["qcd", "nls"]},
            },
        },
        "thermo": {
            "type": "object",
            "additionalProperties": False,
            "required": ["h"],
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
                "q": _pos,
                "resolution": {"type": "integer", "minimum": 8},
                "sector": _sector,
                "cutoff": _pos,
            },
        },
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "required": ["h", "L_list"],
            "properties": {
                "h": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
                "L_list": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 4, "multipleOf": 2},
                    "minItems": 4,
                    "uniqueItems": True,
                },
                "window": _window,
                "nuisance": {"type": "boolean"},
                "refine": {"type": "boolean"},
                "resolution": {"type": "integer", "minimum": 8},
                "sector": _sector,
            },
        },
        "quench": {
            "type": "object",
            "additionalProperties": False,
            "required": ["L"],
            "properties": {
                "model": {"enum": ["xxx"]},
                "L": {"type": "integer", "minimum": 4, "maximum": 24, "multipleOf": 4},
                "periodic": {"type": "boolean"},
                "t_max": _pos,
                "dt": _pos,
                "cut": {"type": "integer", "minimum": 1},
                "window": _window,
                "smooth": {"type": "boolean"},
                "tol": _pos,
            },
        },
        "osee": {
            "type": "object",
            "additionalProperties": False,
            "required": ["L"],
            "properties": {
                "L": {"type": "integer", "minimum": 2, "maximum": 14},
                "periodic": {"type": "boolean"},
                "operator": {"enum": ["projector_down", "identity"]},
                "site": {"type": "integer", "minimum": 0},
                "cut": {"type": "integer", "minimum": 1},
                "t_max": _pos,
                "dt": _pos,
                "window": _window,
            },
        },
        "dis": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m", "x"],
            "properties": {
                "m": _pos,
                "x": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "Q": _pos,
                "c": _pos,
                "curve_points": {"type": "integer", "minimum": 2},
            },
        },
    },
}


@dataclass(frozen=True)
class BetheConfig:
    L: int
    N: int
    qn: list | None = None
    sector: str = "exterior"
    tol: float = 1e-12
    kappa: float = 1.0
    delta: float = 2.0
    convention: str = "qcd"


@dataclass(frozen=True)
class ThermoConfig:
    h: float
    q: float | None = None
    resolution: int = 64
    sector: str = "interior"
    cutoff: float = 1e4


@dataclass(frozen=True)
class ScalingConfig:
    h: float
    L_list: list
    window: list | None = None
    nuisance: bool = True
    refine: bool = True
    resolution: int = 64
    sector: str = "interior"


@dataclass(frozen=True)
class QuenchConfig:
    L: int
    model: str = "xxx"
    periodic: bool = True
    t_max: float | None = None
    dt: float = 0.125
    cut: int | None = None
    window: list | None = None
    smooth: bool = True
    tol: float = 1e-9


@dataclass(frozen=True)
class OseeConfig:
    L: int
    periodic: bool = False
    operator: str = "projector_down"
    site: int | None = None
    cut: int | None = None
    t_max: float = 6.0
    dt: float = 0.5
    window: list | None = None


@dataclass(frozen=True)
class DisConfig:
    m: float
    x: float
    Q: float = 1.0
    c: float | None = None
    curve_points: int = 50


_TABLES = {
    "bethe": BetheConfig,
    "thermo": ThermoConfig,
    "scaling": ScalingConfig,
    "quench": QuenchConfig,
    "osee": OseeConfig,
    "dis": DisConfig,
}


@dataclass(frozen=True)
class RunConfig:
    bethe: BetheConfig | None = None
    thermo: ThermoConfig | None = None
    scaling: ScalingConfig | None = None
    quench: QuenchConfig | None = None
    osee: OseeConfig | None = None
    dis: DisConfig | None = None
    source: str | None = field(default=None, compare=False)

    def echo(self):
        return {k: asdict(getattr(self, k)) for k in _TABLES if getattr(self, k) is not None}

    def require(self, table):
        val = getattr(self, table)
        if val is None:
            raise ConfigError(table, "table is required by this subcommand")
        return val


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        parts.append(missing)
    elif err.validator == "additionalProperties":
        extra = err.message.split("'")[1] if "'" in err.message else "?"
        parts.append(extra)
    return ".".join(parts) or "<root>"


def _semantic_checks(cfg: RunConfig):
    b = cfg.bethe
    if b is not None and b.qn is not None and len(b.qn) != b.N:
        raise ConfigError("bethe.qn", f"expected {b.N} entries, got {len(b.qn)}")
    s = cfg.scaling
    if s is not None and s.window is not None and s.window[0] > s.window[1]:
        raise ConfigError("scaling.window", "lower bound exceeds upper bound")
    q = cfg.quench
    if q is not None and q.cut is not None and q.cut >= q.L:
        raise ConfigError("quench.cut", "cut must be smaller than L")
    o = cfg.osee
    if o is not None:
        if o.site is not None and o.site >= o.L:
            raise ConfigError("osee.site", "site must be smaller than L")
        if o.cut is not None and o.cut >= o.L:
            raise ConfigError("osee.cut", "cut must be smaller than L")


def parse_config(data: dict, source=None) -> RunConfig:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(_path(err), err.message)
    tables = {k: _TABLES[k](**v) for k, v in data.items()}
    cfg = RunConfig(**tables, source=source)
    _semantic_checks(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError("<file>", f"{path} not found") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<file>", f"TOML syntax error: {exc}") from exc
    return parse_config(raw, source=str(path))
