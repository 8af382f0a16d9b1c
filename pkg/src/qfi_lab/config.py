"""Versioned JSON run configuration for sweeps."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .model import load_convention
from .sweep import Axis, SweepSpec

VERSION = 1
PRESETS = ("fig1", "fig2", "fig3")

_TOP = {"version", "scheme", "axis1", "axis2", "fixed", "p24", "symmetric_part",
        "steady_method", "convention", "output"}
_AXIS = {"name", "start", "stop", "count"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    spec: SweepSpec
    output: Optional[str] = None


def _axis(obj, where: str) -> Axis:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - _AXIS
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    missing = _AXIS - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing field(s) {sorted(missing)}")
    try:
        return Axis(str(obj["name"]), float(obj["start"]), float(obj["stop"]), int(obj["count"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"{where}: expected a number or [re, im]")


def parse_config(obj: dict, base: Path = Path(".")) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _TOP
    if unknown:
        raise ConfigError(f"unknown field(s) {sorted(unknown)}")
    if obj.get("version") != VERSION:
        raise ConfigError(f"version: expected {VERSION}, got {obj.get('version')!r}")
    if "scheme" not in obj or "axis1" not in obj:
        raise ConfigError("scheme and axis1 are required")
    fixed = obj.get("fixed", {})
    if not isinstance(fixed, dict):
        raise ConfigError("fixed: expected an object")
    conv = None
    if obj.get("convention"):
        path = base / obj["convention"]
        if not path.is_file():
            raise ConfigError(f"convention: file {path} not found")
        conv = load_convention(path)
    try:
        spec = SweepSpec(
            scheme=obj["scheme"],
            axis1=_axis(obj["axis1"], "axis1"),
            axis2=_axis(obj["axis2"], "axis2") if obj.get("axis2") is not None else None,
            fixed={k: float(v) for k, v in fixed.items()},
            p24=_complex(obj.get("p24", 0.0), "p24"),
            steady_method=obj.get("steady_method"),
            symmetric_part=obj.get("symmetric_part", "g"),
            convention=conv,
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out = obj.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output: expected a path string")
    return RunConfig(spec, out)


def load_config(ref: str) -> RunConfig:
    """Load a config file, or a shipped preset by name (``fig1``...)."""
    if ref in PRESETS or ref in {p + ".json" for p in PRESETS}:
        name = ref if ref.endswith(".json") else ref + ".json"
        text = resources.files("qfi_lab").joinpath("presets", name).read_text()
        base = Path(".")
    else:
        path = Path(ref)
        if not path.is_file():
            raise ConfigError(f"config file {ref} not found")
        text = path.read_text()
        base = path.parent
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.msg}") from exc
    return parse_config(obj, base)
