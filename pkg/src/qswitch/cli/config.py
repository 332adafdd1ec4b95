"""Strict parsing of the JSON run configuration.

A config is ``{"model": {"type": ..., ...params}, "task": {...}}``. Unknown
keys anywhere are errors, so that a typo in a physics parameter cannot
silently fall back to a default.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from ..errors import ParameterError
from ..models import MODEL_TYPES, SystemModel, model_from_dict

OBJECTIVES = ("numeric", "closed", "perturbative")


def _reject_unknown(where: str, data: dict, allowed) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ParameterError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _number(where: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParameterError(f"{where} must be a number, got {value!r}")
    return float(value)


def load_config(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParameterError(f"config is not valid JSON: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise ParameterError("config must be a JSON object")
    _reject_unknown("config", data, ("model", "task"))
    return data


def parse_model(data: dict[str, Any], required: bool = True) -> SystemModel | None:
    raw = data.get("model")
    if raw is None:
        if required:
            raise ParameterError("config needs a 'model' section")
        return None
    if not isinstance(raw, dict):
        raise ParameterError("'model' must be an object")
    return model_from_dict(raw)


def task_section(data: dict[str, Any], allowed) -> dict[str, Any]:
    task = data.get("task", {})
    if not isinstance(task, dict):
        raise ParameterError("'task' must be an object")
    _reject_unknown("task", task, allowed)
    return task


@dataclass(frozen=True)
class Axis:
    """One swept parameter: either a ``min/max/points/scale`` range or explicit ``values``."""

    name: str
    values: tuple[float, ...]

    @classmethod
    def parse(cls, raw: dict[str, Any], model: SystemModel) -> "Axis":
        if not isinstance(raw, dict):
            raise ParameterError("each axis must be an object")
        _reject_unknown("axis", raw, ("name", "min", "max", "points", "scale", "values"))
        name = raw.get("name")
        names = {f.name for f in fields(type(model))}
        if name not in names:
            raise ParameterError(f"axis {name!r} is not a parameter of {type(model).__name__}")
        if "values" in raw:
            if any(k in raw for k in ("min", "max", "points", "scale")):
                raise ParameterError(f"axis {name}: give either values or min/max/points")
            vals = raw["values"]
            if not isinstance(vals, list) or not vals:
                raise ParameterError(f"axis {name}: values must be a non-empty list")
            return cls(name, tuple(_number(f"axis {name} value", v) for v in vals))
        for key in ("min", "max", "points"):
            if key not in raw:
                raise ParameterError(f"axis {name}: missing {key!r}")
        lo = _number(f"axis {name} min", raw["min"])
        hi = _number(f"axis {name} max", raw["max"])
        points = raw["points"]
        scale = raw.get("scale", "linear")
        if isinstance(points, bool) or not isinstance(points, int) or points < 2:
            raise ParameterError(f"axis {name}: points must be an integer >= 2")
        if not lo < hi:
            raise ParameterError(f"axis {name}: need min < max")
        if scale == "linear":
            step = (hi - lo) / (points - 1)
            vals = [lo + i * step for i in range(points)]
        elif scale == "log":
            if lo <= 0:
                raise ParameterError(f"axis {name}: log scale needs min > 0")
            r = math.log(hi / lo) / (points - 1)
            vals = [lo * math.exp(i * r) for i in range(points)]
        else:
            raise ParameterError(f"axis {name}: scale must be 'linear' or 'log'")
        vals[-1] = hi
        return cls(name, tuple(vals))


@dataclass(frozen=True)
class SweepSpec:
    model: SystemModel
    axes: tuple[Axis, ...]
    objective: str = "numeric"
    apply_efficiency: bool = False

    @classmethod
    def from_config(cls, data: dict[str, Any]) -> "SweepSpec":
        model = parse_model(data)
        task = task_section(data, ("axes", "objective", "apply_efficiency"))
        raw_axes = task.get("axes")
        if not isinstance(raw_axes, list) or not 1 <= len(raw_axes) <= 2:
            raise ParameterError("task.axes must list one or two axes")
        axes = tuple(Axis.parse(a, model) for a in raw_axes)
        if len(axes) == 2 and axes[0].name == axes[1].name:
            raise ParameterError("the two axes must sweep different parameters")
        objective = task.get("objective", "numeric")
        if objective not in OBJECTIVES:
            raise ParameterError(f"objective must be one of {OBJECTIVES}")
        return cls(model, axes, objective, bool(task.get("apply_efficiency", False)))


@dataclass(frozen=True)
class OptimizeSpec:
    """Bounded maximization of a figure of merit over some model parameters."""

    model: SystemModel
    bounds: dict[str, tuple[float, float]]
    objective: str = "numeric"
    grid_points: int = 16
    xatol: float = 1e-6
    max_evaluations: int = 500
    apply_efficiency: bool = False

    @classmethod
    def from_config(cls, data: dict[str, Any]) -> "OptimizeSpec":
        model = parse_model(data)
        task = task_section(
            data,
            ("free", "objective", "grid_points", "xatol", "max_evaluations", "apply_efficiency"),
        )
        free = task.get("free")
        if not isinstance(free, dict) or not free:
            raise ParameterError("task.free must map at least one parameter to [lo, hi]")
        names = {f.name for f in fields(type(model))}
        bounds = {}
        for name, pair in free.items():
            if name not in names:
                raise ParameterError(f"{name!r} is not a parameter of {type(model).__name__}")
            if not isinstance(pair, list) or len(pair) != 2:
                raise ParameterError(f"bounds for {name} must be [lo, hi]")
            lo, hi = (_number(f"bound of {name}", v) for v in pair)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ParameterError(f"bounds for {name} must be finite with lo < hi")
            bounds[name] = (lo, hi)
        objective = task.get("objective", "numeric")
        if objective not in OBJECTIVES:
            raise ParameterError(f"objective must be one of {OBJECTIVES}")
        grid_points = task.get("grid_points", 16)
        if isinstance(grid_points, bool) or not isinstance(grid_points, int) or grid_points < 2:
            raise ParameterError("grid_points must be an integer >= 2")
        max_eval = task.get("max_evaluations", 500)
        if isinstance(max_eval, bool) or not isinstance(max_eval, int) or max_eval < 1:
            raise ParameterError("max_evaluations must be a positive integer")
        xatol = _number("xatol", task.get("xatol", 1e-6))
        return cls(model, bounds, objective, grid_points, xatol, max_eval,
                   bool(task.get("apply_efficiency", False)))


__all__ = [
    "Axis",
    "MODEL_TYPES",
    "OBJECTIVES",
    "OptimizeSpec",
    "SweepSpec",
    "load_config",
    "parse_model",
    "task_section",
]
