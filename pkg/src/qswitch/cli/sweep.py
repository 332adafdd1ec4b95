"""Grid evaluation of a figure of merit over one or two model parameters."""

from __future__ import annotations

import dataclasses
import io
import itertools
import json
import math

from ..errors import QSwitchError
from ..fom import evaluate
from .config import SweepSpec

METHOD_NAMES = {"numeric": "numeric-gram", "closed": "closed-form", "perturbative": "perturbative"}


def evaluate_point(model, overrides: dict, objective: str, apply_efficiency: bool = False):
    """Return ``(value, method, reason)``; invalid points give ``(nan, method, reason)``."""
    try:
        point = dataclasses.replace(model, **overrides)
        res = evaluate(point, objective, apply_efficiency)
    except QSwitchError as exc:
        return math.nan, METHOD_NAMES.get(objective, objective), str(exc)
    return res.value, res.method, ""


def run_sweep(spec: SweepSpec) -> list[dict]:
    """Rows in row-major axis order (last axis varies fastest)."""
    names = [a.name for a in spec.axes]
    rows = []
    for combo in itertools.product(*(a.values for a in spec.axes)):
        overrides = dict(zip(names, combo))
        value, method, reason = evaluate_point(
            spec.model, overrides, spec.objective, spec.apply_efficiency
        )
        rows.append({**overrides, "value": value, "method": method, "reason": reason})
    return rows


def rows_to_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for col in columns:
            v = row[col]
            if isinstance(v, float):
                cells.append(repr(v))
            else:
                text = str(v)
                cells.append(f'"{text}"' if ("," in text or '"' in text) else text)
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def sweep_columns(spec: SweepSpec) -> list[str]:
    return [a.name for a in spec.axes] + ["value", "method", "reason"]


def rows_to_json(rows: list[dict]) -> str:
    clean = [
        {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
        for row in rows
    ]
    return json.dumps(clean, indent=1)
