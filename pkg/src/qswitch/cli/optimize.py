"""Bounded derivative-free maximization: coarse grid pre-scan, then Nelder-Mead."""

from __future__ import annotations

import dataclasses
import itertools
import math
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import NumericalFailure, ParameterError
from .config import OptimizeSpec
from .sweep import evaluate_point


@dataclasses.dataclass(frozen=True)
class OptimumReport:
    x: tuple[float, ...]
    value: float
    evaluations: int
    prescan_x: tuple[float, ...]
    prescan_value: float
    converged: bool


def maximize(func: Callable[[np.ndarray], float],
             bounds: Sequence[tuple[float, float]],
             grid_points: int = 16,
             xatol: float = 1e-6,
             max_evaluations: int = 500) -> OptimumReport:
    """Maximize ``func`` inside a box.

    A ``grid_points``-per-axis grid picks the start (NaN counts as worst,
    ties go to the lowest flat index); Nelder-Mead with reflection,
    expansion, contraction and shrink coefficients 1, 2, 0.5, 0.5 then
    refines until the simplex is smaller than ``xatol``.

    Raises
    ------
    NumericalFailure
        If the objective is NaN at every grid point.
    """
    bounds = [(float(lo), float(hi)) for lo, hi in bounds]
    if not bounds:
        raise ParameterError("need at least one free parameter")
    for lo, hi in bounds:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ParameterError(f"invalid bounds ({lo}, {hi})")
    axes = [np.linspace(lo, hi, grid_points) for lo, hi in bounds]
    best_x, best_v = None, -math.inf
    count = 0
    for combo in itertools.product(*axes):
        v = func(np.array(combo))
        count += 1
        if not math.isnan(v) and v > best_v:
            best_x, best_v = np.array(combo), v
    if best_x is None:
        raise NumericalFailure("objective is NaN over the whole pre-scan grid")

    def neg(x):
        v = func(x)
        return math.inf if math.isnan(v) else -v

    steps = [(hi - lo) / (grid_points - 1) for lo, hi in bounds]
    simplex = [best_x]
    for i, (lo, hi) in enumerate(bounds):
        vertex = best_x.copy()
        vertex[i] += steps[i] if vertex[i] + steps[i] <= hi else -steps[i]
        simplex.append(vertex)
    res = minimize(
        neg, best_x, method="Nelder-Mead", bounds=bounds,
        options={
            "xatol": xatol, "fatol": math.inf, "maxfev": max_evaluations,
            "initial_simplex": np.array(simplex), "adaptive": False,
        },
    )
    x, value = res.x, -res.fun
    if value < best_v:
        x, value = best_x, best_v
    return OptimumReport(
        tuple(float(v) for v in x), float(value), count + int(res.nfev),
        tuple(float(v) for v in best_x), float(best_v), bool(res.success),
    )


def run_optimize(spec: OptimizeSpec) -> OptimumReport:
    names = list(spec.bounds)

    def objective(x):
        value, _, _ = evaluate_point(
            spec.model, dict(zip(names, map(float, x))), spec.objective, spec.apply_efficiency
        )
        return value

    return maximize(objective, [spec.bounds[n] for n in names], spec.grid_points,
                    spec.xatol, spec.max_evaluations)
