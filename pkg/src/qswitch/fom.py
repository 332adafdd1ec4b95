"""Figures of merit, optimal temporal modes and the feeding fidelity.

The Gram-integral route (:func:`fom_numeric`) is the primary evaluation
path; the closed forms and perturbative approximants exist to cross-check
it and to expose the parameter dependence.

Unless ``apply_efficiency`` is set, results exclude the waveguide coupling
efficiency ``eta / eta_tot`` of the three-mode and dispersive settings.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import linalg
from .errors import NumericalFailure, ParameterError
from .models import (
    DispersiveParams,
    QubitParams,
    SystemModel,
    ThreeModeParams,
    TwoModeParams,
    dispersive_coupling,
    dynamics_matrix,
    emission_rate,
    model_to_dict,
)

__all__ = [
    "FomResult",
    "TemporalProfile",
    "evaluate",
    "feeding_fidelity",
    "fom_closed_dispersive",
    "fom_closed_three_mode",
    "fom_closed_two_mode",
    "fom_numeric",
    "fom_perturbative_dispersive",
    "fom_perturbative_three_mode",
    "fom_qubit",
    "input_profile",
    "output_profile",
]

Method = Literal["numeric-gram", "closed-form", "perturbative", "qubit-adiabatic"]

VALUE_SLACK = 1e-12
TAIL_TOL = 1e-9
GRID_STEP = 0.01


@dataclass(frozen=True)
class FomResult:
    """A figure-of-merit value with provenance.

    ``epsilon`` carries the expansion parameter of perturbative results.
    """

    value: float
    method: Method
    coupling_efficiency_applied: bool = False
    model: str = "custom"
    epsilon: float | None = None

    def __post_init__(self):
        if not -VALUE_SLACK <= self.value <= 1 + VALUE_SLACK:
            raise NumericalFailure(
                f"{self.method} figure of merit {self.value!r} outside [0, 1]"
            )


def _tag(model: SystemModel) -> str:
    return model_to_dict(model)["type"]


def _efficiency_factor(model, apply_efficiency: bool) -> float:
    return model.efficiency if apply_efficiency else 1.0


def fom_numeric(K, emit_rate: float, efficiency: float | None = None,
                model: str = "custom") -> FomResult:
    """``efficiency * emit_rate * ∫ |exp(-K t)[0, 1]|^2 dt`` via the Gram integral.

    ``efficiency=None`` leaves the coupling efficiency out of the value.
    """
    if not emit_rate >= 0:
        raise ParameterError(f"emission rate must be >= 0, got {emit_rate!r}")
    if efficiency is not None and not 0 <= efficiency <= 1:
        raise ParameterError(f"efficiency must lie in [0, 1], got {efficiency!r}")
    gram = linalg.gram_integral(K)
    value = emit_rate * gram.element(0, 1, 1, 0).real
    if efficiency is not None:
        value *= efficiency
    return FomResult(value, "numeric-gram", efficiency is not None, model)


def fom_closed_two_mode(p: TwoModeParams) -> FomResult:
    """Closed-form transmissivity of the cavity-scatterer-waveguide chain."""
    gt = p.gamma_tot
    if p.g == 0:
        if p.kappa == 0:
            raise ParameterError("g = 0 with kappa = 0 is indeterminate")
        return FomResult(0.0, "closed-form", model="two_mode")
    if gt <= 0:
        raise ParameterError("gamma + gamma_ext must be > 0")
    # (1 - gamma_ext/gt) / (1 + kappa/gt + (gt kappa + kappa^2) / 4g^2), cleared of
    # divisions by g^2 so that a vanishingly small coupling cannot overflow.
    g2 = 4 * p.g**2
    value = g2 * p.gamma / ((gt + p.kappa) * (g2 + p.kappa * gt))
    return FomResult(value, "closed-form", model="two_mode")


def fom_closed_three_mode(p: ThreeModeParams, apply_efficiency: bool = False) -> FomResult:
    """Full closed form for the three-mode (auxiliary cavity) setting."""
    et = p.eta_tot
    if et <= 0:
        raise ParameterError("eta_tot must be > 0")
    if p.lam == 0 or p.lam_p == 0:
        value = 0.0
    else:
        n = p.n
        G, k = p.Gamma, p.kappa
        l2, lp2 = p.lam**2, p.lam_p**2
        loss = G + k
        num = et * 16 * l2 * lp2 * n**2 * (loss + et)
        den = (4 * k * lp2 * n + et * (G * k + 4 * l2 * n)) * (
            loss * (G * k + 4 * l2 * n)
            + 4 * G * lp2 * n
            + et * (loss**2 + 4 * lp2 * n + loss * et)
        )
        value = num / den
    value *= _efficiency_factor(p, apply_efficiency)
    return FomResult(value, "closed-form", apply_efficiency, "three_mode")


def fom_closed_dispersive(p: DispersiveParams, apply_efficiency: bool = False) -> FomResult:
    """Full closed form for the dispersive (off-resonant atoms) setting."""
    g, kp = dispersive_coupling(p)
    gt, k = p.eta_tot, p.kappa
    if g == 0 and k + kp == 0:
        raise ParameterError("g = 0 with kappa = kappa' = 0 is indeterminate")
    g2 = 4 * g**2
    s = gt + k + 2 * kp
    num = gt * (g2 + kp**2) * s
    den = s**2 * (gt * (k + kp) + k * kp) + g2 * (gt + k) * (gt + k + 4 * kp)
    value = num / den * _efficiency_factor(p, apply_efficiency)
    return FomResult(value, "closed-form", apply_efficiency, "dispersive")


def fom_qubit(p: QubitParams) -> FomResult:
    """Ratio of waveguide emission to total emission with the qubit eliminated."""
    gt = p.gamma_tot
    if p.g == 0:
        if p.kappa == 0:
            raise ParameterError("g = 0 with kappa = 0 is indeterminate")
        return FomResult(0.0, "qubit-adiabatic", model="qubit")
    g2 = 4 * p.g**2
    value = g2 * p.gamma / (gt * (g2 + gt * p.kappa))
    return FomResult(value, "qubit-adiabatic", model="qubit")


def fom_perturbative_three_mode(p: ThreeModeParams, apply_efficiency: bool = False) -> FomResult:
    """Leading-order cooperativity form, valid for couplings small against eta_tot."""
    if p.lam_p == 0:
        raise ParameterError("perturbative form needs lam_p != 0")
    et = p.eta_tot
    eps = max(abs(p.lam), abs(p.lam_p)) * math.sqrt(p.n) / et
    coop = 4 * p.n * p.lam_p**2
    value = coop / (coop + (p.Gamma + p.kappa) * et)
    value *= _efficiency_factor(p, apply_efficiency)
    return FomResult(value, "perturbative", apply_efficiency, "three_mode", eps)


def fom_perturbative_dispersive(p: DispersiveParams, apply_efficiency: bool = False) -> FomResult:
    g, kp = dispersive_coupling(p)
    gt = p.eta_tot
    g2 = 4 * g**2
    if g2 == 0 and p.kappa + kp == 0:
        raise ParameterError("g = 0 with kappa = kappa' = 0 is indeterminate")
    value = g2 / (g2 + gt * (p.kappa + kp))
    value *= _efficiency_factor(p, apply_efficiency)
    return FomResult(value, "perturbative", apply_efficiency, "dispersive", abs(g) / gt)


def evaluate(model: SystemModel, method: str = "numeric",
             apply_efficiency: bool = False) -> FomResult:
    """Figure of merit of ``model`` by ``method`` (numeric, closed, perturbative).

    Qubit scatterers only support the adiabatic form; any method name maps to it.
    """
    if isinstance(model, QubitParams):
        return fom_qubit(model)
    if method == "numeric":
        eff = None
        if apply_efficiency and not isinstance(model, TwoModeParams):
            eff = model.efficiency
        return fom_numeric(dynamics_matrix(model), emission_rate(model), eff, _tag(model))
    if method == "closed":
        if isinstance(model, TwoModeParams):
            return fom_closed_two_mode(model)
        if isinstance(model, ThreeModeParams):
            return fom_closed_three_mode(model, apply_efficiency)
        return fom_closed_dispersive(model, apply_efficiency)
    if method == "perturbative":
        if isinstance(model, ThreeModeParams):
            return fom_perturbative_three_mode(model, apply_efficiency)
        if isinstance(model, DispersiveParams):
            return fom_perturbative_dispersive(model, apply_efficiency)
        raise ParameterError("two_mode models have no perturbative form")
    raise ParameterError(f"unknown method {method!r}")


def applicable_methods(model: SystemModel) -> list[str]:
    if isinstance(model, QubitParams):
        return ["qubit"]
    if isinstance(model, TwoModeParams):
        return ["numeric", "closed"]
    return ["numeric", "closed", "perturbative"]


def feeding_fidelity(K, emit_rate: float, efficiency: float | None = None,
                     model: str = "custom") -> FomResult:
    """Transmissivity of the reverse process, loading the cavity from the waveguide.

    The input dynamics are ``A = -K^†``; the profile integral over negative
    times becomes a Gram integral of ``K^†`` over positive times.
    """
    K = linalg.as_square(K)
    if not emit_rate >= 0:
        raise ParameterError(f"emission rate must be >= 0, got {emit_rate!r}")
    gram = linalg.gram_integral(K.conj().T)
    value = emit_rate * gram.element(0, 1, 1, 0).real
    if efficiency is not None:
        value *= efficiency
    return FomResult(value, "numeric-gram", efficiency is not None, model)


# -- temporal profiles -------------------------------------------------------


@dataclass(frozen=True)
class TemporalProfile:
    """Sampled complex profile on a strictly increasing time grid.

    ``mass`` is the exact integral of ``|amplitude|^2`` the samples
    represent (1 for normalized modes); ``norm_error`` compares it against
    the trapezoidal estimate from the samples.
    """

    times: np.ndarray
    amplitudes: np.ndarray
    kind: Literal["output-u", "input-w", "emitted"]
    norm_error: float
    mass: float = 1.0
    label: str = field(default="", compare=False)

    def discrete_mass(self) -> float:
        return float(np.trapezoid(np.abs(self.amplitudes) ** 2, self.times))

    def to_csv(self, header: str | None = None) -> str:
        """Render as ``t,re,im`` rows preceded by a ``#`` comment line."""
        buf = io.StringIO()
        buf.write(f"# {header if header is not None else self.label}\n")
        buf.write("t,re,im\n")
        for t, a in zip(self.times.tolist(), self.amplitudes.tolist()):
            buf.write(f"{t!r},{a.real!r},{a.imag!r}\n")
        return buf.getvalue()


def _tail_fraction(K: np.ndarray, gram: linalg.GramIntegral, T: float) -> float:
    # ∫_T^∞ |exp(-K s)[0,1]|^2 ds = e0^T E X E^† e0 with E = exp(-K T).
    E = linalg.expm(K, T)
    X = gram.column_gram(1)
    row = E[0]
    tail = (row @ X @ row.conj()).real
    return max(tail, 0.0) / gram.element(0, 1, 1, 0).real


def _default_tmax(K: np.ndarray, gram: linalg.GramIntegral, tail_tol: float) -> float:
    decay = np.linalg.eigvals(K).real.min()
    T = 1.0 / decay
    while _tail_fraction(K, gram, T) >= tail_tol:
        T *= 1.5
    return T


def _sample(K: np.ndarray, times: np.ndarray) -> np.ndarray:
    steps = np.diff(times)
    if steps.size and np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        E = linalg.propagate(K, float(steps[0]), times.size)
        if times[0] != 0.0:
            E = linalg.expm(K, float(times[0])) @ E
        return E
    return np.array([linalg.expm(K, float(t)) for t in times])


def _check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or not np.all(np.diff(times) > 0):
        raise ParameterError("time grid must be a strictly increasing 1-D array")
    return times


def _profile_samples(K, grid, dt, tail_tol):
    """Samples of ``exp(-K t)[0, 1]`` for ``t >= 0`` and the exact norm."""
    K = linalg.as_square(K)
    gram = linalg.gram_integral(K)
    total = gram.element(0, 1, 1, 0).real
    if total <= 1e-300:
        raise ParameterError("decoupled cavity: nothing is emitted, profile undefined")
    if grid is None:
        if dt is None:
            dt = GRID_STEP / np.linalg.norm(K, 2)
        tmax = _default_tmax(K, gram, tail_tol)
        times = np.arange(0.0, tmax + dt, dt)
    else:
        times = _check_grid(grid)
        if times[0] < 0:
            raise ParameterError("output-profile grid must start at t >= 0")
        tail = _tail_fraction(K, gram, float(times[-1]))
        if tail > tail_tol:
            raise NumericalFailure(
                f"grid too short: tail mass fraction {tail:.3g} beyond t={times[-1]:g}"
            )
    samples = _sample(K, times)[:, 0, 1]
    return times, samples, total


def output_profile(K, grid=None, *, dt: float | None = None,
                   tail_tol: float = TAIL_TOL, label: str = "") -> TemporalProfile:
    """Normalized optimal output mode ``u(t) ∝ exp(-K t)[0, 1]`` on ``t >= 0``.

    The normalization uses the exact Gram-integral value, with a real
    positive constant so ``u`` inherits the phase of the matrix element.
    """
    times, samples, total = _profile_samples(K, grid, dt, tail_tol)
    u = samples / math.sqrt(total)
    norm_error = abs(1.0 - float(np.trapezoid(np.abs(u) ** 2, times)))
    return TemporalProfile(times, u, "output-u", norm_error, 1.0, label)


def input_profile(K, grid=None, *, dt: float | None = None,
                  tail_tol: float = TAIL_TOL, label: str = "") -> TemporalProfile:
    """Normalized feeding mode ``w(t) ∝ exp(-A t)[0, 1]`` on ``t <= 0``, ``A = -K^†``.

    ``grid``, if given, must be non-positive times.
    """
    K = linalg.as_square(K)
    Kd = K.conj().T
    if grid is not None:
        times = _check_grid(grid)
        if times[-1] > 0:
            raise ParameterError("input-profile grid must end at t <= 0")
        rev = -times[::-1]
    else:
        rev = None
    # exp(-A t) with t = -s is exp(-K^† s).
    s, samples, total = _profile_samples(Kd, rev, dt, tail_tol)
    w = (samples / math.sqrt(total))[::-1]
    times = -s[::-1]
    norm_error = abs(1.0 - float(np.trapezoid(np.abs(w) ** 2, times)))
    return TemporalProfile(times, w, "input-w", norm_error, 1.0, label)
