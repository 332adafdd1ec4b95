"""Parameter sets for each physical setting and their dynamics matrices.

All rates and couplings share one arbitrary frequency unit. Validity
regimes of the approximations behind each reduction are *reported* as
ratios, never enforced, so that regime breakdown can be probed on purpose.
"""

from __future__ import annotations

import math
from dataclasses import MISSING, asdict, dataclass, fields
from typing import Any, NamedTuple, Union

import numpy as np

from .errors import ParameterError

__all__ = [
    "DispersiveParams",
    "MODEL_TYPES",
    "PurcellReduction",
    "QubitParams",
    "SystemModel",
    "ThreeLevelReduction",
    "ThreeModeParams",
    "TwoModeParams",
    "ValidityReport",
    "build_M",
    "build_Mdoubleprime",
    "build_Mprime",
    "dispersive_coupling",
    "dynamics_matrix",
    "emission_rate",
    "holstein_primakoff_validity",
    "model_from_dict",
    "model_to_dict",
    "purcell_reduce",
    "three_level_reduce",
]


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")


def _require_rate(name: str, value: float) -> None:
    _require_finite(name, value)
    if value < 0:
        raise ParameterError(f"{name} must be >= 0, got {value!r}")


def _require_atoms(n: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n!r}")


@dataclass(frozen=True)
class TwoModeParams:
    """Cavity coupled to a bosonic scatterer that radiates into a waveguide."""

    g: float
    kappa: float
    gamma: float
    gamma_ext: float = 0.0

    def __post_init__(self):
        _require_finite("g", self.g)
        for name in ("kappa", "gamma", "gamma_ext"):
            _require_rate(name, getattr(self, name))
        if self.gamma_tot <= 0 and self.kappa <= 0:
            raise ParameterError("need gamma + gamma_ext > 0 or kappa > 0")

    @property
    def gamma_tot(self) -> float:
        return self.gamma + self.gamma_ext

    @property
    def cooperativity(self) -> float:
        denom = self.kappa * self.gamma_tot
        return math.inf if denom == 0 else 4 * self.g**2 / denom


@dataclass(frozen=True)
class ThreeModeParams:
    """Atomic ensemble (bosonized) coupled to the cavity and an auxiliary mode."""

    lam: float
    lam_p: float
    n: int
    kappa: float
    eta: float
    eta_ext: float = 0.0
    Gamma: float = 0.0

    def __post_init__(self):
        _require_finite("lam", self.lam)
        _require_finite("lam_p", self.lam_p)
        _require_atoms(self.n)
        object.__setattr__(self, "n", int(self.n))
        for name in ("kappa", "eta", "eta_ext", "Gamma"):
            _require_rate(name, getattr(self, name))
        if self.eta_tot <= 0:
            raise ParameterError("eta + eta_ext must be > 0")

    @property
    def eta_tot(self) -> float:
        return self.eta + self.eta_ext

    @property
    def efficiency(self) -> float:
        """Waveguide coupling efficiency eta / eta_tot."""
        return self.eta / self.eta_tot


@dataclass(frozen=True)
class DispersiveParams:
    """Off-resonant atoms mediating a beam-splitter coupling between two modes.

    ``nbar`` bounds the cavity excitation for the dispersive-validity ratio.
    """

    lam: float
    Delta: float
    n: int
    kappa: float
    eta: float
    eta_ext: float = 0.0
    Gamma: float = 0.0
    nbar: float = 10.0

    def __post_init__(self):
        _require_finite("lam", self.lam)
        _require_finite("Delta", self.Delta)
        if self.Delta == 0:
            raise ParameterError("Delta must be nonzero")
        _require_atoms(self.n)
        object.__setattr__(self, "n", int(self.n))
        for name in ("kappa", "eta", "eta_ext", "Gamma", "nbar"):
            _require_rate(name, getattr(self, name))
        if self.eta_tot <= 0:
            raise ParameterError("eta + eta_ext must be > 0")
        g, kappa_p = dispersive_coupling(self)
        if not (math.isfinite(g) and math.isfinite(kappa_p)):
            raise ParameterError("Delta is too small: effective couplings overflow")

    @property
    def eta_tot(self) -> float:
        return self.eta + self.eta_ext

    gamma_tot = eta_tot

    @property
    def efficiency(self) -> float:
        return self.eta / self.eta_tot

    @property
    def g(self) -> float:
        """Signed effective coupling ``-n lam^2 / Delta``."""
        return dispersive_coupling(self)[0]

    @property
    def kappa_p(self) -> float:
        """Atom-induced decay ``n Gamma (lam / Delta)^2`` of the mode sum."""
        return dispersive_coupling(self)[1]

    @property
    def dispersive_ratio(self) -> float:
        """``lam sqrt(n nbar) / |Delta|``; must be small for the elimination."""
        return abs(self.lam) * math.sqrt(self.n * self.nbar) / abs(self.Delta)


@dataclass(frozen=True)
class QubitParams:
    """Two-level scatterer in the fast-emission regime."""

    g: float
    kappa: float
    gamma: float
    gamma_ext: float = 0.0
    nbar: float = 1.0

    def __post_init__(self):
        _require_finite("g", self.g)
        for name in ("kappa", "gamma", "gamma_ext", "nbar"):
            _require_rate(name, getattr(self, name))
        if self.gamma_tot <= 0:
            raise ParameterError("gamma + gamma_ext must be > 0")

    @property
    def gamma_tot(self) -> float:
        return self.gamma + self.gamma_ext

    def fast_emission(self, threshold: float = 10.0) -> "ValidityReport":
        """Check ``gamma >= threshold * g sqrt(nbar)``."""
        scale = abs(self.g) * math.sqrt(self.nbar)
        ratio = math.inf if self.gamma == 0 else scale / self.gamma
        return ValidityReport("fast_emission", ratio, 1.0 / threshold, ratio <= 1.0 / threshold)


SystemModel = Union[TwoModeParams, ThreeModeParams, DispersiveParams, QubitParams]

MODEL_TYPES: dict[str, type] = {
    "two_mode": TwoModeParams,
    "three_mode": ThreeModeParams,
    "dispersive": DispersiveParams,
    "qubit": QubitParams,
}


class ValidityReport(NamedTuple):
    """Outcome of a regime check: ``ok`` iff ``ratio`` is under ``threshold``."""

    name: str
    ratio: float
    threshold: float
    ok: bool


class PurcellReduction(NamedTuple):
    params: TwoModeParams
    ratio: float


class ThreeLevelReduction(NamedTuple):
    lam: float
    lam_p: float
    ratio: float
    valid: bool


def model_to_dict(model: SystemModel) -> dict[str, Any]:
    """Serialize a parameter set as ``{"type": ..., **fields}``."""
    for tag, cls in MODEL_TYPES.items():
        if type(model) is cls:
            return {"type": tag, **asdict(model)}
    raise ParameterError(f"unknown model object {model!r}")


def model_from_dict(data: dict[str, Any]) -> SystemModel:
    """Inverse of :func:`model_to_dict`; unknown keys are rejected."""
    data = dict(data)
    tag = data.pop("type", None)
    if tag not in MODEL_TYPES:
        raise ParameterError(f"model.type must be one of {sorted(MODEL_TYPES)}, got {tag!r}")
    cls = MODEL_TYPES[tag]
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ParameterError(f"unknown {tag} parameter(s): {', '.join(unknown)}")
    required = {f.name for f in fields(cls) if f.default is MISSING}
    missing = sorted(required - set(data))
    if missing:
        raise ParameterError(f"missing {tag} parameter(s): {', '.join(missing)}")
    for key, value in data.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParameterError(f"{tag} parameter {key} must be a number, got {value!r}")
    if "n" in data:
        if int(data["n"]) != data["n"]:
            raise ParameterError(f"n must be a positive integer, got {data['n']!r}")
        data["n"] = int(data["n"])
    return cls(**data)


def build_M(p: TwoModeParams) -> np.ndarray:
    """``[[kappa/2, -i g], [-i g, gamma_tot/2]]``."""
    return np.array(
        [[p.kappa / 2, -1j * p.g], [-1j * p.g, p.gamma_tot / 2]],
        dtype=complex,
    )


def build_Mprime(p: ThreeModeParams) -> np.ndarray:
    """Dynamics of ``(cavity, auxiliary mode, collective atomic mode)``."""
    s = math.sqrt(p.n)
    c = -1j * p.lam * s
    cp = -1j * p.lam_p * s
    return np.array(
        [
            [p.kappa / 2, 0, c],
            [0, p.eta_tot / 2, cp],
            [c, cp, p.Gamma / 2],
        ],
        dtype=complex,
    )


def dispersive_coupling(p: DispersiveParams) -> tuple[float, float]:
    """Return ``(g, kappa_p)`` from eliminating the detuned excited states."""
    with np.errstate(over="ignore"):
        ratio = np.float64(p.lam) / np.float64(p.Delta)
        g = float(-p.n * p.lam * ratio)
        kappa_p = float(p.n * p.Gamma * ratio * ratio)
    return g, kappa_p


def build_Mdoubleprime(p: DispersiveParams) -> np.ndarray:
    g, kp = dispersive_coupling(p)
    off = -1j * g + kp / 2
    return np.array(
        [[(p.kappa + kp) / 2, off], [off, (p.eta_tot + kp) / 2]],
        dtype=complex,
    )


def dynamics_matrix(model: SystemModel) -> np.ndarray:
    """Dispatch to the matrix builder of ``model``'s family."""
    if isinstance(model, TwoModeParams):
        return build_M(model)
    if isinstance(model, ThreeModeParams):
        return build_Mprime(model)
    if isinstance(model, DispersiveParams):
        return build_Mdoubleprime(model)
    raise ParameterError(f"{type(model).__name__} has no linear dynamics matrix")


def emission_rate(model: SystemModel) -> float:
    """Total decay rate of the mode that feeds the waveguide."""
    if isinstance(model, (TwoModeParams, QubitParams)):
        return model.gamma
    if isinstance(model, (ThreeModeParams, DispersiveParams)):
        return model.eta_tot
    raise ParameterError(f"unknown model {model!r}")


def purcell_reduce(p: ThreeModeParams) -> PurcellReduction:
    """Adiabatically eliminate the auxiliary mode.

    Returns the equivalent two-mode parameters and the validity ratio
    ``lam_p sqrt(n) / eta_tot`` (small in the Purcell regime).
    """
    if p.eta_tot <= 0:
        raise ParameterError("eta_tot must be > 0")
    purcell = 4 * p.n * p.lam_p**2 / p.eta_tot**2
    reduced = TwoModeParams(
        g=math.sqrt(p.n) * p.lam,
        kappa=p.kappa,
        gamma=purcell * p.eta,
        gamma_ext=p.Gamma + purcell * p.eta_ext,
    )
    return PurcellReduction(reduced, abs(p.lam_p) * math.sqrt(p.n) / p.eta_tot)


def three_level_reduce(
    lambda1: float, lambda2: float, detuning_prime: float, threshold: float = 0.1
) -> ThreeLevelReduction:
    """Effective two-level couplings after detuning the antisymmetric state.

    ``valid`` is true when ``max(|lambda1|, |lambda2|) / detuning_prime`` is
    below ``threshold``.
    """
    if not detuning_prime > 0:
        raise ParameterError(f"detuning must be > 0, got {detuning_prime!r}")
    ratio = max(abs(lambda1), abs(lambda2)) / detuning_prime
    return ThreeLevelReduction(
        lambda1 / math.sqrt(2), lambda2 / math.sqrt(2), ratio, ratio < threshold
    )


def holstein_primakoff_validity(p: ThreeModeParams, nbar: float) -> ValidityReport:
    """Bosonization of the ensemble needs the cavity excitation below ``n``."""
    if not nbar >= 0:
        raise ParameterError(f"nbar must be >= 0, got {nbar!r}")
    ratio = nbar / p.n
    return ValidityReport("holstein_primakoff", ratio, 1.0, ratio < 1.0)
