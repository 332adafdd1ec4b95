"""Figures of merit for releasing a photon from a high-Q cavity through a tunable scatterer.

The package computes how much of a cavity field can be extracted into a
waveguide when the cavity is opened through an intermediate scatterer
(a lossy mode, a three-wave mixing interaction or a dispersively coupled
mode), and what that extraction does to nonclassical states.

Modules
-------
linalg
    Matrix exponential and Gram integrals of stable dynamics matrices.
models
    Parameter dataclasses and the dynamics matrices they define.
fom
    Figures of merit by numeric, closed-form and perturbative routes, plus
    optimal output and input temporal modes.
channel
    Pure-loss channel on Fock space and squeezing budgets.
oracle
    Independent discretized-bath simulation of the two-mode emission.
"""

from . import channel, fom, linalg, models, oracle
from .errors import (
    InstabilityError,
    NumericalFailure,
    ParameterError,
    QSwitchError,
    ValidationFailure,
)
from .fom import FomResult, evaluate
from .models import (
    DispersiveParams,
    QubitParams,
    ThreeModeParams,
    TwoModeParams,
    dynamics_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "DispersiveParams",
    "FomResult",
    "InstabilityError",
    "NumericalFailure",
    "ParameterError",
    "QSwitchError",
    "QubitParams",
    "ThreeModeParams",
    "TwoModeParams",
    "ValidationFailure",
    "channel",
    "dynamics_matrix",
    "evaluate",
    "fom",
    "linalg",
    "models",
    "oracle",
]
