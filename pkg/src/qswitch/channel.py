"""Pure-loss channel on truncated Fock space and squeezing-transfer budgets.

Extracting the cavity field with transmissivity ``f`` acts on its state as
a beam splitter mixing in vacuum, i.e. ``a -> sqrt(f) a + sqrt(1-f) a_vac``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError

__all__ = [
    "DEFAULT_NMAX",
    "FockDensityMatrix",
    "SqueezingBudget",
    "apply_loss_channel",
    "budgets_to_csv",
    "loss_kraus",
    "mean_photon",
    "quadrature_variance_out",
    "squeezing_out",
    "wigner_negativity_probe",
]

DEFAULT_NMAX = 30
TAIL_TOL = 1e-10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    """Density matrix in the number basis ``|0>, ..., |dim-1>``.

    ``trace_deficit`` records population lost to truncation, so that
    ``trace + trace_deficit == 1``.
    """

    entries: np.ndarray
    trace_deficit: float = 0.0

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
            raise ParameterError(f"density matrix must be square, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise ParameterError("density matrix has non-finite entries")
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise ParameterError("density matrix is not Hermitian")
        if abs(np.trace(rho).real + self.trace_deficit - 1) > TRACE_TOL:
            raise ParameterError("trace plus truncation deficit must equal 1")
        if np.linalg.eigvalsh(rho).min() < -POSITIVITY_TOL:
            raise ParameterError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def fock(cls, n: int, n_max: int = DEFAULT_NMAX) -> "FockDensityMatrix":
        if not 0 <= n <= n_max:
            raise ParameterError(f"Fock index {n} outside 0..{n_max}")
        rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
        rho[n, n] = 1.0
        return cls(rho)

    @classmethod
    def from_ket(cls, ket, trace_deficit: float = 0.0) -> "FockDensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()), trace_deficit)

    @classmethod
    def coherent(cls, alpha: complex, n_max: int = DEFAULT_NMAX) -> "FockDensityMatrix":
        """Truncated coherent state; rejected if the lost tail exceeds 1e-10."""
        n = np.arange(n_max + 1)
        r2 = abs(alpha) ** 2
        if alpha == 0:
            ket = (n == 0).astype(complex)
        else:
            log_amp = -r2 / 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
            ket = np.exp(log_amp) * np.exp(1j * n * np.angle(alpha))
        deficit = max(0.0, 1.0 - float(np.sum(np.abs(ket) ** 2)))
        if deficit > TAIL_TOL:
            raise ParameterError(
                f"coherent state |{alpha}> loses {deficit:.2e} beyond n_max={n_max}; "
                "increase n_max"
            )
        return cls.from_ket(ket, deficit)

    def to_json(self) -> str:
        return json.dumps(
            {
                "dim": self.dim,
                "re": self.entries.real.tolist(),
                "im": self.entries.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str | dict) -> "FockDensityMatrix":
        data = json.loads(text) if isinstance(text, str) else dict(text)
        unknown = set(data) - {"dim", "re", "im"}
        if unknown:
            raise ParameterError(f"unknown density-matrix key(s): {sorted(unknown)}")
        try:
            dim = int(data["dim"])
            rho = np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed density matrix: {exc}") from None
        if rho.shape != (dim, dim):
            raise ParameterError(f"density matrix shape {rho.shape} does not match dim {dim}")
        # Anything the truncated trace misses is treated as truncation tail.
        deficit = 1.0 - np.trace(rho).real
        if not -TRACE_TOL <= deficit <= TAIL_TOL:
            raise ParameterError(f"trace {1 - deficit!r} is not 1")
        return cls(rho, max(deficit, 0.0))


def _check_transmissivity(f: float) -> None:
    if not 0.0 <= f <= 1.0:
        raise ParameterError(f"transmissivity must lie in [0, 1], got {f!r}")


def loss_kraus(f: float, dim: int) -> np.ndarray:
    """Stack of Kraus operators ``K_k``, shape ``(dim, dim, dim)``.

    ``K_k = Σ_n sqrt(C(n, k) f^(n-k) (1-f)^k) |n-k><n|``.
    """
    _check_transmissivity(f)
    ops = np.zeros((dim, dim, dim))
    for k in range(dim):
        for n in range(k, dim):
            ops[k, n - k, n] = math.sqrt(math.comb(n, k) * f ** (n - k) * (1 - f) ** k)
    return ops


def apply_loss_channel(rho: FockDensityMatrix, f: float) -> FockDensityMatrix:
    """Map ``rho`` through the pure-loss channel of transmissivity ``f``."""
    _check_transmissivity(f)
    ops = loss_kraus(f, rho.dim)
    out = np.sum(ops @ rho.entries @ ops.transpose(0, 2, 1), axis=0)
    out = (out + out.conj().T) / 2
    return FockDensityMatrix(out, rho.trace_deficit)


def mean_photon(rho: FockDensityMatrix) -> float:
    return float(np.arange(rho.dim) @ np.diag(rho.entries).real)


def wigner_negativity_probe(rho: FockDensityMatrix) -> float:
    """Wigner function at the phase-space origin, ``(2/π) <parity>``."""
    parity = (-1.0) ** np.arange(rho.dim)
    return float(2 / math.pi * parity @ np.diag(rho.entries).real)


def quadrature_variance_out(var_in: float, f: float) -> float:
    """Quadrature variance after loss; vacuum variance is 1."""
    if not var_in > 0:
        raise ParameterError(f"variance must be > 0, got {var_in!r}")
    _check_transmissivity(f)
    return var_in * f + 1 - f


@dataclass(frozen=True)
class SqueezingBudget:
    """Squeezing in dB before and after extraction; ``s_max`` is infinite when f = 1."""

    s_in: float
    f: float
    s_out: float
    s_max: float
    theta: float = 0.0

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.s_max)


def squeezing_out(s0: float, f: float, theta: float = 0.0) -> SqueezingBudget:
    if not s0 >= 0:
        raise ParameterError(f"input squeezing must be >= 0 dB, got {s0!r}")
    _check_transmissivity(f)
    # var_out = 1 - f (1 - var_in), kept in log1p/expm1 form so that s_out is
    # exactly 0 at s0 = 0 and monotone down to rounding.
    deficit = -math.expm1(-s0 * math.log(10) / 10)
    s_out = -10 * math.log1p(-f * deficit) / math.log(10) + 0.0
    s_max = math.inf if f == 1 else -10 * math.log1p(-f) / math.log(10)
    return SqueezingBudget(float(s0), float(f), s_out, s_max, float(theta))


def budgets_to_csv(budgets: Iterable[SqueezingBudget]) -> str:
    buf = io.StringIO()
    buf.write("s0,f,s_out,s_max\n")
    for b in budgets:
        s_max = "unbounded" if b.unbounded else repr(b.s_max)
        buf.write(f"{b.s_in!r},{b.f!r},{b.s_out!r},{s_max}\n")
    return buf.getvalue()
