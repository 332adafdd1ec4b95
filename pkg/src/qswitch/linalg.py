"""Dense complex linear algebra for small dynamics matrices.

Everything here works on plain ``numpy`` arrays of shape ``(m, m)`` with
``m`` at most a handful. Matrix exponentials use scaling and squaring with
diagonal Padé approximants, and the Gram integral

    I(K) = ∫_0^∞ exp(-K s) ⊗ exp(-K^† s) ds

is obtained from the Sylvester equation ``(K⊗1) I + I (1⊗K^†) = 1⊗1``
solved as one dense linear system.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as spla
from scipy.linalg import lapack

from .errors import InstabilityError, ParameterError

__all__ = [
    "GramIntegral",
    "as_square",
    "element_integral",
    "expm",
    "gram_integral",
    "propagate",
    "stability_check",
]

#: Relative margin an eigenvalue's real part must clear to count as decaying.
STABILITY_RTOL = 1e-12
#: Reciprocal condition number below which a Gram solve triggers a warning.
RCOND_WARN = 1e-12

# Higham (2005): largest 1-norm for which the degree-m diagonal Padé
# approximant has backward error below the double-precision unit roundoff.
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}


def as_square(K) -> np.ndarray:
    """Return ``K`` as a finite complex square array or raise ParameterError."""
    K = np.asarray(K, dtype=complex)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
        raise ParameterError(f"expected a non-empty square matrix, got shape {K.shape}")
    if not np.all(np.isfinite(K)):
        raise ParameterError("matrix has non-finite entries")
    return K


def _pade_uv(X: np.ndarray, degree: int) -> tuple[np.ndarray, np.ndarray]:
    # Odd part U and even part V of the numerator p(X) = V + U.
    b = _PADE_COEFFS[degree]
    ident = np.eye(X.shape[0], dtype=complex)
    X2 = X @ X
    if degree == 13:
        X4 = X2 @ X2
        X6 = X4 @ X2
        U = X @ (
            X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
            + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident
        )
        V = (
            X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
            + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident
        )
        return U, V
    powers = [ident, X2]
    for _ in range(2, degree // 2 + 1):
        powers.append(powers[-1] @ X2)
    U = X @ sum(b[2 * k + 1] * P for k, P in enumerate(powers))
    V = sum(b[2 * k] * P for k, P in enumerate(powers))
    return U, V


def _expm_raw(X: np.ndarray) -> np.ndarray:
    """exp(X) by scaling and squaring; X is assumed square and finite."""
    norm = np.linalg.norm(X, 1)
    if norm == 0.0:
        return np.eye(X.shape[0], dtype=complex)
    for degree in (3, 5, 7, 9):
        if norm <= _PADE_THETA[degree]:
            U, V = _pade_uv(X, degree)
            return np.linalg.solve(V - U, V + U)
    squarings = max(0, math.ceil(math.log2(norm / _PADE_THETA[13])))
    X = X / 2.0**squarings
    U, V = _pade_uv(X, 13)
    R = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        R = R @ R
    return R


def expm(K, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-K t)``.

    Parameters
    ----------
    K : array_like
        Square complex matrix.
    t : float
        Time; may be negative.

    Raises
    ------
    ParameterError
        If ``K`` is not square, or ``K`` or ``t`` is not finite.
    """
    K = as_square(K)
    if not math.isfinite(t):
        raise ParameterError(f"time must be finite, got {t!r}")
    if t == 0.0:
        return np.eye(K.shape[0], dtype=complex)
    return _expm_raw(-K * t)


def propagate(K, dt: float, count: int) -> np.ndarray:
    """Stack ``exp(-K t_k)`` for ``t_k = k dt``, ``k = 0 .. count-1``.

    The step propagator is raised to successive powers in blocks, so the
    cost in Python-level iterations is about ``2 sqrt(count)``.
    """
    K = as_square(K)
    m = K.shape[0]
    if count <= 0:
        return np.empty((0, m, m), dtype=complex)
    block = max(1, int(math.isqrt(count)))
    step = expm(K, dt)
    inner = np.empty((block, m, m), dtype=complex)
    inner[0] = np.eye(m)
    for k in range(1, block):
        inner[k] = inner[k - 1] @ step
    jump = inner[-1] @ step
    n_outer = -(-count // block)
    outer = np.empty((n_outer, m, m), dtype=complex)
    outer[0] = np.eye(m)
    for j in range(1, n_outer):
        outer[j] = outer[j - 1] @ jump
    out = np.einsum("jab,kbc->jkac", outer, inner).reshape(-1, m, m)
    return out[:count]


def stability_check(K) -> bool:
    """True iff every eigenvalue of ``K`` has real part above the margin.

    The margin is ``STABILITY_RTOL * ||K||_2``; borderline matrices count
    as unstable because ``exp(-K s)`` would not decay.
    """
    K = as_square(K)
    scale = np.linalg.norm(K, 2)
    eig = np.linalg.eigvals(K)
    return bool(np.all(eig.real > STABILITY_RTOL * scale))


@dataclass(frozen=True)
class GramIntegral:
    """Solution of the Kronecker-lifted Sylvester equation for ``K``.

    ``matrix`` has shape ``(m*m, m*m)`` with rows indexed by ``(j, l)`` and
    columns by ``(k, n)`` so that ``matrix[j*m + l, k*m + n]`` equals
    ``∫ exp(-K s)[j, k] exp(-K^† s)[l, n] ds``.
    """

    source_dim: int
    matrix: np.ndarray
    residual: float
    rcond: float

    def element(self, j: int, k: int, l: int, n: int) -> complex:
        """Zero-based tensor element ``I_{jkln}``."""
        m = self.source_dim
        for idx in (j, k, l, n):
            if not 0 <= idx < m:
                raise ParameterError(f"index {idx} out of range for dimension {m}")
        return complex(self.matrix[j * m + l, k * m + n])

    def column_gram(self, k: int) -> np.ndarray:
        """Hermitian PSD matrix ``G[p, q] = ∫ exp(-K s)[p, k] conj(exp(-K s)[q, k]) ds``."""
        m = self.source_dim
        return np.array([[self.element(p, k, k, q) for q in range(m)] for p in range(m)])

    def realigned(self) -> np.ndarray:
        """Reshuffle into ``R[(j,k),(n,l)] = I_{jkln}``; Hermitian PSD by construction."""
        m = self.source_dim
        T = self.matrix.reshape(m, m, m, m)  # [j, l, k, n]
        return T.transpose(0, 2, 3, 1).reshape(m * m, m * m)


def gram_integral(K) -> GramIntegral:
    """Evaluate ``∫_0^∞ exp(-K s) ⊗ exp(-K^† s) ds`` for a stable ``K``.

    Raises
    ------
    InstabilityError
        If ``K`` fails :func:`stability_check`.
    """
    K = as_square(K)
    if not stability_check(K):
        raise InstabilityError("matrix is not stable; the Gram integral diverges")
    m = K.shape[0]
    n = m * m
    ident_m = np.eye(m)
    ident_n = np.eye(n)
    A = np.kron(K, ident_m)
    B = np.kron(ident_m, K.conj().T)
    # Column-major vec: vec(A X + X B) = (1 ⊗ A + B^T ⊗ 1) vec(X).
    lifted = np.kron(ident_n, A) + np.kron(B.T, ident_n)
    rhs = ident_n.reshape(-1, order="F").astype(complex)
    lu, piv, info = lapack.zgetrf(lifted)
    if info > 0:
        raise InstabilityError("singular Sylvester system")
    anorm = np.linalg.norm(lifted, 1)
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    x = spla.lu_solve((lu, piv), rhs)
    X = x.reshape(n, n, order="F")
    xnorm = np.linalg.norm(X)
    residual = float(np.linalg.norm(A @ X + X @ B - ident_n) / xnorm)
    if rcond < RCOND_WARN:
        warnings.warn(
            f"ill-conditioned Sylvester system (rcond={rcond:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return GramIntegral(source_dim=m, matrix=X, residual=residual, rcond=float(rcond))


def element_integral(K, j: int, k: int, l: int, n: int) -> complex:
    """``∫_0^∞ exp(-K s)[j, k] exp(-K^† s)[l, n] ds`` with zero-based indices."""
    K = as_square(K)
    m = K.shape[0]
    for idx in (j, k, l, n):
        if not 0 <= idx < m:
            raise ParameterError(f"index {idx} out of range for dimension {m}")
    return gram_integral(K).element(j, k, l, n)
