"""Brute-force check of the extraction picture with a discretized waveguide.

The cavity, the scatterer and three flat bands of bath modes (waveguide,
cavity loss, scatterer loss) are evolved in the single-excitation sector.
No input-output relations are assumed: the emitted wavepacket is read off
the final bath amplitudes and compared with the predicted optimal mode.

The amplitude equations, with bath mode ``j`` at detuning ``w_j`` coupled
with strength ``G = sqrt(rate dw / 2π)``, are

    d alpha/dt = -i g beta - i Σ G c_j              (cavity-loss band)
    d beta/dt  = -i g alpha - i Σ G c_j             (waveguide, scatterer-loss bands)
    d c_j/dt   = -i w_j c_j - i G (alpha or beta)
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NumericalFailure, ParameterError
from .fom import TemporalProfile
from .models import TwoModeParams, build_M

__all__ = [
    "BathDiscretization",
    "CHANNELS",
    "ExcitationState",
    "Trajectory",
    "emitted_wavepacket",
    "mode_overlap",
    "simulate",
]

CHANNELS = ("waveguide", "cavity_loss", "scatterer_loss")

#: Decay the system amplitudes must reach by the end of a run.
SETTLE_AMPLITUDE = 1e-4
NORM_TOL = 1e-6


def _rates(p: TwoModeParams) -> dict[str, float]:
    return {"waveguide": p.gamma, "cavity_loss": p.kappa, "scatterer_loss": p.gamma_ext}


def _max_rate(p: TwoModeParams) -> float:
    return max(p.kappa, p.gamma, p.gamma_ext, abs(p.g))


@dataclass(frozen=True)
class BathDiscretization:
    """Flat band of ``n_modes`` modes per channel spanning ``[-B/2, B/2]``."""

    n_modes: int
    bandwidth: float
    min_bandwidth_factor: float = 20.0

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 2:
            raise ParameterError(f"n_modes must be an integer >= 2, got {self.n_modes!r}")
        if not (math.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ParameterError(f"bandwidth must be > 0, got {self.bandwidth!r}")

    @property
    def spacing(self) -> float:
        return self.bandwidth / self.n_modes

    @property
    def frequencies(self) -> np.ndarray:
        dw = self.spacing
        return -self.bandwidth / 2 + dw * (np.arange(self.n_modes) + 0.5)

    @property
    def recurrence_time(self) -> float:
        """Revival period of the discrete bath; runs must end before it."""
        return 2 * math.pi / self.spacing

    def coupling(self, rate: float) -> float:
        return math.sqrt(rate * self.spacing / (2 * math.pi))

    @classmethod
    def reference(cls, p: TwoModeParams, n_modes: int = 4000,
                  bandwidth_factor: float = 200.0) -> "BathDiscretization":
        return cls(n_modes, bandwidth_factor * _max_rate(p))


@dataclass(frozen=True, eq=False)
class ExcitationState:
    """Single-excitation amplitudes; ``baths`` maps channel name to a length-N vector."""

    alpha: complex
    beta: complex
    baths: dict

    def channel_population(self, name: str) -> float:
        return float(np.sum(np.abs(self.baths[name]) ** 2))

    @property
    def norm(self) -> float:
        system = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        return system + sum(self.channel_population(c) for c in self.baths)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled run summary plus the final state.

    Per-sample arrays: ``times``, ``cavity`` (|alpha|^2), ``scatterer``
    (|beta|^2), ``waveguide`` (P_wg(t)), ``cavity_loss``, ``scatterer_loss``
    and ``norm``.
    """

    params: TwoModeParams
    disc: BathDiscretization
    dt: float
    times: np.ndarray
    cavity: np.ndarray
    scatterer: np.ndarray
    waveguide: np.ndarray
    cavity_loss: np.ndarray
    scatterer_loss: np.ndarray
    norm: np.ndarray
    final: ExcitationState

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @property
    def max_norm_error(self) -> float:
        return float(np.abs(self.norm - 1).max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,cavity,scatterer,waveguide,norm\n")
        rows = zip(*(a.tolist() for a in (self.times, self.cavity, self.scatterer,
                                          self.waveguide, self.norm)))
        for row in rows:
            buf.write(",".join(repr(x) for x in row) + "\n")
        return buf.getvalue()


@numba.njit(fastmath=True, cache=True)
def _rk4(a, b, c, w, G, n_a, g, dt, steps):  # pragma: no cover - compiled
    # Modes [0, n_a) couple to the cavity, [n_a, n) to the scatterer.
    # fastmath only reorders the coupling sums.
    n = c.shape[0]
    k1 = np.empty(n, np.complex128)
    k2 = np.empty(n, np.complex128)
    k3 = np.empty(n, np.complex128)
    tmp = np.empty(n, np.complex128)
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(steps):
        sa = 0j
        sb = 0j
        for j in range(n_a):
            sa += G[j] * c[j]
        for j in range(n_a, n):
            sb += G[j] * c[j]
        a1 = -1j * (g * b + sa)
        b1 = -1j * (g * a + sb)

        sa = 0j
        sb = 0j
        for j in range(n_a):
            kk = -1j * (w[j] * c[j] + G[j] * a)
            k1[j] = kk
            t = c[j] + half * kk
            tmp[j] = t
            sa += G[j] * t
        for j in range(n_a, n):
            kk = -1j * (w[j] * c[j] + G[j] * b)
            k1[j] = kk
            t = c[j] + half * kk
            tmp[j] = t
            sb += G[j] * t
        at = a + half * a1
        bt = b + half * b1
        a2 = -1j * (g * bt + sa)
        b2 = -1j * (g * at + sb)

        sa = 0j
        sb = 0j
        for j in range(n_a):
            kk = -1j * (w[j] * tmp[j] + G[j] * at)
            k2[j] = kk
            t = c[j] + half * kk
            tmp[j] = t
            sa += G[j] * t
        for j in range(n_a, n):
            kk = -1j * (w[j] * tmp[j] + G[j] * bt)
            k2[j] = kk
            t = c[j] + half * kk
            tmp[j] = t
            sb += G[j] * t
        at = a + half * a2
        bt = b + half * b2
        a3 = -1j * (g * bt + sa)
        b3 = -1j * (g * at + sb)

        sa = 0j
        sb = 0j
        for j in range(n_a):
            kk = -1j * (w[j] * tmp[j] + G[j] * at)
            k3[j] = kk
            t = c[j] + dt * kk
            tmp[j] = t
            sa += G[j] * t
        for j in range(n_a, n):
            kk = -1j * (w[j] * tmp[j] + G[j] * bt)
            k3[j] = kk
            t = c[j] + dt * kk
            tmp[j] = t
            sb += G[j] * t
        at = a + dt * a3
        bt = b + dt * b3
        a4 = -1j * (g * bt + sa)
        b4 = -1j * (g * at + sb)

        for j in range(n_a):
            k4 = -1j * (w[j] * tmp[j] + G[j] * at)
            c[j] += sixth * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4)
        for j in range(n_a, n):
            k4 = -1j * (w[j] * tmp[j] + G[j] * bt)
            c[j] += sixth * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4)
        a += sixth * (a1 + 2 * a2 + 2 * a3 + a4)
        b += sixth * (b1 + 2 * b2 + 2 * b3 + b4)
    return a, b


def default_t_final(p: TwoModeParams, settle: float = SETTLE_AMPLITUDE) -> float:
    """Time for the slowest system eigenmode to decay to ``settle / 10``.

    Uses the eigenvalues of the dynamics matrix; infinite if nothing decays.
    """
    decay = np.linalg.eigvals(build_M(p)).real.min()
    if decay <= 0:
        return math.inf
    return math.log(10 / settle) / decay


def simulate(params: TwoModeParams, disc: BathDiscretization,
             t_final: float | None = None, dt: float | None = None,
             samples: int = 2000, require_settled: bool = True) -> Trajectory:
    """Integrate the discretized dynamics from ``alpha = 1`` with fixed-step RK4.

    Parameters
    ----------
    params : TwoModeParams
    disc : BathDiscretization
    t_final : float, optional
        End time; by default long enough for the system amplitudes to fall
        an order of magnitude below 1e-4.
    dt : float, optional
        Step, default ``0.05 / bandwidth``; must not exceed ``0.1 / bandwidth``.
    samples : int
        Number of recorded summary points after ``t = 0``.
    require_settled : bool
        Raise if the system amplitudes have not decayed by ``t_final``.

    Raises
    ------
    ParameterError
        Step too coarse for the band, band narrower than ``min_bandwidth_factor``
        times the largest rate, or ``t_final`` beyond the bath recurrence time.
    NumericalFailure
        System amplitudes still above 1e-4 at ``t_final``.
    """
    B = disc.bandwidth
    if dt is None:
        dt = 0.05 / B
    if not 0 < dt <= 0.1 / B * (1 + 1e-12):
        raise ParameterError(f"step {dt!r} does not resolve bandwidth {B!r} (need dt <= 0.1/B)")
    top = _max_rate(params)
    if B < disc.min_bandwidth_factor * top:
        raise ParameterError(
            f"bandwidth {B!r} is below {disc.min_bandwidth_factor}x the largest rate {top!r}"
        )
    if t_final is None:
        t_final = default_t_final(params)
        if not math.isfinite(t_final):
            t_final = 0.9 * disc.recurrence_time
    if not 0 < t_final < disc.recurrence_time:
        raise ParameterError(
            f"t_final={t_final!r} must be below the bath recurrence time "
            f"{disc.recurrence_time!r}; use more modes"
        )

    rates = _rates(params)
    N = disc.n_modes
    w = disc.frequencies
    # Active channels only; cavity-loss band first so it forms the a-coupled block.
    order = [c for c in ("cavity_loss", "waveguide", "scatterer_loss") if rates[c] > 0]
    n_a = N if rates["cavity_loss"] > 0 else 0
    freqs = np.concatenate([w for _ in order]) if order else np.empty(0)
    G = np.concatenate([np.full(N, disc.coupling(rates[c])) for c in order]) if order else np.empty(0)
    c = np.zeros(freqs.size, dtype=np.complex128)
    a, b = 1.0 + 0j, 0j

    total_steps = max(1, math.ceil(t_final / dt))
    dt = t_final / total_steps
    samples = max(1, min(samples, total_steps))
    marks = np.linspace(0, total_steps, samples + 1).round().astype(int)

    rec = {k: np.empty(samples + 1) for k in ("cavity", "scatterer", "norm", *CHANNELS)}
    times = marks * dt

    def record(i):
        rec["cavity"][i] = abs(a) ** 2
        rec["scatterer"][i] = abs(b) ** 2
        pops = dict.fromkeys(CHANNELS, 0.0)
        for k, name in enumerate(order):
            pops[name] = float(np.sum(np.abs(c[k * N:(k + 1) * N]) ** 2))
        for name, val in pops.items():
            rec[name][i] = val
        rec["norm"][i] = rec["cavity"][i] + rec["scatterer"][i] + sum(pops.values())

    record(0)
    for i in range(samples):
        steps = int(marks[i + 1] - marks[i])
        if steps:
            a, b = _rk4(a, b, c, freqs, G, n_a, float(params.g), dt, steps)
        record(i + 1)

    baths = {name: np.zeros(N, dtype=complex) for name in CHANNELS}
    for k, name in enumerate(order):
        baths[name] = c[k * N:(k + 1) * N].copy()
    final = ExcitationState(complex(a), complex(b), baths)
    if require_settled and max(abs(a), abs(b)) > SETTLE_AMPLITUDE:
        raise NumericalFailure(
            f"system amplitudes still {max(abs(a), abs(b)):.2e} at t={t_final:g}; "
            "increase t_final"
        )
    return Trajectory(
        params, disc, dt, times,
        rec["cavity"], rec["scatterer"], rec["waveguide"],
        rec["cavity_loss"], rec["scatterer_loss"], rec["norm"], final,
    )


def emitted_wavepacket(traj: Trajectory) -> TemporalProfile:
    """Waveguide wavepacket ``psi(t)`` on ``[0, t_final]`` by Fourier synthesis.

    ``psi(t) = sqrt(dw / 2π) Σ_j c_j(T) exp(i w_j (T - t))``, sampled on the
    FFT grid of spacing ``2π / B``. The profile is not normalized; its
    ``mass`` is the exact waveguide population.
    """
    disc = traj.disc
    N = disc.n_modes
    w = disc.frequencies
    T = traj.t_final
    if abs(traj.final.alpha) > SETTLE_AMPLITUDE or abs(traj.final.beta) > SETTLE_AMPLITUDE:
        raise NumericalFailure("trajectory ended before the emission finished")
    c_free = traj.final.baths["waveguide"] * np.exp(1j * w * T)
    step = 2 * math.pi / disc.bandwidth
    k = np.arange(N)
    times = k * step
    # Σ_j c_free_j exp(-i (w_0 + j dw) t_k) with t_k dw = 2π k / N.
    psi = math.sqrt(disc.spacing / (2 * math.pi)) * np.exp(-1j * w[0] * times) * np.fft.fft(c_free)
    keep = times <= T + step
    mass = traj.final.channel_population("waveguide")
    times, psi = times[keep], psi[keep]
    norm_error = abs(mass - float(np.trapezoid(np.abs(psi) ** 2, times)))
    return TemporalProfile(times, psi, "emitted", norm_error, mass)


def mode_overlap(psi: TemporalProfile, u: TemporalProfile) -> float:
    """Fraction ``|∫ u* psi|^2 / ∫ |psi|^2`` of ``psi`` carried by mode ``u``.

    ``u`` is linearly interpolated onto ``psi``'s grid (zero outside its span).
    """
    t = psi.times
    if np.array_equal(t, u.times):
        ui = u.amplitudes
    else:
        ui = (np.interp(t, u.times, u.amplitudes.real, left=0.0, right=0.0)
              + 1j * np.interp(t, u.times, u.amplitudes.imag, left=0.0, right=0.0))
    mass = float(np.trapezoid(np.abs(psi.amplitudes) ** 2, t))
    if mass <= 0:
        raise ParameterError("wavepacket has zero mass")
    proj = np.trapezoid(ui.conj() * psi.amplitudes, t)
    return float(abs(proj) ** 2 / mass)
