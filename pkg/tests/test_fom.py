import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from helpers import SAMPLERS, random_qubit, random_two_mode
from qswitch import fom, linalg
from qswitch.errors import NumericalFailure, ParameterError
from qswitch.models import (
    DispersiveParams,
    QubitParams,
    ThreeModeParams,
    TwoModeParams,
    build_M,
    build_Mdoubleprime,
    build_Mprime,
    dynamics_matrix,
    emission_rate,
)

WORKING_POINT = ThreeModeParams(lam=1, lam_p=1.5, n=100, kappa=0.25, eta=40, Gamma=0.015)
DESIGN = DispersiveParams(lam=1, Delta=500, n=1000, kappa=0.25, eta=4, Gamma=0.015)

# Frozen from an independent evaluation: scipy adaptive quadrature of
# eta_tot * |exp(-M' t)[0, 1]|^2 at 1e-13 relative tolerance.
WORKING_POINT_VALUE = 0.9778178056962167
# Same quadrature oracle for the dispersive design point.
DESIGN_VALUE = 0.8857748525414215


def quad_fom(K, rate):
    def integrand(t):
        return abs(linalg.expm(K, t)[0, 1]) ** 2

    val, _ = quad(integrand, 0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
    return rate * val


class TestFomResult:
    def test_bounds_enforced(self):
        with pytest.raises(NumericalFailure):
            fom.FomResult(1.01, "closed-form")
        with pytest.raises(NumericalFailure):
            fom.FomResult(-1e-6, "closed-form")
        assert fom.FomResult(1 + 1e-13, "closed-form").value > 1


class TestNumeric:
    def test_lossless_two_mode(self):
        assert fom.fom_numeric(build_M(TwoModeParams(1, 0, 1)), 1.0).value == pytest.approx(1, abs=1e-12)

    def test_reference_two_mode(self):
        res = fom.fom_numeric(build_M(TwoModeParams(1, 0.2, 2)), 2.0)
        assert res.value == pytest.approx(1 / 1.21, abs=1e-12)
        assert res.method == "numeric-gram" and not res.coupling_efficiency_applied

    @pytest.mark.parametrize("lam,lam_p,n,eta", [(1, 1.5, 100, 40), (0.3, 2, 7, 3), (2, 0.1, 500, 900)])
    def test_three_mode_lossless(self, lam, lam_p, n, eta):
        p = ThreeModeParams(lam, lam_p, n, 0, eta)
        assert fom.fom_numeric(build_Mprime(p), p.eta_tot).value == pytest.approx(1, abs=1e-10)

    def test_efficiency_multiplier(self):
        K = build_M(TwoModeParams(1, 0.2, 2))
        res = fom.fom_numeric(K, 2.0, efficiency=0.5)
        assert res.value == pytest.approx(0.5 / 1.21) and res.coupling_efficiency_applied
        with pytest.raises(ParameterError):
            fom.fom_numeric(K, 2.0, efficiency=1.5)
        with pytest.raises(ParameterError):
            fom.fom_numeric(K, -1.0)

    def test_against_quadrature(self):
        assert quad_fom(build_Mprime(WORKING_POINT), WORKING_POINT.eta_tot) == pytest.approx(WORKING_POINT_VALUE, abs=1e-12)
        assert fom.evaluate(WORKING_POINT).value == pytest.approx(WORKING_POINT_VALUE, abs=1e-12)
        assert fom.evaluate(DESIGN).value == pytest.approx(DESIGN_VALUE, abs=1e-12)

    def test_unstable_rejected(self):
        with pytest.raises(ArithmeticError):
            fom.fom_numeric(np.diag([-1.0, 1.0]), 1.0)


class TestClosedForms:
    def test_two_mode_examples(self):
        assert fom.fom_closed_two_mode(TwoModeParams(1, 0, 1)).value == 1.0
        assert fom.fom_closed_two_mode(TwoModeParams(1, 0.2, 2)).value == pytest.approx(0.826446, abs=1e-6)
        assert fom.fom_closed_two_mode(TwoModeParams(1, 0.2, 2, 2)).value == pytest.approx(0.5 / 1.26, abs=1e-12)
        assert fom.fom_closed_two_mode(TwoModeParams(0, 0.2, 2)).value == 0.0
        with pytest.raises(ParameterError):
            fom.fom_closed_two_mode(TwoModeParams(0, 0, 2))

    def test_three_mode_examples(self):
        lossless = ThreeModeParams(lam=1, lam_p=2, n=30, kappa=0, eta=7)
        assert fom.fom_closed_three_mode(lossless).value == pytest.approx(1, abs=1e-15)
        assert fom.fom_closed_three_mode(WORKING_POINT).value == pytest.approx(WORKING_POINT_VALUE, abs=1e-12)
        assert fom.fom_closed_three_mode(ThreeModeParams(0, 1, 10, 0.1, 5)).value == 0.0

    def test_three_mode_efficiency(self):
        p = ThreeModeParams(lam=1, lam_p=2, n=30, kappa=0, eta=3, eta_ext=1)
        res = fom.fom_closed_three_mode(p, apply_efficiency=True)
        assert res.value == pytest.approx(0.75) and res.coupling_efficiency_applied
        assert fom.evaluate(p, "numeric", apply_efficiency=True).value == pytest.approx(0.75, abs=1e-10)

    def test_dispersive_examples(self):
        p = DispersiveParams(lam=1, Delta=50, n=100, kappa=0, eta=4)
        assert fom.fom_closed_dispersive(p).value == pytest.approx(1, abs=1e-15)
        design = fom.fom_closed_dispersive(DESIGN).value
        assert design == pytest.approx(DESIGN_VALUE, abs=1e-12)
        assert round(design, 2) == 0.89 and design == pytest.approx(0.88, abs=0.01)

    def test_qubit_examples(self):
        assert fom.fom_qubit(QubitParams(g=1, kappa=0.04, gamma=100)).value == pytest.approx(0.5)
        assert fom.fom_qubit(QubitParams(g=1, kappa=0, gamma=3)).value == 1.0
        res = fom.evaluate(QubitParams(g=1, kappa=0.04, gamma=100), "closed")
        assert res.method == "qubit-adiabatic"

    def test_qubit_limit(self):
        g = 1.0
        kappa, gamma = g / 100, 100 * g
        q = fom.fom_qubit(QubitParams(g, kappa, gamma)).value
        b = fom.fom_closed_two_mode(TwoModeParams(g, kappa, gamma)).value
        assert abs(q - b) / b <= 2 * (kappa / gamma + (kappa / (2 * g)) ** 2)

    @pytest.mark.parametrize("family", ["two_mode", "three_mode", "dispersive"])
    def test_closed_matches_numeric(self, family):
        rng = np.random.default_rng(11)
        for _ in range(300):
            p = SAMPLERS[family](rng)
            if not linalg.stability_check(dynamics_matrix(p)):
                continue
            assert fom.evaluate(p, "closed").value == pytest.approx(
                fom.evaluate(p, "numeric").value, abs=1e-9)

    def test_vanishing_coupling(self):
        assert fom.fom_closed_two_mode(TwoModeParams(1e-200, 1.0, 1.0)).value == 0.0
        assert fom.fom_qubit(QubitParams(1e-200, 1.0, 1.0)).value == 0.0

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for _ in range(10_000):
            for family in SAMPLERS:
                v = fom.evaluate(SAMPLERS[family](rng), "closed").value
                assert 0 <= v <= 1 + 1e-12
            assert 0 <= fom.fom_qubit(random_qubit(rng)).value <= 1


class TestPerturbative:
    def test_three_mode_examples(self):
        p = ThreeModeParams(lam=1, lam_p=1, n=1, kappa=0.01, eta=100, Gamma=0.01)
        res = fom.fom_perturbative_three_mode(p)
        assert res.value == pytest.approx(1 / 1.5) and res.epsilon == pytest.approx(0.01)
        assert abs(res.value - fom.fom_closed_three_mode(p).value) < 10 * res.epsilon**2
        lossless = ThreeModeParams(lam=1, lam_p=1, n=1, kappa=0, eta=100)
        assert fom.fom_perturbative_three_mode(lossless).value == 1.0
        with pytest.raises(ParameterError):
            fom.fom_perturbative_three_mode(ThreeModeParams(1, 0, 1, 0.1, 3))

    def test_dispersive_design_point_is_outside_validity(self):
        res = fom.fom_perturbative_dispersive(DESIGN)
        assert res.value == pytest.approx(1 / (1 + 4 * (0.25 + 6e-5) / 16), abs=1e-12)
        assert res.epsilon == pytest.approx(0.5)

    def test_dispersive_small_epsilon(self):
        # n lam^2 / Delta = 0.1 with gamma_tot = 10.
        p = DispersiveParams(lam=1, Delta=10, n=1, kappa=0.001, eta=10)
        res = fom.fom_perturbative_dispersive(p)
        full = fom.fom_closed_dispersive(p).value
        assert res.epsilon == pytest.approx(0.01)
        assert abs(res.value - full) / full <= 2e-4
        assert fom.fom_perturbative_dispersive(DispersiveParams(1, 10, 1, 0, 10)).value == 1.0

    def test_second_order_accuracy(self):
        ratios = []
        for eps in (0.2, 0.1, 0.05, 0.025, 0.0125):
            eta = 4 * (0.2 / eps) ** 2
            p = ThreeModeParams(lam=eps * eta / 20, lam_p=eps * eta / 10, n=100,
                                kappa=0.1, eta=eta, Gamma=0.1)
            approx = fom.fom_perturbative_three_mode(p)
            assert approx.epsilon == pytest.approx(eps)
            ratios.append(abs(fom.fom_closed_three_mode(p).value - approx.value) / eps**2)
        assert max(ratios) < 2.5 and max(ratios) / min(ratios) < 1.2


class TestInvariants:
    @settings(max_examples=300, deadline=None)
    @given(st.floats(-50, 50), st.floats(0.001, 50), st.floats(0.01, 50), st.floats(0, 50))
    def test_sign_invariance(self, g, kappa, gamma, gamma_ext):
        a = fom.evaluate(TwoModeParams(g, kappa, gamma, gamma_ext)).value
        b = fom.evaluate(TwoModeParams(-g, kappa, gamma, gamma_ext)).value
        assert a == b
        assert fom.fom_closed_two_mode(TwoModeParams(g, kappa, gamma, gamma_ext)).value == \
            fom.fom_closed_two_mode(TwoModeParams(-g, kappa, gamma, gamma_ext)).value

    def test_dispersive_sign_of_detuning(self):
        p = DispersiveParams(lam=1, Delta=20, n=50, kappa=0.1, eta=3, Gamma=0.5)
        q = DispersiveParams(lam=1, Delta=-20, n=50, kappa=0.1, eta=3, Gamma=0.5)
        assert fom.evaluate(p).value == pytest.approx(fom.evaluate(q).value, abs=1e-14)

    def test_monotone_in_kappa(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_two_mode(rng)
            kappas = np.sort(rng.uniform(0, 10, 20))
            vals = [fom.fom_closed_two_mode(TwoModeParams(p.g, k, p.gamma, p.gamma_ext)).value
                    for k in kappas]
            assert np.all(np.diff(vals) < 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(sorted(SAMPLERS)))
    def test_feeding_equals_extraction(self, seed, family):
        p = SAMPLERS[family](np.random.default_rng(seed))
        K = dynamics_matrix(p)
        if not linalg.stability_check(K):
            return
        F = fom.fom_numeric(K, emission_rate(p)).value
        T = fom.feeding_fidelity(K, emission_rate(p)).value
        assert abs(T - F) <= 1e-12

    def test_feeding_examples(self):
        K = build_Mprime(WORKING_POINT)
        assert fom.feeding_fidelity(K, 40).value == pytest.approx(WORKING_POINT_VALUE, abs=1e-12)
        assert fom.feeding_fidelity(build_M(TwoModeParams(0, 0.3, 2)), 2).value == 0.0
        K2 = build_Mdoubleprime(DESIGN)
        assert fom.feeding_fidelity(K2, 4).value == pytest.approx(DESIGN_VALUE, abs=1e-12)


def critically_damped_u(t):
    """|u(t)| for g=1, kappa=0, gamma=4 from an extended-precision matrix exponential."""
    with mpmath.workdps(30):
        M = mpmath.matrix([[0, -1j], [-1j, 2]])
        e = mpmath.expm(-M * t)[0, 1]
        return float(abs(e) / mpmath.sqrt(mpmath.mpf(1) / 4))


class TestProfiles:
    def test_decoupled_is_error(self):
        with pytest.raises(ParameterError, match="decoupled"):
            fom.output_profile(build_M(TwoModeParams(0, 0.3, 2)))
        with pytest.raises(ParameterError, match="decoupled"):
            fom.input_profile(build_M(TwoModeParams(0, 0.3, 2)))

    def test_critically_damped_shape(self):
        prof = fom.output_profile(build_M(TwoModeParams(1, 0, 4)))
        assert prof.amplitudes[0] == 0
        idx = np.linspace(0, prof.times.size - 1, 25).astype(int)
        for i in idx:
            assert abs(prof.amplitudes[i]) == pytest.approx(critically_damped_u(prof.times[i]), abs=1e-10)
        # Closed form 2 t e^{-t}: peak at t = 1.
        assert prof.times[np.argmax(np.abs(prof.amplitudes))] == pytest.approx(1, abs=0.01)

    @pytest.mark.parametrize("params", [TwoModeParams(1, 0.2, 2), TwoModeParams(1, 0, 4),
                                        TwoModeParams(3, 0.05, 1, 0.5)])
    def test_normalization_on_default_grid(self, params):
        K = build_M(params)
        u = fom.output_profile(K)
        w = fom.input_profile(K)
        assert u.norm_error <= 1e-6 and w.norm_error <= 1e-6
        assert u.times[0] == 0 and w.times[-1] == 0
        assert u.kind == "output-u" and w.kind == "input-w"

    def test_three_mode_profile(self):
        u = fom.output_profile(build_Mprime(WORKING_POINT))
        assert u.norm_error <= 1e-6

    def test_time_reversal(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            p = random_two_mode(rng)
            if p.g == 0:
                continue
            K = build_M(p)
            dt = 0.01 / np.linalg.norm(K, 2)
            u = fom.output_profile(K, dt=dt)
            w = fom.input_profile(K, -u.times[::-1])
            np.testing.assert_allclose(np.abs(w.amplitudes[::-1]), np.abs(u.amplitudes), atol=1e-9)

    def test_short_grid_rejected(self):
        K = build_M(TwoModeParams(1, 0.2, 2))
        with pytest.raises(NumericalFailure, match="too short"):
            fom.output_profile(K, np.linspace(0, 3, 100))
        with pytest.raises(ParameterError):
            fom.output_profile(K, np.linspace(-1, 30, 100))
        with pytest.raises(ParameterError):
            fom.output_profile(K, [0, 2, 1, 40])
        with pytest.raises(ParameterError):
            fom.input_profile(K, np.linspace(-40, 1, 100))

    def test_csv(self):
        prof = fom.output_profile(build_M(TwoModeParams(1, 0.2, 2)), np.linspace(0, 60, 4))
        lines = prof.to_csv("two_mode g=1").splitlines()
        assert lines[0] == "# two_mode g=1" and lines[1] == "t,re,im"
        assert len(lines) == 6
        t, re, im = (float(x) for x in lines[3].split(","))
        assert t == 20.0 and complex(re, im) == prof.amplitudes[1]

    def test_discrete_mass(self):
        prof = fom.output_profile(build_M(TwoModeParams(1, 0.2, 2)))
        assert prof.discrete_mass() == pytest.approx(1, abs=1e-6)
        assert math.isclose(prof.mass, 1.0)
