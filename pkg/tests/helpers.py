"""Random parameter samplers shared by the property and acceptance tests."""

import numpy as np

from qswitch.models import DispersiveParams, QubitParams, ThreeModeParams, TwoModeParams


def log_uniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def maybe_zero(rng, lo, hi, p_zero=0.15):
    return 0.0 if rng.random() < p_zero else log_uniform(rng, lo, hi)


def signed(rng, lo, hi):
    return log_uniform(rng, lo, hi) * (1 if rng.random() < 0.5 else -1)


def random_two_mode(rng):
    while True:
        p = dict(g=signed(rng, 1e-2, 1e2), kappa=maybe_zero(rng, 1e-3, 1e2),
                 gamma=log_uniform(rng, 1e-2, 1e2), gamma_ext=maybe_zero(rng, 1e-3, 1e2, 0.4))
        return TwoModeParams(**p)


def random_three_mode(rng):
    return ThreeModeParams(
        lam=signed(rng, 1e-2, 10), lam_p=signed(rng, 1e-2, 10),
        n=int(log_uniform(rng, 1, 2000)), kappa=maybe_zero(rng, 1e-3, 10),
        eta=log_uniform(rng, 1e-1, 1e3), eta_ext=maybe_zero(rng, 1e-2, 1e2, 0.5),
        Gamma=maybe_zero(rng, 1e-3, 10),
    )


def random_dispersive(rng):
    return DispersiveParams(
        lam=signed(rng, 1e-2, 10), Delta=signed(rng, 1, 1e3),
        n=int(log_uniform(rng, 1, 2000)), kappa=maybe_zero(rng, 1e-3, 10),
        eta=log_uniform(rng, 1e-1, 1e2), eta_ext=maybe_zero(rng, 1e-2, 1e2, 0.5),
        Gamma=maybe_zero(rng, 1e-3, 10),
    )


def random_qubit(rng):
    return QubitParams(g=signed(rng, 1e-2, 1e2), kappa=maybe_zero(rng, 1e-3, 1e2),
                       gamma=log_uniform(rng, 1e-2, 1e3), gamma_ext=maybe_zero(rng, 1e-3, 1e2, 0.4))


SAMPLERS = {
    "two_mode": random_two_mode,
    "three_mode": random_three_mode,
    "dispersive": random_dispersive,
}
