"""Immersion-and-Invariance estimator of the Arrhenius exponent th5 = E/R.

The temperature balance is the nonlinear regression

    dT/dt = zeta1 - zeta2 * exp(th5 * phi),   phi = -1/T,
    zeta1 = th2 (T_in - T) + th4 u,   zeta2 = th3 k0 C_A.

The estimate is th5_hat = gamma_b ln T + rho_I, with

    drho_I/dt = gamma_b (zeta1 - zeta2 exp(th5_hat phi)) phi.

With the true zeta's ("ideal" variant) the error obeys
d(err)/dt = m (exp(-err phi) - 1) phi with m = gamma_b zeta2 exp(th5_hat phi) > 0,
so err^2 is nonincreasing. The certainty-equivalent variant plugs in the
LS+DREM estimates of th2..th4 and the estimator's own copy of k0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

EXP_CLAMP = 700.0


@dataclass(frozen=True)
class IiGains:
    gamma_b: float
    th3_sign: float = -1.0

    def __post_init__(self):
        if self.th3_sign == 0 or not self.gamma_b * math.copysign(1.0, self.th3_sign) > 0:
            raise ValueError(
                f"gamma_b*sign(th3) must be positive (gamma_b={self.gamma_b}, sign(th3)={self.th3_sign})"
            )


@njit(cache=True)
def rho_p(T, gamma_b):
    if not T > 0.0:
        raise ValueError("temperature must be positive")
    return gamma_b * math.log(T)


@njit(cache=True)
def theta5_estimate(rho_I, T, gamma_b):
    return rho_p(T, gamma_b) + rho_I


@njit(cache=True)
def clamped_exp(v):
    """exp(v) with v limited to [-700, 700]; returns (value, clamped)."""
    if v > EXP_CLAMP:
        return math.exp(EXP_CLAMP), True
    if v < -EXP_CLAMP:
        return math.exp(-EXP_CLAMP), True
    return math.exp(v), False


@njit(cache=True)
def _ii_rhs(rho_I, C_A, T, T_in, u, th2, th3, th4, k0, gamma_b):
    phi = -1.0 / T
    th5_hat = theta5_estimate(rho_I, T, gamma_b)
    ex, clamped = clamped_exp(th5_hat * phi)
    zeta1 = th2 * (T_in - T) + th4 * u
    zeta2 = th3 * k0 * C_A
    return gamma_b * (zeta1 - zeta2 * ex) * phi, clamped


@njit(cache=True)
def ii_rhs_certainty_equivalent(rho_I, C_A, T, T_in, u, th2_hat, th3_hat, th4_hat, k0_est, gamma_b):
    """drho_I/dt using estimated th2..th4 and the estimator's k0; returns (rate, clamped)."""
    return _ii_rhs(rho_I, C_A, T, T_in, u, th2_hat, th3_hat, th4_hat, k0_est, gamma_b)


@njit(cache=True)
def ii_rhs_ideal(rho_I, C_A, T, T_in, u, theta, k0, gamma_b):
    """Oracle variant with the true th2..th4 (``theta`` is the 5-array) and k0."""
    return _ii_rhs(rho_I, C_A, T, T_in, u, theta[1], theta[2], theta[3], k0, gamma_b)


@njit(cache=True)
def excitation_m(rho_I, C_A, T, th3, k0, gamma_b):
    """m = gamma_b * th3 * k0 * C_A * exp(th5_hat * phi)."""
    th5_hat = theta5_estimate(rho_I, T, gamma_b)
    ex, _ = clamped_exp(-th5_hat / T)
    return gamma_b * th3 * k0 * C_A * ex


@njit(cache=True)
def error_rhs(err, m, phi):
    """Scalar error dynamics m (exp(-err phi) - 1) phi."""
    return m * math.expm1(-err * phi) * phi


@njit(cache=True)
def f_negativity_check(z):
    return z * math.expm1(-z)
