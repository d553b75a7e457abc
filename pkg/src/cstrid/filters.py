"""First-order filters and the filtered linear regression y = eta' phi.

Eliminating the Arrhenius term between the two balances gives

    -dT/dt = th1*th3 + th2*(T - T_in) + th3*(-dC_A/dt) + th4*(-u) + th2*th3*(-C_A)

which is passed through lambda/(p + lambda). Derivatives never have to be
formed: lambda*p/(p + lambda) is realized as lambda*(input - lowpass(input)).

Filter bank (one lowpass state per filtered signal)::

    0: -T        -> y    (bandpass)
    1: T - T_in  -> phi2 (lowpass)
    2: -C_A      -> phi3 (bandpass)
    3: -u        -> phi4 (lowpass)
    4: -C_A      -> phi5 (lowpass)

phi1 is the filtered unit constant, 1 - exp(-lambda*t).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

N_FILTERS = 5
FILTER_INIT_MODES = ("matched", "zero")


@njit(cache=True)
def lowpass_rhs(x, lam, inp):
    return -lam * x + lam * inp


@njit(cache=True)
def bandpass_output(x, lam, inp):
    """lambda*p/(p+lambda) applied to ``inp`` given the lowpass state ``x`` of ``inp``."""
    return lam * (inp - x)


@njit(cache=True)
def filter_inputs(C_A, T, T_in, u, out):
    out[0] = -T
    out[1] = T - T_in
    out[2] = -C_A
    out[3] = -u
    out[4] = -C_A


@njit(cache=True)
def filter_rhs(xf, C_A, T, T_in, u, lam, out):
    inp = np.empty(N_FILTERS)
    filter_inputs(C_A, T, T_in, u, inp)
    for i in range(N_FILTERS):
        out[i] = lowpass_rhs(xf[i], lam, inp[i])


@njit(cache=True)
def regressor(t, xf, C_A, T, T_in, u, lam, phi):
    """Fill ``phi`` (length 5) and return the filtered output y."""
    phi[0] = 1.0 - math.exp(-lam * t)
    phi[1] = xf[1]
    phi[2] = bandpass_output(xf[2], lam, -C_A)
    phi[3] = xf[3]
    phi[4] = xf[4]
    return bandpass_output(xf[0], lam, -T)


def initial_filter_state(C_A0: float, T0: float, T_in0: float, u0: float, mode: str = "matched"):
    """Initial filter bank.

    ``"zero"`` starts every state at rest, which leaves an exponentially
    decaying residual y - eta'phi = lambda*exp(-lambda t)*(th3*C_A(0) - T(0)).
    ``"matched"`` starts the two bandpass states at their input value so the
    bandpass outputs equal the filtered derivatives and the residual is
    identically zero.
    """
    xf = np.zeros(N_FILTERS)
    if mode == "matched":
        xf[0] = -T0
        xf[2] = -C_A0
    elif mode != "zero":
        raise ValueError(f"unknown filter init mode {mode!r}; expected one of {FILTER_INIT_MODES}")
    return xf


def eta_from_theta(theta) -> np.ndarray:
    """Overparameterized vector (th1*th3, th2, th3, th4, th2*th3)."""
    th = theta.as_array() if hasattr(theta, "as_array") else np.asarray(theta, dtype=float)
    return np.array([th[0] * th[2], th[1], th[2], th[3], th[1] * th[2]])
