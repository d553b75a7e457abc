"""Classical fixed-step fourth-order Runge-Kutta.

``rk4_step`` accepts any Python callable; ``rk4_step_jit`` is the same tableau
for numba-compiled right-hand sides ``f(t, x, *args)`` and is meant to be
called from other jitted loops.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


class NonFiniteStateError(FloatingPointError):
    def __init__(self, t: float, component: str, stage: str):
        self.t = t
        self.component = component
        self.stage = stage
        super().__init__(f"non-finite value in {component} ({stage}) at t={t:.6g}")


def _check(k, t, stage, names):
    # dot() is a cheap screen: nan/inf propagate, huge finite values only cause a recheck
    if math.isfinite(k.dot(k)) or np.all(np.isfinite(k)):
        return
    i = int(np.flatnonzero(~np.isfinite(k))[0])
    name = names[i] if names is not None else f"x[{i}]"
    raise NonFiniteStateError(t, name, stage)


def rk4_step(f, t, x, h, names=None):
    """One RK4 step of dx/dt = f(t, x).

    Every stage derivative is checked; a non-finite entry raises
    :class:`NonFiniteStateError` naming the component (``names[i]`` if given).
    """
    x = np.asarray(x, dtype=float)
    k1 = np.asarray(f(t, x), dtype=float)
    _check(k1, t, "stage 1", names)
    k2 = np.asarray(f(t + 0.5 * h, x + (0.5 * h) * k1), dtype=float)
    _check(k2, t, "stage 2", names)
    k3 = np.asarray(f(t + 0.5 * h, x + (0.5 * h) * k2), dtype=float)
    _check(k3, t, "stage 3", names)
    k4 = np.asarray(f(t + h, x + h * k3), dtype=float)
    _check(k4, t, "stage 4", names)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def first_nonfinite(k):
    for i in range(k.shape[0]):
        if not np.isfinite(k[i]):
            return i
    return -1


@njit(cache=True)
def rk4_step_jit(f, t, x, h, args):
    """Jitted RK4 step; returns (x_next, bad_stage, bad_index).

    ``bad_stage`` is 0 on success, otherwise the 1-based stage whose
    derivative had a non-finite entry at ``bad_index`` (x is then returned
    unchanged).
    """
    k1 = f(t, x, *args)
    i = first_nonfinite(k1)
    if i >= 0:
        return x, 1, i
    k2 = f(t + 0.5 * h, x + (0.5 * h) * k1, *args)
    i = first_nonfinite(k2)
    if i >= 0:
        return x, 2, i
    k3 = f(t + 0.5 * h, x + (0.5 * h) * k2, *args)
    i = first_nonfinite(k3)
    if i >= 0:
        return x, 3, i
    k4 = f(t + h, x + h * k3, *args)
    i = first_nonfinite(k4)
    if i >= 0:
        return x, 4, i
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0, -1


def integrate_fixed(f, x0, t0, t1, h):
    """Integrate with a uniform step (last step shortened to land on t1)."""
    x = np.array(x0, dtype=float, copy=True)
    n = max(int(np.ceil((t1 - t0) / h - 1e-9)), 0)
    t = t0
    for k in range(n):
        t_next = min(t0 + (k + 1) * h, t1)
        x = rk4_step(f, t, x, t_next - t)
        t = t_next
    return x
