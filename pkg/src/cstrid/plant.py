"""CSTR plant model, parameter lumping and the exogenous temperature signals.

The reactor is written in the lumped form

    dC_A/dt = th1 - th2*C_A - k0*exp(-th5/T)*C_A
    dT/dt   = th2*(T_in - T) - th3*k0*exp(-th5/T)*C_A + th4*u,   u = T_w - T

with th = (q*C_in/V, q/V, dH/rhoCp, hA/(rhoCp*V), E/R). Only k0 is treated as
known by the estimators, so it is kept outside of ``Theta``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

import numpy as np
from numba import njit


@dataclass(frozen=True)
class PhysicalParams:
    """Raw reactor constants (units: m^3, hr, kcal, kgmol, K)."""

    q: float = 1.0
    V: float = 1.0
    k0: float = 3.5e7
    E: float = 11850.0
    R: float = 1.98589
    C_in: float = 10.0
    dH: float = -5960.0
    rhoCp: float = 480.0
    hA: float = 145.0

    def __post_init__(self):
        for name in ("q", "V", "k0", "E", "R", "C_in", "rhoCp", "hA"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"physical parameter {name} must be positive, got {value}")
        if not math.isfinite(self.dH) or self.dH == 0:
            raise ValueError(f"reaction enthalpy dH must be nonzero, got {self.dH}")


REFERENCE_PARAMS = PhysicalParams()


@dataclass(frozen=True)
class Theta:
    th1: float
    th2: float
    th3: float
    th4: float
    th5: float

    def __post_init__(self):
        for name in ("th1", "th2", "th4", "th5"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.th3 == 0:
            raise ValueError("th3 must be nonzero")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "Theta":
        return cls(*(float(v) for v in values))


def theta_from_physical(p: PhysicalParams) -> Theta:
    # positivity of q, V, rhoCp, R, E is enforced by PhysicalParams itself
    return Theta(
        th1=p.q * p.C_in / p.V,
        th2=p.q / p.V,
        th3=p.dH / p.rhoCp,
        th4=p.hA / (p.rhoCp * p.V),
        th5=p.E / p.R,
    )


@njit(cache=True)
def arrhenius_rate(th5, k0, C_A, T):
    """Reaction rate k0*exp(-th5/T)*C_A."""
    if not T > 0.0:
        raise ValueError("temperature must be positive")
    return k0 * math.exp(-th5 / T) * C_A


@njit(cache=True)
def plant_rhs(C_A, T, T_in, T_w, theta, k0):
    """Time derivative (dC_A, dT) of the lumped model; ``theta`` is the 5-array."""
    r = arrhenius_rate(theta[4], k0, C_A, T)
    u = T_w - T
    dC_A = theta[0] - theta[1] * C_A - r
    dT = theta[1] * (T_in - T) - theta[2] * r + theta[3] * u
    return dC_A, dT


def physical_rhs(p: PhysicalParams, C_A: float, T: float, T_in: float, T_w: float):
    """Mass and energy balances written directly in the raw constants."""
    r = p.k0 * math.exp(-p.E / (p.R * T)) * C_A
    dC_A = p.q / p.V * (p.C_in - C_A) - r
    dT = p.q / p.V * (T_in - T) - p.dH / p.rhoCp * r + p.hA / (p.rhoCp * p.V) * (T_w - T)
    return dC_A, dT


@njit(cache=True)
def tw_signal(t):
    """Heat-exchanger temperature 350 - 20*exp(-0.001 t)*cos(4 t)."""
    return 350.0 - 20.0 * math.exp(-0.001 * t) * math.cos(4.0 * t)


@njit(cache=True)
def tin_signal(t):
    """Influent temperature: 297 on [0,7), 299 on [7,12], 298 afterwards."""
    if t < 7.0:
        return 297.0
    if t <= 12.0:
        return 299.0
    return 298.0


TIN_BREAKPOINTS = (7.0, 12.0)


class ReferenceTin:
    """Piecewise-constant influent temperature profile of the reference study."""

    breakpoints = TIN_BREAKPOINTS
    smooth = False

    def __call__(self, t: float) -> float:
        return tin_signal(t)

    def segment_value(self, a: float, b: float) -> float:
        # value on the open interval (a, b)
        return tin_signal(0.5 * (a + b))


class ReferenceTw:
    breakpoints: tuple = ()
    smooth = True

    def __call__(self, t: float) -> float:
        return tw_signal(t)

    def segment_value(self, a: float, b: float) -> float:
        return float("nan")


class TabulatedSignal:
    """Zero-order-hold signal read from (t, value) pairs.

    Before the first tabulated time the first value is used.
    """

    smooth = False

    def __init__(self, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size == 0:
            raise ValueError("tabulated signal needs matching, non-empty 1-D arrays")
        if np.any(np.diff(times) <= 0):
            raise ValueError("tabulated signal times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("tabulated signal contains non-finite entries")
        self.times = times
        self.values = values
        self.breakpoints = tuple(float(t) for t in times if t > 0)

    @classmethod
    def from_csv(cls, path) -> "TabulatedSignal":
        times, values = [], []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    t, v = float(row[0]), float(row[1])
                except ValueError:
                    if not times:  # header line
                        continue
                    raise ValueError(f"{path}: malformed row {row!r}") from None
                times.append(t)
                values.append(v)
        return cls(times, values)

    def __call__(self, t: float) -> float:
        i = np.searchsorted(self.times, t, side="right") - 1
        return float(self.values[max(i, 0)])

    def segment_value(self, a: float, b: float) -> float:
        return self(0.5 * (a + b))
