"""Interval-excitation monitoring of the regressor.

The regression is identifiable iff int_0^tc phi phi' ds >= c_c * I for some
finite tc, so the smallest eigenvalue of the running Gram matrix is tracked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .linalg import lambda_min

DEFAULT_IE_THRESHOLD = 1e-6


@njit(cache=True)
def gram_rhs(phi, out):
    """Packed upper triangle of phi phi'."""
    n = phi.shape[0]
    k = 0
    for i in range(n):
        for j in range(i, n):
            out[k] = phi[i] * phi[j]
            k += 1


@dataclass(frozen=True)
class IEStatus:
    excited: bool
    lam_min: float
    crossing_time: float | None = None


def ie_status(G, threshold: float = DEFAULT_IE_THRESHOLD) -> IEStatus:
    if not threshold > 0:
        raise ValueError("excitation threshold must be positive")
    G = np.asarray(G, dtype=float)
    lam = float(lambda_min(0.5 * (G + G.T)))
    return IEStatus(excited=lam >= threshold, lam_min=lam)


@dataclass
class GramAccumulator:
    """Running Gram matrix with first-crossing bookkeeping.

    ``G`` is supplied by the integrator (it is part of the stacked state);
    :meth:`observe` records lambda_min and the first time it reaches the
    threshold.
    """

    threshold: float = DEFAULT_IE_THRESHOLD
    n: int = 5
    G: np.ndarray = field(default=None)
    t: float = 0.0
    lam_min: float = 0.0
    crossing_time: float | None = None

    def __post_init__(self):
        if not self.threshold > 0:
            raise ValueError("excitation threshold must be positive")
        if self.G is None:
            self.G = np.zeros((self.n, self.n))

    def observe(self, t: float, G) -> IEStatus:
        G = np.asarray(G, dtype=float)
        self.G = 0.5 * (G + G.T)
        self.t = t
        self.lam_min = float(lambda_min(self.G))
        if self.crossing_time is None and self.lam_min >= self.threshold:
            self.crossing_time = t
        return self.status()

    def status(self) -> IEStatus:
        return IEStatus(self.lam_min >= self.threshold, self.lam_min, self.crossing_time)

    @property
    def crossing_time_or_nan(self) -> float:
        return math.nan if self.crossing_time is None else self.crossing_time
