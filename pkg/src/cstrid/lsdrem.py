"""Least squares with time-varying forgetting, interlaced with DREM mixing.

State: mu_hat (LS estimate of eta), F (LS gain), z (decaying scalar) and the
scalar-mixed estimates eta_hat[0:4]. The LS part obeys

    dmu/dt = alpha F phi (y - phi' mu)
    dF/dt  = -alpha F phi phi' F + beta F,       beta = beta0 (1 - |F|/M)
    dz/dt  = -beta z

and the mixing step uses A = I - z f0 F, Delta = det(A) and
Y = adj(A) (mu - z f0 F mu0), for which Y = Delta * eta holds exactly when
y = eta' phi. Each eta_hat[i] then follows the scalar gradient law
gamma_a Delta (Y_i - Delta eta_hat_i), whose error is monotone in |.|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .linalg import det_adj5

NORMS = ("frobenius", "spectral")


@dataclass(frozen=True)
class LsDremGains:
    alpha: float = 68.4
    f0: float = 0.1
    beta0: float = 30.6
    M: float = 130.5
    gamma_a: float = 1800.0

    def __post_init__(self):
        for name in ("alpha", "f0", "beta0", "gamma_a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")
        if not self.M >= 1.0 / self.f0:
            raise ValueError(f"M must satisfy M >= 1/f0 = {1.0 / self.f0}, got {self.M}")


@dataclass
class LsDremState:
    mu_hat: np.ndarray
    F: np.ndarray
    eta_hat14: np.ndarray
    z: float
    mu0: np.ndarray
    f0: float

    @classmethod
    def initial(cls, gains: LsDremGains, mu0, eta0, n: int = 5) -> "LsDremState":
        mu0 = np.broadcast_to(np.asarray(mu0, dtype=float), (n,)).copy()
        eta0 = np.broadcast_to(np.asarray(eta0, dtype=float), (4,)).copy()
        return cls(mu_hat=mu0.copy(), F=np.eye(n) / gains.f0, eta_hat14=eta0,
                   z=1.0, mu0=mu0, f0=gains.f0)


@njit(cache=True)
def matrix_norm(F, spectral):
    if spectral:
        return np.linalg.norm(F, 2)
    s = 0.0
    for i in range(F.shape[0]):
        for j in range(F.shape[1]):
            s += F[i, j] * F[i, j]
    return math.sqrt(s)


@njit(cache=True)
def forgetting_factor(F, beta0, M, spectral=False):
    return beta0 * (1.0 - matrix_norm(F, spectral) / M)


@njit(cache=True)
def lsdrem_rhs(mu_hat, F, z, phi, y, alpha, beta0, M, spectral=False):
    """Derivatives (dmu, dF, dz) of the least-squares block (any dimension)."""
    beta = forgetting_factor(F, beta0, M, spectral)
    Fphi = F @ phi
    e = y - phi @ mu_hat
    dmu = alpha * e * Fphi
    dF = beta * F - alpha * np.outer(Fphi, Fphi)
    dz = -beta * z
    return dmu, dF, dz


@njit(cache=True)
def mixing(mu_hat, F, z, f0, mu0):
    """(Delta, Y) of the DREM mixing step for the 5-dimensional regression."""
    A = -z * f0 * F
    for i in range(5):
        A[i, i] += 1.0
    Delta, adj = det_adj5(A)
    Y = adj @ (mu_hat - z * f0 * (F @ mu0))
    return Delta, Y


@njit(cache=True)
def eta_hat_rhs(eta_hat14, Delta, Y, gamma_a):
    out = np.empty(4)
    for i in range(4):
        out[i] = gamma_a * Delta * (Y[i] - Delta * eta_hat14[i])
    return out


@njit(cache=True)
def sticky_th1(eta1, eta3, eps_div, last_th1):
    """(th1, guarded): eta1/eta3, or ``last_th1`` held while |eta3| <= eps_div."""
    if abs(eta3) > eps_div:
        return eta1 / eta3, False
    return last_th1, True


class Theta14Extractor:
    """Map eta_hat[0:4] to (th1, th2, th3, th4) with a sticky division guard.

    th1 = eta1/eta3 is only recomputed while |eta3| > eps_div; otherwise the
    last value is held and ``guard_count`` is incremented.
    """

    def __init__(self, eps_div: float = 1e-6, initial_th1: float = math.nan):
        if not eps_div >= 0:
            raise ValueError("eps_div must be nonnegative")
        self.eps_div = eps_div
        self.last_th1 = initial_th1
        self.guard_count = 0
        self.guarded = False

    def th1(self, eta1: float, eta3: float) -> float:
        self.last_th1, self.guarded = sticky_th1(eta1, eta3, self.eps_div, self.last_th1)
        self.guard_count += int(self.guarded)
        return self.last_th1

    def __call__(self, eta_hat14) -> np.ndarray:
        e1, e2, e3, e4 = (float(v) for v in eta_hat14[:4])
        return np.array([self.th1(e1, e3), e2, e3, e4])


def extract_theta14(eta_hat14, eps_div: float = 1e-6, previous_th1: float = math.nan):
    """Stateless form: returns (theta_hat14, guard_engaged)."""
    ex = Theta14Extractor(eps_div, previous_th1)
    th = ex(eta_hat14)
    return th, ex.guarded
