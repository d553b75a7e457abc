"""Small dense kernels: symmetric packing, cofactor det/adjugate, Jacobi eigenvalues."""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def packed_size(n):
    return n * (n + 1) // 2


@njit(cache=True)
def pack_sym(A, out):
    """Row-major upper triangle of ``A`` into ``out``."""
    n = A.shape[0]
    k = 0
    for i in range(n):
        for j in range(i, n):
            out[k] = A[i, j]
            k += 1


@njit(cache=True)
def unpack_sym(p, n):
    A = np.empty((n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            A[i, j] = p[k]
            A[j, i] = p[k]
            k += 1
    return A


@njit(cache=True)
def det3(a00, a01, a02, a10, a11, a12, a20, a21, a22):
    return (a00 * (a11 * a22 - a12 * a21)
            - a01 * (a10 * a22 - a12 * a20)
            + a02 * (a10 * a21 - a11 * a20))


@njit(cache=True)
def det4(M):
    """Determinant of a 4x4 array by cofactor expansion along the first row."""
    d = 0.0
    sign = 1.0
    for j in range(4):
        # columns other than j, in order
        c0 = 1 if j == 0 else 0
        c1 = 2 if j <= 1 else 1
        c2 = 3 if j <= 2 else 2
        m = det3(M[1, c0], M[1, c1], M[1, c2],
                 M[2, c0], M[2, c1], M[2, c2],
                 M[3, c0], M[3, c1], M[3, c2])
        d += sign * M[0, j] * m
        sign = -sign
    return d


@njit(cache=True)
def det_adj5(A):
    """Determinant and adjugate of a 5x5 matrix from its 25 cofactors.

    Valid at det(A) == 0, where the adjugate is not det(A)*inv(A).
    """
    C = np.empty((5, 5))
    minor = np.empty((4, 4))
    for i in range(5):
        for j in range(5):
            r = 0
            for ii in range(5):
                if ii == i:
                    continue
                c = 0
                for jj in range(5):
                    if jj == j:
                        continue
                    minor[r, c] = A[ii, jj]
                    c += 1
                r += 1
            s = 1.0 if (i + j) % 2 == 0 else -1.0
            C[i, j] = s * det4(minor)
    d = 0.0
    for j in range(5):
        d += A[0, j] * C[0, j]
    return d, C.T.copy()


def det_laplace(A) -> float:
    """Recursive Laplace expansion; slow reference for any square size."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(A[0, 0])
    total = 0.0
    for j in range(n):
        minor = np.delete(A[1:], j, axis=1)
        total += (-1) ** j * A[0, j] * det_laplace(minor)
    return total


@njit(cache=True)
def jacobi_eigenvalues(S, tol=1e-12, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Iterates until the off-diagonal Frobenius norm is below ``tol`` times the
    Frobenius norm of ``S``. Returns the eigenvalues in ascending order.
    """
    n = S.shape[0]
    A = S.copy()
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += A[i, j] * A[i, j]
    scale = math.sqrt(scale)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * A[i, j] * A[i, j]
        if math.sqrt(off) <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
    w = np.empty(n)
    for i in range(n):
        w[i] = A[i, i]
    w.sort()
    return w


@njit(cache=True)
def lambda_min(S):
    return jacobi_eigenvalues(S)[0]
