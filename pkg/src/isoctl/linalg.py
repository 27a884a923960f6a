"""Dense symmetric eigensolvers.

``eigh`` dispatches to LAPACK through numpy by default.  The hand-written
Householder tridiagonalization plus implicit QL iteration below is kept as a
portable reference path and as a cross-check in the tests.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import AssemblyAsymmetry, ConvergenceFailure


def check_symmetric(a, name="matrix"):
    """Raise unless ``a`` equals its transpose bit for bit."""
    if not np.array_equal(a, a.T):
        raise AssemblyAsymmetry(f"{name} is not exactly symmetric (max diff {np.max(np.abs(a - a.T)):.3e})")


def householder_tridiag(a):
    """Reduce symmetric ``a`` to tridiagonal form ``Q^T a Q``.

    Returns ``(d, e, Q)`` with diagonal ``d``, sub-diagonal ``e`` (length n-1)
    and orthogonal ``Q``.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        alpha = -math.copysign(np.linalg.norm(x), x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        # a <- H a H with H = I - 2 v v^T acting on rows/cols k+1..
        sub = a[k + 1 :, k:]
        sub -= 2.0 * np.outer(v, v @ sub)
        a[k + 1 :, k:] = sub
        sub = a[k:, k + 1 :]
        sub -= 2.0 * np.outer(sub @ v, v)
        a[k:, k + 1 :] = sub
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v)
    d = np.diag(a).copy()
    e = np.diag(a, -1).copy()
    return d, e, q


def tql_implicit(d, e, z=None, max_iter=60):
    """Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.

    ``z`` (if given) accumulates the rotations, so passing the Householder
    ``Q`` yields eigenvectors of the original matrix.  Returns ascending
    eigenvalues and matching eigenvector columns.
    """
    d = np.array(d, dtype=float)
    n = len(d)
    e = np.concatenate([np.asarray(e, dtype=float), [0.0]])
    z = np.eye(n) if z is None else np.array(z, dtype=float)
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > max_iter:
                raise ConvergenceFailure("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                col = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * col
                z[:, i] = c * z[:, i] - s * col
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], z[:, order]


def eigh_householder(a):
    d, e, q = householder_tridiag(a)
    return tql_implicit(d, e, q)


def eigh(a, method="lapack"):
    """Ascending eigenvalues and orthonormal eigenvectors of symmetric ``a``."""
    check_symmetric(a)
    if method == "householder":
        return eigh_householder(a)
    w, v = np.linalg.eigh(a)
    return w, v
