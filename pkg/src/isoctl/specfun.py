"""Bessel J_n and its zeros, associated Legendre functions, spherical
harmonics and Hermite functions, written from series and recurrences."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ConvergenceFailure, ValidationError

SERIES_LIMIT = 12.0


def _bessel_series(n, x):
    half = x / 2.0
    term = half**n / math.factorial(n)
    total = term.copy()
    q = -(half * half)
    for k in range(1, 80):
        term = term * q / (k * (k + n))
        total = total + term
        if np.all(np.abs(term) < 1e-17 * np.maximum(1.0, np.abs(total))):
            break
    return total


def _bessel_miller(n, x):
    """Downward recurrence normalised by J0 + 2*sum J_2k = 1 (valid for x > 0)."""
    xmax = float(np.max(x))
    top = max(n, int(xmax)) + 30 + int(math.sqrt(60 * max(n, xmax)))
    top += top % 2
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    result = np.zeros_like(x)
    for m in range(top, 0, -1):
        j_prev = (2.0 * m / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if m - 1 == n:
            result = j_cur.copy()
        if (m - 1) % 2 == 0 and m - 1 > 0:
            norm = norm + 2.0 * j_cur
        big = np.abs(j_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j_cur, j_next, norm, result = j_cur * scale, j_next * scale, norm * scale, result * scale
    norm = norm + j_cur  # j_cur is now J_0 (unnormalised)
    return result / norm


def bessel_j(n, x):
    """J_n(x) for integer ``n >= 0`` and ``x >= 0`` (scalar or array).

    Power series up to ``x = 12``, Miller's downward recurrence beyond.
    """
    if n < 0:
        raise ValidationError("bessel_j needs n >= 0")
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValidationError("bessel_j needs x >= 0")
    out = np.empty_like(x)
    small = x <= SERIES_LIMIT
    if np.any(small):
        out[small] = _bessel_series(n, x[small])
    if np.any(~small):
        out[~small] = _bessel_miller(n, x[~small])
    return float(out[0]) if scalar else out


def bessel_j_prime(n, x):
    """J_n'(x) from J_{n-1} - J_{n+1} (and -J_1 for n = 0)."""
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def mcmahon_guess(n, k):
    beta = (k + n / 2.0 - 0.25) * math.pi
    mu = 4.0 * n * n
    return beta - (mu - 1) / (8 * beta) - 4 * (mu - 1) * (7 * mu - 31) / (3 * (8 * beta) ** 3)


def _bisect(n, lo, hi, tol=1e-12, max_iter=200):
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = bessel_j(n, lo)
    fhi = bessel_j(n, hi)
    if np.any(flo * fhi > 0):
        raise ConvergenceFailure(f"bracket for J_{n} has no sign change")
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        fm = bessel_j(n, mid)
        left = flo * fm <= 0
        hi = np.where(left, mid, hi)
        lo = np.where(left, lo, mid)
        flo = np.where(left, flo, fm)
    raise ConvergenceFailure(f"bisection for zeros of J_{n} did not converge")


def _zeros_order0(kmax):
    guesses = np.array([mcmahon_guess(0, k) for k in range(1, kmax + 1)])
    return _bisect(0, guesses - 0.5, guesses + 0.5)


class BesselZeroTable:
    """Zeros j_{n,k} for ``n <= n_max``, ``k <= k_max``, built eagerly.

    Order 0 is bracketed around McMahon's expansion; higher orders use the
    interlacing ``j_{n,k} < j_{n+1,k} < j_{n,k+1}``, so every bracket holds
    exactly one zero and plain bisection always converges.
    """

    def __init__(self, n_max=20, k_max=50):
        self.n_max, self.k_max = n_max, k_max
        rows = [_zeros_order0(k_max + n_max + 1)]
        for n in range(1, n_max + 1):
            prev = rows[-1]
            rows.append(_bisect(n, prev[:-1], prev[1:]))
        self._rows = [r[:k_max] for r in rows]

    def __call__(self, n, k):
        if not (0 <= n <= self.n_max and 1 <= k <= self.k_max):
            raise ValidationError(f"zero ({n},{k}) outside table range")
        return float(self._rows[n][k - 1])

    def row(self, n):
        return self._rows[n].copy()


@lru_cache(maxsize=None)
def _default_table(n_max, k_max):
    return BesselZeroTable(n_max, k_max)


def bessel_zero(n, k):
    """k-th positive zero of J_n (``n <= 20``, ``k <= 50``)."""
    if not (0 <= n <= 20 and 1 <= k <= 50):
        raise ValidationError("bessel_zero supports n <= 20, k <= 50")
    # small tables cover the common small indices without paying for the full one
    if n <= 4 and k <= 10:
        return _default_table(4, 10)(n, k)
    return _default_table(20, 50)(n, k)


# ---------------------------------------------------------------------------
# Legendre / spherical harmonics


def legendre_p(l, m, t):
    """Associated Legendre P_l^m(t) with the Condon-Shortley phase, |m| <= l."""
    if abs(m) > l:
        raise ValidationError("need |m| <= l")
    t = np.asarray(t, dtype=float)
    if m < 0:
        mm = -m
        factor = (-1) ** mm * math.factorial(l - mm) / math.factorial(l + mm)
        return factor * legendre_p(l, mm, t)
    somx2 = np.sqrt(np.clip((1.0 - t) * (1.0 + t), 0.0, None))
    pmm = np.ones_like(t)
    fact = 1.0
    for _ in range(m):
        pmm = -pmm * fact * somx2
        fact += 2.0
    if l == m:
        return pmm
    pmmp1 = t * (2 * m + 1) * pmm
    if l == m + 1:
        return pmmp1
    for ll in range(m + 2, l + 1):
        pll = (t * (2 * ll - 1) * pmmp1 - (ll + m - 1) * pmm) / (ll - m)
        pmm, pmmp1 = pmmp1, pll
    return pmmp1


def spherical_harmonic(l, m, alpha, beta):
    """Y_l^m at polar angle ``alpha`` and azimuth ``beta``."""
    norm = math.sqrt((2 * l + 1) / (4 * math.pi) * math.factorial(l - m) / math.factorial(l + m))
    return norm * legendre_p(l, m, np.cos(alpha)) * np.exp(1j * m * np.asarray(beta, dtype=float))


# ---------------------------------------------------------------------------
# Hermite functions


def hermite_fn(k, x):
    """Orthonormal Hermite function H_k(x) exp(-x^2/2) via the three-term recurrence."""
    if k < 0 or k > 30:
        raise ValidationError("hermite_fn supports 0 <= k <= 30")
    x = np.asarray(x, dtype=float)
    p0 = math.pi**-0.25 * np.exp(-0.5 * x * x)
    if k == 0:
        return p0
    p1 = math.sqrt(2.0) * x * p0
    for j in range(1, k):
        p0, p1 = p1, math.sqrt(2.0 / (j + 1)) * x * p1 - math.sqrt(j / (j + 1)) * p0
    return p1
