import math

import numpy as np
import pytest
from scipy import special

from isoctl.specfun import (BesselZeroTable, bessel_j, bessel_zero, hermite_fn, legendre_p,
                            spherical_harmonic)


def test_bessel_values():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert abs(bessel_j(0, 2.404825557695773)) <= 1e-10


def test_bessel_against_scipy():
    x = np.linspace(0.0, 100.0, 801)
    for n in range(0, 21):
        assert np.max(np.abs(bessel_j(n, x) - special.jv(n, x))) <= 1e-10


def test_bessel_recurrence():
    rng = np.random.default_rng(1)
    x = rng.uniform(0.1, 50, 200)
    for n in range(1, 11):
        lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
        assert np.max(np.abs(lhs - 2 * n / x * bessel_j(n, x))) <= 1e-9


def test_bessel_zeros():
    assert bessel_zero(0, 1) == pytest.approx(2.404825557695773, abs=1e-12)
    assert bessel_zero(1, 1) == pytest.approx(3.831705970207512, abs=1e-12)
    assert bessel_zero(0, 1) < bessel_zero(1, 1) < bessel_zero(0, 2)


def test_zero_table_invariants():
    t = BesselZeroTable(6, 12)
    for n in range(7):
        row = t.row(n)
        assert np.all(np.diff(row) > 0)
        assert np.max(np.abs(bessel_j(n, row))) <= 1e-12
        np.testing.assert_allclose(row, special.jn_zeros(n, 12), atol=1e-11)


def test_legendre_against_scipy():
    t = np.linspace(-1, 1, 101)
    for l in range(9):
        for m in range(0, l + 1):
            np.testing.assert_allclose(legendre_p(l, m, t), special.lpmv(m, l, t), atol=1e-10, rtol=1e-12)


def test_spherical_harmonic_examples():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(0, math.pi, 100), rng.uniform(0, 2 * math.pi, 100)
    np.testing.assert_allclose(spherical_harmonic(0, 0, a, b), 1 / math.sqrt(4 * math.pi))
    assert np.max(np.abs(np.abs(spherical_harmonic(3, -2, a, b)) - np.abs(spherical_harmonic(3, 2, a, b)))) <= 1e-12
    for l in range(9):
        for m in range(1, l + 1):
            lhs = spherical_harmonic(l, -m, a, b)
            rhs = (-1) ** m * np.exp(-2j * m * b) * spherical_harmonic(l, m, a, b)
            assert np.max(np.abs(lhs - rhs)) <= 1e-12
    # Gauss-Legendre in cos(alpha) times a uniform rule in beta
    t, w = np.polynomial.legendre.leggauss(40)
    beta = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    A, B = np.meshgrid(np.arccos(t), beta, indexing="ij")
    vals = np.abs(spherical_harmonic(2, 1, A, B)) ** 2
    assert np.sum(w[:, None] * vals) * (2 * math.pi / 64) == pytest.approx(1.0, abs=1e-6)


def test_hermite():
    assert hermite_fn(0, 0.0) == pytest.approx(math.pi ** -0.25)
    x = np.linspace(-12, 12, 4001)
    h = x[1] - x[0]
    f2, f3 = hermite_fn(2, x), hermite_fn(3, x)
    assert abs(np.trapezoid(f2 * f3, x)) <= 1e-8
    for k in (0, 5, 17, 30):
        assert np.trapezoid(hermite_fn(k, x) ** 2, x) == pytest.approx(1.0, abs=1e-8)
    xs = np.linspace(-8, 8, 4096)
    h = xs[1] - xs[0]
    f = hermite_fn(5, xs)
    d2 = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    res = -d2 + xs[1:-1] ** 2 * f[1:-1] - 11 * f[1:-1]
    assert np.max(np.abs(res)) <= 1e-3  # O(h^2) second differences at h ~ 4e-3


def test_hermite_moduli_differ():
    x = np.linspace(-6, 6, 2001)
    for k1 in range(6):
        for k2 in range(k1 + 1, 6):
            assert np.max(np.abs(np.abs(hermite_fn(k1, x)) - np.abs(hermite_fn(k2, x)))) > 0.1
