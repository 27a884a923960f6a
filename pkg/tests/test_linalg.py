import numpy as np
import pytest

from isoctl.errors import AssemblyAsymmetry
from isoctl.linalg import check_symmetric, eigh, householder_tridiag


@pytest.mark.parametrize("n", [1, 2, 7, 60])
def test_householder_ql_matches_lapack(n):
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n))
    a = a + a.T
    w, v = eigh(a, method="householder")
    w0 = np.linalg.eigvalsh(a)
    np.testing.assert_allclose(w, w0, atol=1e-11 * max(1, np.abs(w0).max()))
    np.testing.assert_allclose(v.T @ v, np.eye(n), atol=1e-12)
    np.testing.assert_allclose(a @ v, v * w, atol=1e-10)


def test_tridiagonal_form():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((12, 12))
    a = a + a.T
    d, e, q = householder_tridiag(a)
    t = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    np.testing.assert_allclose(q @ t @ q.T, a, atol=1e-12)


def test_asymmetry_detected():
    a = np.eye(3)
    a[0, 1] = 1e-3
    with pytest.raises(AssemblyAsymmetry):
        check_symmetric(a)
