"""Spectra of H0 = -d^2/dx^2 + V on circles, intervals and metric graphs.

Two paths: a secular (vertex-condition) solver for V = 0 that returns exact
eigenvalues when edge lengths are rational multiples of pi, and a finite
volume discretization for general bounded V.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy.optimize import minimize_scalar

from . import linalg
from .domain import START, BoundaryKind, Circle, discretize, pi_multiple
from .errors import AssemblyAsymmetry, GridTooCoarse, IncommensurateLengths, ValidationError
from .funcspace import RealFunction, TrigExpression, WaveFunction, trig_inner

GAP_REL = 1e-2
SCAN_STEP = 1e-3
NULL_TOL = 1e-8


@dataclass
class EigenPair:
    value: float
    function: WaveFunction
    cluster: int = 0
    index_in_cluster: int = 0
    exact: Fraction | None = None
    expr: TrigExpression | None = None

    @property
    def lam(self):
        return self.value


@dataclass
class SecularScan:
    omegas: np.ndarray
    sigma_min: np.ndarray
    roots: list = field(default_factory=list)  # (omega, nullity, exact omega or None)

    @property
    def eigenvalues(self):
        return [(r[2] ** 2 if r[2] is not None else r[0] ** 2, r[1]) for r in self.roots]


# ---------------------------------------------------------------------------
# helpers


def sample_potential(V, grid):
    """Potential samples on ``grid`` from None, a number, an array, a
    callable ``(edge, x)``, a TrigExpression or a RealFunction."""
    if V is None:
        return np.zeros(grid.size)
    if isinstance(V, WaveFunction):
        if not V.grid.same_as(grid):
            raise ValidationError("potential lives on a different grid")
        return np.real(V.values).astype(float)
    if isinstance(V, TrigExpression):
        return V.evaluate(grid).values.real
    if callable(V):
        return np.real(RealFunction.from_callable(grid, V).values)
    arr = np.asarray(V, dtype=float)
    if arr.ndim == 0:
        return np.full(grid.size, float(arr))
    if arr.shape != (grid.size,):
        raise ValidationError("potential array does not match grid")
    return arr


def cluster_values(values, rel=GAP_REL):
    """Cluster ids: a new cluster starts when the gap exceeds ``rel*(1+|lam|)``."""
    ids = []
    cid = -1
    prev = None
    for v in values:
        if prev is None or v - prev > rel * (1.0 + abs(v)):
            cid += 1
        ids.append(cid)
        prev = v
    return ids


def multiplicities(values, rel=GAP_REL):
    ids = cluster_values(values, rel)
    return [ids.count(c) for c in sorted(set(ids))]


def _label(pairs):
    ids = cluster_values([p.value for p in pairs])
    seen = {}
    for p, c in zip(pairs, ids):
        p.cluster = c
        p.index_in_cluster = seen.get(c, 0)
        seen[c] = p.index_in_cluster + 1
    return pairs


# ---------------------------------------------------------------------------
# finite differences


def assemble(grid, V=None):
    """Sparse stiffness ``K`` (with potential) and lumped mass on the unknowns.

    Each pair of neighbouring samples contributes a ``1/h`` link; vertex
    unknowns collect the links of every incident edge end, which is the
    ghost-point elimination of the Kirchhoff flux condition.  Dirichlet
    samples are fixed to zero and drop out.
    """
    dm = grid.dofs()
    s2d = dm.sample_to_dof
    vs = sample_potential(V, grid)
    rows, cols, vals = [], [], []
    off = grid.offsets
    w = grid.weights
    pot = np.zeros(dm.n)
    mask = s2d >= 0
    np.add.at(pot, s2d[mask], w[mask] * vs[mask])
    for j in range(len(grid.blocks)):
        h = grid.spacing(j)
        idx = np.arange(off[j], off[j + 1])
        if grid.periodic:
            a, b = idx, np.roll(idx, -1)
        else:
            a, b = idx[:-1], idx[1:]
        da, db = s2d[a], s2d[b]
        k = 1.0 / h
        for p, q in ((da, db), (db, da)):
            ok = p >= 0
            rows.append(p[ok]); cols.append(p[ok]); vals.append(np.full(ok.sum(), k))
            both = ok & (q >= 0)
            rows.append(p[both]); cols.append(q[both]); vals.append(np.full(both.sum(), -k))
    rows.append(np.arange(dm.n)); cols.append(np.arange(dm.n)); vals.append(pot)
    K = sps.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dm.n, dm.n)).tocsr()
    K.sum_duplicates()
    return K, dm


def symmetrized_operator(grid, V=None):
    """``M^{-1/2} K M^{-1/2}`` as a sparse matrix, plus the dof map."""
    K, dm = assemble(grid, V)
    s = 1.0 / np.sqrt(dm.mass)
    A = K.tocoo()
    # s_i * s_j is computed symmetrically, so A stays bitwise symmetric
    A = sps.csr_matrix((A.data * (s[A.row] * s[A.col]), (A.row, A.col)), shape=A.shape)
    if (A != A.T).nnz:
        raise AssemblyAsymmetry("discrete operator is not exactly symmetric")
    return A, dm


def _solve(A, n_modes, method):
    n = A.shape[0]
    n_modes = min(n_modes, n)
    if method == "auto":
        method = "sparse" if (n > 800 and n_modes < n // 4) else "dense"
    if method == "sparse":
        # Gershgorin lower bound keeps the shift below the whole spectrum
        diag = A.diagonal()
        off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(diag)
        lo = float(np.min(diag - off)) - 1.0
        w, v = spla.eigsh(A, k=n_modes, sigma=lo, which="LM", tol=1e-13)
        order = np.argsort(w)
        w, v = w[order], v[:, order]
        q, _ = np.linalg.qr(v)
        # re-orthogonalise inside (near-)degenerate clusters via Rayleigh-Ritz
        h = q.T @ (A @ q)
        ww, vv = np.linalg.eigh(0.5 * (h + h.T))
        return ww, q @ vv
    dense = A.toarray()
    w, v = linalg.eigh(dense, method="householder" if method == "householder" else "lapack")
    return w[:n_modes], v[:, :n_modes]


def fd_spectrum(grid, V=None, n_modes=10, method="auto"):
    """Lowest ``n_modes`` eigenpairs of the discrete operator on ``grid``."""
    for j in range(len(grid.blocks)):
        if len(grid.blocks[j]) < 3:
            raise GridTooCoarse("each edge needs at least 3 nodes")
    A, dm = symmetrized_operator(grid, V)
    w, y = _solve(A, n_modes, method)
    s = 1.0 / np.sqrt(dm.mass)
    pairs = []
    for k in range(len(w)):
        samples = dm.scatter(s * y[:, k])
        f = WaveFunction(grid, samples.astype(complex))
        # fix the sign so results are deterministic
        i = int(np.argmax(np.abs(samples)))
        if samples[i] < 0:
            f = -f
        pairs.append(EigenPair(float(w[k]), f))
    return _label(pairs)


def circle_spectrum(V=None, n_modes=5, grid=None, length=2 * math.pi, n_nodes=512, method="auto"):
    """Periodic second-difference spectrum plus diagonal potential."""
    if grid is None:
        grid = discretize(Circle(length), nodes_per_edge=n_nodes)
    if not grid.periodic:
        raise ValidationError("circle_spectrum needs a periodic grid")
    if grid.counts[0] < 8:
        raise GridTooCoarse("circle grid needs at least 8 nodes")
    return fd_spectrum(grid, V, n_modes, method)


def graph_spectrum_numeric(domain, V=None, grid=None, n_modes=10, nodes_per_edge=512, method="auto"):
    if grid is None:
        grid = discretize(domain, nodes_per_edge=nodes_per_edge)
    return fd_spectrum(grid, V, n_modes, method)


# ---------------------------------------------------------------------------
# secular equation (V = 0)


def _basis_ends(omega, L, marker):
    """Value and outgoing-derivative rows for basis (cos wx, sin(wx)/min(w,1))."""
    sc = min(omega, 1.0)
    x = 0.0 if marker == START else L
    sign = 1.0 if marker == START else -1.0
    val = np.array([math.cos(omega * x), math.sin(omega * x) / sc])
    der = sign * np.array([-omega * math.sin(omega * x), omega * math.cos(omega * x) / sc])
    return val, der / max(omega, 1.0)


def _basis_ends_zero(L, marker):
    """omega = 0: basis (1, x)."""
    x = 0.0 if marker == START else L
    sign = 1.0 if marker == START else -1.0
    return np.array([1.0, x]), sign * np.array([0.0, 1.0])


def secular_matrix(domain, omega):
    """Square vertex-condition matrix in the edge coefficients (A_j, B_j)."""
    E = domain.n_edges
    rows = []
    for v in domain.vertices:
        ends = []
        for j, marker in v.incident:
            L = domain.edges[j].length
            val, der = _basis_ends_zero(L, marker) if omega == 0 else _basis_ends(omega, L, marker)
            ends.append((j, val, der))
        if v.condition is BoundaryKind.DIRICHLET:
            for j, val, _ in ends:
                r = np.zeros(2 * E); r[2 * j : 2 * j + 2] = val; rows.append(r)
            continue
        j0, val0, _ = ends[0]
        for j, val, _ in ends[1:]:
            r = np.zeros(2 * E)
            r[2 * j0 : 2 * j0 + 2] += val0
            r[2 * j : 2 * j + 2] -= val
            rows.append(r)
        r = np.zeros(2 * E)
        for j, _, der in ends:
            r[2 * j : 2 * j + 2] += der
        rows.append(r)
    return np.array(rows)


def _sigma_min(domain, omega):
    return np.linalg.svd(secular_matrix(domain, omega), compute_uv=False)[-1]


def _commensurate(domain):
    return all(pi_multiple(e.length) is not None for e in domain.edges)


def _snap(omega, domain, max_den=12):
    cand = Fraction(omega).limit_denominator(max_den)
    if cand > 0 and abs(float(cand) - omega) < 1e-6:
        m = secular_matrix(domain, float(cand))
        sv = np.linalg.svd(m, compute_uv=False)
        if sv[-1] < NULL_TOL * max(1.0, sv[0]):
            return cand
    return None


def secular_scan(domain, lam_max, step=SCAN_STEP):
    """Scan omega = sqrt(lam) over (0, sqrt(lam_max)] for rank drops."""
    wmax = math.sqrt(lam_max)
    omegas = np.arange(step, wmax + 2 * step, step)
    mats = np.array([secular_matrix(domain, w) for w in omegas])
    sig = np.linalg.svd(mats, compute_uv=False)
    smin = sig[:, -1]
    scan = SecularScan(omegas, smin)
    exact_ok = _commensurate(domain)
    if not exact_ok:
        warnings.warn("edge lengths are not rational multiples of pi; roots left numeric", IncommensurateLengths)
    # omega = 0
    m0 = secular_matrix(domain, 0.0)
    s0 = np.linalg.svd(m0, compute_uv=False)
    null0 = int(np.sum(s0 < NULL_TOL * max(1.0, s0[0])))
    if null0:
        scan.roots.append((0.0, null0, Fraction(0)))
    for i in range(1, len(omegas) - 1):
        if not (smin[i] <= smin[i - 1] and smin[i] <= smin[i + 1]):
            continue
        res = minimize_scalar(lambda w: _sigma_min(domain, w), bounds=(omegas[i - 1], omegas[i + 1]),
                              method="bounded", options={"xatol": 1e-13})
        w = float(res.x)
        if w > wmax + 1e-9:
            continue
        sv = np.linalg.svd(secular_matrix(domain, w), compute_uv=False)
        exact = _snap(w, domain) if exact_ok else None
        if exact is not None:
            w = float(exact)
            sv = np.linalg.svd(secular_matrix(domain, w), compute_uv=False)
        tol = NULL_TOL * max(1.0, sv[0])
        nullity = int(np.sum(sv < tol))
        if nullity == 0:
            continue
        if scan.roots and abs(scan.roots[-1][0] - w) < 1e-6:
            continue
        scan.roots.append((w, nullity, exact))
    return scan


def _orthonormalize(exprs, domain):
    g = np.array([[trig_inner(p, q, domain) for q in exprs] for p in exprs])
    # symmetric (Loewdin) orthonormalisation keeps the basis close to the input
    w, v = np.linalg.eigh(g)
    t = v @ np.diag(w**-0.5) @ v.T
    out = []
    for k in range(len(exprs)):
        acc = TrigExpression.zero(domain.n_edges)
        for i, p in enumerate(exprs):
            if abs(t[i, k]) > 1e-15:
                acc = acc + p * float(t[i, k])
        out.append(acc.pruned(1e-13))
    return out


def _nullspace_exprs(domain, omega, nullity):
    m = secular_matrix(domain, float(omega))
    _, _, vt = np.linalg.svd(m)
    vecs = vt[-nullity:]
    exprs = []
    for vec in vecs:
        edges = []
        for j in range(domain.n_edges):
            a, b = vec[2 * j], vec[2 * j + 1]
            if omega == 0:
                if abs(b) > 1e-10:
                    raise ValidationError("linear zero mode is not supported")
                edges.append([(0, float(a), 0)])
            else:
                w = Fraction(omega).limit_denominator(10**6) if not isinstance(omega, Fraction) else omega
                edges.append([(w, float(a), float(b) / min(float(omega), 1.0))])
        exprs.append(TrigExpression(edges).pruned(1e-13))
    return exprs


def graph_spectrum_analytic(domain, lam_max, grid=None, n_per_edge=513):
    """Secular-equation spectrum for V = 0.

    Returns ``(scan, pairs)``; each EigenPair carries the exact eigenvalue
    (a Fraction) when the root snapped to a small-denominator rational, and
    its eigenfunction both as a TrigExpression and sampled on ``grid``.
    """
    scan = secular_scan(domain, lam_max)
    if grid is None:
        grid = discretize(domain, nodes_per_edge=n_per_edge)
    pairs = []
    for w, nullity, exact in scan.roots:
        om = exact if exact is not None else w
        exprs = _orthonormalize(_nullspace_exprs(domain, om, nullity), domain)
        lam = exact**2 if exact is not None else None
        for e in exprs:
            f = WaveFunction(grid, e.evaluate(grid).values.astype(complex))
            pairs.append(EigenPair(float(w) ** 2, f, exact=lam, expr=e))
    return scan, _label(pairs)


def spectrum_clusters(pairs):
    """``[(lam, multiplicity)]`` from labelled pairs; exact values where known."""
    out = {}
    for p in pairs:
        lam = p.exact if p.exact is not None else p.value
        key = p.cluster
        if key not in out:
            out[key] = [lam, 0]
        out[key][1] += 1
    return [tuple(v) for _, v in sorted(out.items())]


# ---------------------------------------------------------------------------
# residuals


def eigen_residual(domain, V, phi, lam, skip=2):
    """L2 norm of ``-phi'' + V phi - lam phi`` by second differences,
    leaving out ``skip`` nodes next to each vertex."""
    grid = phi.grid
    vs = sample_potential(V, grid)
    total = 0.0
    for j, (b, vals, vv) in enumerate(zip(grid.blocks, grid.split(phi.values), grid.split(vs))):
        h = grid.spacing(j)
        if grid.periodic:
            d2 = (np.roll(vals, -1) - 2 * vals + np.roll(vals, 1)) / h**2
            r = -d2 + (vv - lam) * vals
            total += h * np.sum(np.abs(r) ** 2)
        else:
            i = np.arange(1 + skip, len(vals) - 1 - skip)
            d2 = (vals[i + 1] - 2 * vals[i] + vals[i - 1]) / h**2
            r = -d2 + (vv[i] - lam) * vals[i]
            total += h * np.sum(np.abs(r) ** 2)
    return math.sqrt(total)
