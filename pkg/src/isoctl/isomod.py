"""Eigenfunctions sharing the same modulus: detection, scans, constructions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .domain import Circle, discretize
from .errors import (GridMismatch, GridTooCoarse, ModulusVanishes, NonPositiveRho, NotOrthogonal,
                     NotReal, ValidationError)
from .funcspace import RealFunction, TrigExpression, WaveFunction

TOL_ANALYTIC = 1e-8
TOL_NUMERIC = 1e-4
N_RANDOM = 32
DEFAULT_SEED = 20240607


@dataclass
class ModulusReport:
    first: str
    second: str
    deviation: float
    verdict: str  # "shares" | "rejects"
    tol: float
    witness: float | None = None  # coordinate index of the largest deviation
    witness_deviation: float | None = None
    seed: int | None = None

    @property
    def shares(self):
        return self.verdict == "shares"

    @property
    def witness_ok(self):
        """A rejection is conclusive when the witness beats ten times the tolerance."""
        return self.shares or (self.witness_deviation or 0.0) > 10 * self.tol

    def to_dict(self):
        return asdict(self)


def _values(f):
    return f.values if isinstance(f, WaveFunction) else np.asarray(f)


def shares_modulus(f, g, tol_share=TOL_ANALYTIC, names=("f", "g")):
    """Compare ``|f|`` and ``|g|`` pointwise (sup norm of the difference)."""
    if isinstance(f, WaveFunction) and isinstance(g, WaveFunction):
        if not f.grid.same_as(g.grid):
            raise GridMismatch("moduli compared on different grids")
    a, b = np.abs(_values(f)).ravel(), np.abs(_values(g)).ravel()
    if a.shape != b.shape:
        raise GridMismatch("sample arrays differ in shape")
    diff = np.abs(a - b)
    i = int(np.argmax(diff))
    dev = float(diff[i])
    if dev <= tol_share:
        return ModulusReport(names[0], names[1], dev, "shares", tol_share)
    return ModulusReport(names[0], names[1], dev, "rejects", tol_share, witness=i, witness_deviation=dev)


def _normalize(vals, weights):
    if weights is None:
        return vals / math.sqrt(np.mean(np.abs(vals) ** 2))
    return vals / math.sqrt(np.sum(weights * np.abs(vals) ** 2))


def eigenspace_isomod_pair(f1, f2, weights=None, tol_orth=1e-6):
    """``(f1 + i f2, f1 - i f2)`` normalised; ``|f1 +/- i f2|^2 = f1^2 + f2^2``.

    ``f1``, ``f2`` are real WaveFunctions, or sample arrays with optional
    quadrature ``weights``.
    """
    wave = isinstance(f1, WaveFunction)
    if wave:
        if not f1.grid.same_as(f2.grid):
            raise GridMismatch("eigenfunctions on different grids")
        weights = f1.grid.weights
    v1, v2 = np.asarray(_values(f1)), np.asarray(_values(f2))
    for v in (v1, v2):
        if np.max(np.abs(np.imag(v))) > 1e-12 * max(1.0, np.max(np.abs(v))):
            raise NotReal("eigenspace_isomod_pair needs real eigenfunctions")
    v1, v2 = _normalize(np.real(v1), weights), _normalize(np.real(v2), weights)
    ip = np.sum(weights * v1 * v2) if weights is not None else np.mean(v1 * v2)
    if abs(ip) > tol_orth:
        raise NotOrthogonal(f"inner product {ip:.3e} exceeds {tol_orth}")
    # |f1 + i f2| = |f1 - i f2| holds bit for bit since only the sign of Im flips
    plus = (v1 + 1j * v2) / math.sqrt(2.0)
    minus = (v1 - 1j * v2) / math.sqrt(2.0)
    if wave:
        return WaveFunction(f1.grid, plus), WaveFunction(f1.grid, minus)
    return plus, minus


# ---------------------------------------------------------------------------
# catalog scans


def default_points(entry, n=129):
    """Family-specific sample points (a Grid for graph and 1-D torus entries)."""
    fam = entry.family
    if entry.expr is not None:
        return discretize(entry.domain, nodes_per_edge=n)
    if fam == "Torus":
        xs = np.linspace(0, 2 * math.pi, 48, endpoint=False)
        if entry.dim == 1:
            return discretize(Circle(), nodes_per_edge=n)
        return tuple(np.meshgrid(*([xs] * entry.dim), indexing="ij"))
    if fam == "Disk":
        r = np.linspace(0.0, 1.0, 61)
        th = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        return tuple(np.meshgrid(r, th, indexing="ij"))
    if fam == "Sphere":
        a = np.linspace(0.0, math.pi, 61)
        b = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        return tuple(np.meshgrid(a, b, indexing="ij"))
    if fam == "Hermite":
        xs = np.linspace(-6, 6, 241 if entry.dim == 1 else 61)
        return tuple(np.meshgrid(*([xs] * entry.dim), indexing="ij"))
    raise ValidationError(f"no sample points for {fam}")


def sample_entry(entry, points):
    if hasattr(points, "blocks"):
        return entry.sample(points).values
    return np.asarray(entry(*points)).ravel()


def raw_combination(entries, coeffs, points):
    """Normalised combination of the entries' unnormalised forms.

    Graph entries combine their raw expressions (so the classical identities
    such as ``phi_{k,e,1} + i phi_{k,e,2} + i phi_{k,e,3} = (eta_k, eta_k)``
    hold verbatim); other families combine unit-norm evaluations.
    """
    total = 0
    for e, a in zip(entries, coeffs):
        vals = e.expr.evaluate(points).values if e.expr is not None else sample_entry(e, points)
        total = total + a * vals
    total = np.asarray(total, dtype=complex)
    if hasattr(points, "blocks"):
        return total / math.sqrt(np.sum(points.weights * np.abs(total) ** 2))
    return total


def _random_unit(rng, dim):
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def _normalize_on(points, vals):
    if hasattr(points, "blocks"):
        return vals / math.sqrt(np.sum(points.weights * np.abs(vals) ** 2))
    return vals


def eigenspaces(entries, rel=1e-9):
    """Group entries by eigenvalue (ascending)."""
    groups = []
    for e in sorted(entries, key=lambda e: float(e.lam)):
        lam = float(e.lam)
        if groups and abs(groups[-1][0] - lam) <= rel * (1 + abs(lam)):
            groups[-1][1].append(e)
        else:
            groups.append((lam, [e]))
    return groups


def scan_catalog_pairs(entries, tol_share=TOL_ANALYTIC, points=None, n_random=N_RANDOM,
                       seed=DEFAULT_SEED, extra=(), distinct_levels_only=False):
    """Test all unordered pairs of candidates drawn from ``entries``.

    Candidates are the entries themselves plus, for eigenspaces of dimension
    at least two, ``n_random`` random unit complex combinations (fixed seed).
    ``extra`` adds named candidates as ``(lam, label, values)``.
    """
    if not entries:
        return []
    if points is None:
        points = default_points(entries[0])
    rng = np.random.default_rng(seed)
    cands = []
    for lam, group in eigenspaces(entries):
        vals = [sample_entry(e, points) for e in group]
        for e, v in zip(group, vals):
            cands.append((lam, e.label, v))
        if len(group) >= 2:
            for r in range(n_random):
                z = _random_unit(rng, len(group))
                v = _normalize_on(points, sum(zi * vi for zi, vi in zip(z, vals)))
                cands.append((lam, f"rand[{lam:g}]#{r}", v))
    for lam, label, v in extra:
        cands.append((float(lam), label, np.asarray(v).ravel()))
    reports = []
    for i in range(len(cands)):
        for j in range(i + 1, len(cands)):
            li, ni, vi = cands[i]
            lj, nj, vj = cands[j]
            if distinct_levels_only and abs(li - lj) <= 1e-9 * (1 + abs(li)):
                continue
            rep = shares_modulus(vi, vj, tol_share, names=(ni, nj))
            rep.seed = seed
            reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# constructive circle example and the theta structure


@dataclass
class CircleExample:
    theta: RealFunction
    V: RealFunction
    phi_plus: WaveFunction
    phi_minus: WaveFunction
    C: float
    winding: float = field(default=0.0)


def _periodic_derivatives(vals, length):
    n = len(vals)
    k = np.fft.rfftfreq(n, d=length / n) * 2 * math.pi
    f = np.fft.rfft(vals)
    d1 = np.fft.irfft(1j * k * f, n)
    d2 = np.fft.irfft(-(k**2) * f, n)
    return d1, d2


def construct_circle_example(rho, j=1, grid=None, n_nodes=8192):
    """Potential with two isomodulus eigenfunctions ``rho e^{+/- i theta}`` at 0.

    ``rho`` is a single-edge TrigExpression, a callable of ``x`` or periodic
    samples on ``grid``.
    """
    if j < 1 or int(j) != j:
        raise ValidationError("j must be a positive integer")
    if grid is None:
        grid = discretize(Circle(), nodes_per_edge=n_nodes if not isinstance(rho, np.ndarray) else len(rho))
    if not grid.periodic:
        raise ValidationError("construct_circle_example needs a periodic grid")
    x = grid.x
    L = grid.domain.edges[0].length
    h = grid.spacing(0)
    if isinstance(rho, TrigExpression):
        r = rho.evaluate_edge(0, x)
        r2 = rho.derivative().derivative().evaluate_edge(0, x)
    else:
        r = np.asarray(rho(x) if callable(rho) else rho, dtype=float)
        _, r2 = _periodic_derivatives(r, L)
    if np.min(r) <= 0:
        raise NonPositiveRho("rho must be positive on the circle")
    g = r**-2
    total = h * np.sum(g)  # periodic trapezoid
    C = 2 * math.pi / total
    # cumulative trapezoid from x = 0; the closing interval adds the rest
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (g[1:] + g[:-1]))])
    theta = C * j * cum
    winding = C * j * (cum[-1] + 0.5 * h * (g[-1] + g[0]))
    V = r2 / r - (C * j) ** 2 / r**4
    phi = r * np.exp(1j * theta)
    norm = math.sqrt(h * np.sum(np.abs(phi) ** 2))
    return CircleExample(RealFunction(grid, theta), RealFunction(grid, V),
                         WaveFunction(grid, phi / norm), WaveFunction(grid, np.conj(phi) / norm), C, winding)


def unwrapped_phase(phi):
    """Cumulative argument of ``phi`` along each edge block."""
    out = []
    for vals in phi.blocks():
        steps = np.angle(vals[1:] / vals[:-1])
        if np.any(np.abs(steps) > math.pi / 2):
            raise GridTooCoarse("phase jumps by more than pi/2 between nodes")
        out.append(np.angle(vals[0]) + np.concatenate([[0.0], np.cumsum(steps)]))
    return out


def verify_theta_structure(phi):
    """Estimate ``theta' rho^2`` pointwise; returns ``(mean, max deviation)``."""
    sup = phi.sup()
    rho_all = np.abs(phi.values)
    if np.min(rho_all) <= 1e-3 * sup:
        raise ModulusVanishes("modulus vanishes on the tested region")
    grid = phi.grid
    thetas = unwrapped_phase(phi)
    est = []
    for j, (th, vals) in enumerate(zip(thetas, phi.blocks())):
        h = grid.spacing(j)
        rho2 = np.abs(vals) ** 2
        if grid.periodic:
            # centred difference built from wrapped step sizes
            steps = np.angle(np.roll(vals, -1) / vals)
            dth = 0.5 * (steps + np.roll(steps, 1)) / h
            est.append(dth * rho2)
        else:
            dth = (th[2:] - th[:-2]) / (2 * h)
            est.append(dth * rho2[1:-1])
    est = np.concatenate(est)
    c_est = float(np.mean(est))
    return c_est, float(np.max(np.abs(est - c_est)))


def theta_prime_mean(phi):
    """Mean phase derivative (for the |theta_k'|^2 - |theta_l'|^2 probe)."""
    grid = phi.grid
    out = []
    for j, vals in enumerate(phi.blocks()):
        h = grid.spacing(j)
        steps = np.angle(np.roll(vals, -1) / vals) if grid.periodic else np.angle(vals[1:] / vals[:-1])
        out.append(steps / h)
    return float(np.mean(np.concatenate(out)))
