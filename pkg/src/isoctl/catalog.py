"""Closed-form eigenfunction families: torus, sphere, disk, Hermite and the
two canonical quantum graphs."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .domain import eight_graph, three_branch_graph
from .errors import ValidationError
from .funcspace import TrigExpression, WaveFunction, c, s, trig_inner
from .specfun import bessel_j, bessel_j_prime, bessel_zero, hermite_fn, spherical_harmonic

FAMILIES = ("Torus", "Sphere", "Disk", "Hermite", "EightGraph", "ThreeBranch")


@dataclass(eq=False)
class CatalogEntry:
    """One eigenfunction with its eigenvalue.

    ``evaluator`` takes the family's coordinates (``x`` for 1-D families,
    ``(r, theta)`` on the disk, ``(alpha, beta)`` on the sphere, one array
    per axis for tori and Hermite products) and returns unit-norm values.
    Graph entries also carry the unnormalised expression ``expr`` and the
    factor ``norm`` that makes ``norm * expr`` unit norm.
    """

    family: str
    params: dict
    lam: float | Fraction
    evaluator: Callable
    expr: TrigExpression | None = None
    domain: object = None
    norm: float = 1.0
    dim: int = 1
    meta: dict = field(default_factory=dict)

    def __call__(self, *coords):
        return self.evaluator(*coords)

    @property
    def label(self):
        inner = ",".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.family}({inner})"

    def sample(self, grid):
        """Unit-norm samples on a grid of the entry's metric domain."""
        if self.expr is not None:
            return WaveFunction(grid, self.norm * self.expr.evaluate(grid).values)
        if self.family == "Torus" and self.dim == 1:
            return WaveFunction(grid, self.evaluator(grid.x))
        if self.domain is not None:
            return WaveFunction.from_callable(grid, self.evaluator)
        raise ValidationError(f"{self.family} entries are not sampled on metric grids")


# ---------------------------------------------------------------------------
# torus


def torus_mode(d, n, signs=None):
    n = tuple(int(v) for v in np.atleast_1d(n))
    if len(n) != d or any(v < 0 for v in n):
        raise ValidationError("torus_mode needs d non-negative integers")
    signs = tuple([1] * d if signs is None else [1 if sg in (1, "+") else -1 for sg in np.atleast_1d(signs)])
    k = np.array([sg * v for sg, v in zip(signs, n)], dtype=float)
    scale = (2 * math.pi) ** (-d / 2)

    def ev(*xs):
        phase = sum(kj * np.asarray(x, dtype=float) for kj, x in zip(k, xs))
        return scale * np.exp(1j * phase)

    return CatalogEntry("Torus", {"d": d, "n": n, "s": signs}, sum(v * v for v in n), ev, dim=d)


# ---------------------------------------------------------------------------
# disk


def _disk_constant(n, k):
    j = bessel_zero(n, k)
    return j, 1.0 / abs(bessel_j_prime(n, j))


def disk_real_modes(n, k):
    """``(u_{n,k}, v_{n,k})``; for ``n = 0`` only ``u`` exists (``v`` is None)."""
    j, inv = _disk_constant(n, k)
    lam = j * j
    if n == 0:
        a = math.sqrt(1 / math.pi) * inv
        u = CatalogEntry("Disk", {"n": 0, "k": k, "part": "u"}, lam,
                         lambda r, th: a * bessel_j(0, j * np.asarray(r, dtype=float)) * np.ones_like(th), dim=2)
        return u, None
    a = math.sqrt(2 / math.pi) * inv

    def u_ev(r, th):
        return a * bessel_j(n, j * np.asarray(r, dtype=float)) * np.cos(n * np.asarray(th))

    def v_ev(r, th):
        return a * bessel_j(n, j * np.asarray(r, dtype=float)) * np.sin(n * np.asarray(th))

    return (CatalogEntry("Disk", {"n": n, "k": k, "part": "u"}, lam, u_ev, dim=2),
            CatalogEntry("Disk", {"n": n, "k": k, "part": "v"}, lam, v_ev, dim=2))


def disk_mode(n, k, sign=1):
    """``psi^{+/-}_{n,k}``, normalised to unit L2 norm (= (u +/- i v)/sqrt 2)."""
    if n < 1:
        raise ValidationError("disk_mode needs n >= 1")
    sg = 1 if sign in (1, "+") else -1
    j, inv = _disk_constant(n, k)
    a = math.sqrt(1 / math.pi) * inv

    def ev(r, th):
        return a * bessel_j(n, j * np.asarray(r, dtype=float)) * np.exp(1j * sg * n * np.asarray(th))

    return CatalogEntry("Disk", {"n": n, "k": k, "sign": sg}, j * j, ev, dim=2,
                        meta={"formula_constant": math.sqrt(2 / math.pi) * inv})


# ---------------------------------------------------------------------------
# sphere and Hermite


def sphere_mode(l, m):
    if not (abs(m) <= l <= 8):
        raise ValidationError("sphere_mode needs |m| <= l <= 8")
    return CatalogEntry("Sphere", {"l": l, "m": m}, l * (l + 1),
                        lambda a, b: spherical_harmonic(l, m, a, b), dim=2)


def hermite_mode(alpha):
    alpha = tuple(int(v) for v in np.atleast_1d(alpha))
    if any(v < 0 for v in alpha) or sum(alpha) > 30:
        raise ValidationError("hermite_mode needs |alpha| <= 30")
    d = len(alpha)

    def ev(*xs):
        out = 1.0
        for k, x in zip(alpha, xs):
            out = out * hermite_fn(k, x)
        return out + 0j

    return CatalogEntry("Hermite", {"alpha": alpha}, 2 * sum(alpha) + d, ev, dim=d)


# ---------------------------------------------------------------------------
# graphs


def _graph_entry(family, params, lam, expr, domain):
    nrm = 1.0 / math.sqrt(trig_inner(expr, expr, domain))

    def ev(j, x):
        return nrm * expr.evaluate_edge(j, x) + 0j

    return CatalogEntry(family, params, lam, ev, expr=expr, domain=domain, norm=nrm)


def eight_graph_expr(kind, k=0, j=1):
    """Unnormalised eigenfunction of the eight graph.

    ``kind`` is ``ground`` (phi_0), ``odd`` (phi_{k,o}) or ``even``
    (phi_{k,e,j}); returns ``(expr, lam)``.
    """
    if kind == "ground":
        return TrigExpression.constant(1, 2), Fraction(0)
    if kind == "odd":
        if k < 0:
            raise ValidationError("odd modes need k >= 0")
        w = Fraction(2 * k + 1, 2)
        return s(w, (1, -1)), w * w
    if kind == "even":
        if k < 1 or j not in (1, 2, 3):
            raise ValidationError("even modes need k >= 1 and j in 1..3")
        pattern = {1: None, 2: (1, 0), 3: (0, 1)}[j]
        expr = c(k, (1, 1)) if j == 1 else s(k, pattern)
        return expr, Fraction(k * k)
    raise ValidationError(f"unknown eight-graph mode kind {kind!r}")


def eight_graph_mode(kind, k=0, j=1):
    expr, lam = eight_graph_expr(kind, k, j)
    params = {"kind": kind}
    if kind != "ground":
        params["k"] = k
    if kind == "even":
        params["j"] = j
    return _graph_entry("EightGraph", params, lam, expr, eight_graph())


def eight_eta_mode(k):
    """``(eta_k, eta_k)`` with ``eta_k = e^{ikx}``: a complex member of the
    level ``k^2`` eigenspace (``C_k + i S_k`` on both loops), unit norm."""
    if k < 0:
        raise ValidationError("eta modes need k >= 0")
    nrm = 1.0 / math.sqrt(4 * math.pi)

    def ev(j, x):
        return nrm * np.exp(1j * k * np.asarray(x, dtype=float))

    return CatalogEntry("EightGraph", {"kind": "eta", "k": k}, Fraction(k * k), ev, domain=eight_graph(), norm=nrm)


def three_branch_expr(k, j=1):
    if k == 0:
        return TrigExpression.constant(1, 3), Fraction(0)
    if k < 0 or j not in (1, 2, 3):
        raise ValidationError("three-branch modes need k >= 1 and j in 1..3")
    w = Fraction(k, 2)
    pattern = {1: None, 2: (-1, 1, 0), 3: (-1, 0, 1)}[j]
    expr = c(w, (1, 1, 1)) if j == 1 else s(w, pattern)
    return expr, w * w


def three_branch_mode(k, j=1):
    expr, lam = three_branch_expr(k, j)
    params = {"k": k} if k == 0 else {"k": k, "j": j}
    return _graph_entry("ThreeBranch", params, lam, expr, three_branch_graph())


_TAG_RE = re.compile(r"^phi_(0|o:(\d+)|e:(\d+):([123]))$")


def parse_eight_tag(tag):
    """``phi_0``, ``phi_o:K`` or ``phi_e:K:J`` -> (kind, k, j)."""
    m = _TAG_RE.match(tag.strip())
    if not m:
        raise ValidationError(f"bad eight-graph tag {tag!r}")
    if m.group(1) == "0":
        return "ground", 0, 1
    if m.group(2) is not None:
        return "odd", int(m.group(2)), 1
    return "even", int(m.group(3)), int(m.group(4))


def eight_graph_level(k):
    """All eigenfunctions of the k-th eight-graph level (ground, then alternating
    odd/even as eigenvalues increase); ``k`` indexes clusters from 0."""
    levels = [[eight_graph_mode("ground")]]
    n = 0
    while len(levels) <= k:
        levels.append([eight_graph_mode("odd", n)])
        n += 1
        levels.append([eight_graph_mode("even", n, j) for j in (1, 2, 3)])
    return levels[k]


def make_entry(family, params):
    """Construct an entry from a family name and a parameter dict (CLI helper)."""
    fam = family.lower().replace("_", "-")
    if fam in ("eight", "eightgraph", "eight-graph"):
        kind = params.get("kind")
        if kind is None:
            if "j" in params:
                kind = "even"
            elif "k" in params:
                kind = "odd"
            else:
                kind = "ground"
        if kind == "eta":
            return eight_eta_mode(int(params.get("k", 0)))
        return eight_graph_mode(kind, int(params.get("k", 0)), int(params.get("j", 1)))
    if fam in ("three-branch", "threebranch", "three"):
        return three_branch_mode(int(params.get("k", 0)), int(params.get("j", 1)))
    if fam == "torus":
        n = params.get("n", 0)
        n = tuple(int(v) for v in str(n).split(":")) if not isinstance(n, tuple) else n
        signs = params.get("s")
        if isinstance(signs, str):
            signs = [1 if ch == "+" else -1 for ch in signs]
        return torus_mode(len(n), n, signs)
    if fam == "disk":
        if "part" in params:
            u, v = disk_real_modes(int(params["n"]), int(params["k"]))
            return u if params["part"] == "u" else v
        return disk_mode(int(params["n"]), int(params["k"]), int(params.get("sign", 1)))
    if fam == "sphere":
        return sphere_mode(int(params["l"]), int(params["m"]))
    if fam == "hermite":
        a = params.get("alpha", params.get("k", 0))
        a = tuple(int(v) for v in str(a).split(":")) if not isinstance(a, tuple) else a
        return hermite_mode(a)
    raise ValidationError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# invariant checks


def _d2(f, x, h):
    """Fourth-order central second derivative."""
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def _d1(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def norm_error(entry, n_quad=200):
    """|1 - ||entry||^2| under the family's quadrature."""
    fam = entry.family
    if entry.expr is not None:
        val = entry.norm**2 * trig_inner(entry.expr, entry.expr, entry.domain)
    elif fam == "Torus":
        xs = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        mesh = np.meshgrid(*([xs] * entry.dim), indexing="ij")
        val = np.sum(np.abs(entry(*mesh)) ** 2) * (2 * math.pi / 64) ** entry.dim
    elif fam == "Disk":
        t, w = np.polynomial.legendre.leggauss(n_quad)
        r, wr = 0.5 * (t + 1), 0.5 * w
        th = np.linspace(0, 2 * math.pi, 128, endpoint=False)
        R, TH = np.meshgrid(r, th, indexing="ij")
        val = np.sum(np.abs(entry(R, TH)) ** 2 * (wr * r)[:, None]) * (2 * math.pi / 128)
    elif fam == "Sphere":
        t, w = np.polynomial.legendre.leggauss(64)
        be = np.linspace(0, 2 * math.pi, 64, endpoint=False)
        A, B = np.meshgrid(np.arccos(t), be, indexing="ij")
        val = np.sum(np.abs(entry(A, B)) ** 2 * w[:, None]) * (2 * math.pi / 64)
    elif fam == "Hermite":
        xs = np.linspace(-12, 12, 2401)
        h = xs[1] - xs[0]
        val = 1.0
        for k in entry.params["alpha"]:
            val *= np.sum(hermite_fn(k, xs) ** 2) * h
    else:
        raise ValidationError(f"no quadrature for {fam}")
    return abs(1.0 - float(val))


def residual(entry, n_pts=64, seed=0):
    """Relative eigen-residual ``max|(H - lam) f| / (1 + lam)`` at sample points,
    with fourth-order finite differences (exact symbolic check on graphs)."""
    lam = float(entry.lam)
    if entry.expr is not None:
        r = entry.expr.derivative().derivative() + entry.expr * entry.lam
        return 0.0 if r.is_zero() else float(max(abs(float(a)) + abs(float(b)) for t in r.edges for _, a, b in t))
    rng = np.random.default_rng(seed)
    fam = entry.family
    if fam == "Torus":
        pts = [rng.uniform(0, 2 * math.pi, n_pts) for _ in range(entry.dim)]
        h = 2e-3
        lap = 0
        for ax in range(entry.dim):
            def f1(x, ax=ax):
                p = list(pts); p[ax] = x
                return entry(*p)
            lap = lap + _d2(f1, pts[ax], h)
        res = -lap - lam * entry(*pts)
    elif fam == "Disk":
        r = rng.uniform(0.2, 0.9, n_pts)
        th = rng.uniform(0, 2 * math.pi, n_pts)
        h = 2e-3
        frr = _d2(lambda x: entry(x, th), r, h)
        fr = _d1(lambda x: entry(x, th), r, h)
        ftt = _d2(lambda x: entry(r, x), th, h)
        res = -(frr + fr / r + ftt / r**2) - lam * entry(r, th)
    elif fam == "Sphere":
        a = rng.uniform(0.3, math.pi - 0.3, n_pts)
        b = rng.uniform(0, 2 * math.pi, n_pts)
        h = 2e-3
        faa = _d2(lambda x: entry(x, b), a, h)
        fa = _d1(lambda x: entry(x, b), a, h)
        fbb = _d2(lambda x: entry(a, x), b, h)
        res = -(faa + np.cos(a) / np.sin(a) * fa + fbb / np.sin(a) ** 2) - lam * entry(a, b)
    elif fam == "Hermite":
        pts = [rng.uniform(-4, 4, n_pts) for _ in range(entry.dim)]
        h = 2e-3
        acc = 0
        for ax in range(entry.dim):
            def f1(x, ax=ax):
                p = list(pts); p[ax] = x
                return entry(*p)
            acc = acc - _d2(f1, pts[ax], h) + pts[ax] ** 2 * entry(*pts)
        res = acc - lam * entry(*pts)
    else:
        raise ValidationError(f"no residual check for {fam}")
    return float(np.max(np.abs(res))) / (1.0 + lam)
