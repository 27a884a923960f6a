"""Grid functions with L2 structure and an exact edgewise trigonometric algebra."""

from __future__ import annotations

import csv
import io
import math
import numbers
import re
from fractions import Fraction

import numpy as np

from .domain import START, BoundaryKind, pi_multiple
from .errors import GridMismatch, ValidationError

EPS_CONT = 1e-8


# ---------------------------------------------------------------------------
# sampled functions


class WaveFunction:
    """Complex samples on a :class:`~isoctl.domain.Grid`, stored edge block by edge block."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        values = np.asarray(values)
        if values.shape != (grid.size,):
            raise GridMismatch(f"expected {grid.size} samples, got shape {values.shape}")
        self.grid = grid
        self.values = values.astype(complex, copy=False)

    @classmethod
    def from_callable(cls, grid, fn):
        """``fn(edge_id, x_array) -> values``."""
        parts = [np.asarray(fn(j, b), dtype=complex) * np.ones_like(b) for j, b in enumerate(grid.blocks)]
        return cls(grid, np.concatenate(parts))

    @property
    def domain(self):
        return self.grid.domain

    def blocks(self):
        return self.grid.split(self.values)

    def _check(self, other):
        if not self.grid.same_as(other.grid):
            raise GridMismatch("functions live on different grids")

    def _wrap(self, values):
        return type(self)(self.grid, values)

    def __add__(self, other):
        if isinstance(other, WaveFunction):
            self._check(other)
            return WaveFunction(self.grid, self.values + other.values)
        return WaveFunction(self.grid, self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, WaveFunction):
            self._check(other)
            return WaveFunction(self.grid, self.values - other.values)
        return WaveFunction(self.grid, self.values - other)

    def __neg__(self):
        return self._wrap(-self.values)

    def __mul__(self, other):
        if isinstance(other, WaveFunction):
            self._check(other)
            return WaveFunction(self.grid, self.values * other.values)
        return WaveFunction(self.grid, self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return WaveFunction(self.grid, self.values / scalar)

    def conj(self):
        return WaveFunction(self.grid, self.values.conj())

    def norm(self):
        return math.sqrt(max(inner_product(self, self).real, 0.0))

    def normalized(self):
        return self / self.norm()

    def sup(self):
        return float(np.max(np.abs(self.values)))

    def vertex_mismatch(self):
        """Largest spread of edge-end values at any vertex, relative to sup norm."""
        g = self.grid
        dom = g.domain
        worst = 0.0
        for v in dom.vertices:
            vals = np.array([self.values[g.end_index(j, m)] for j, m in v.incident])
            spread = np.max(np.abs(vals - vals[0]))
            if v.condition is BoundaryKind.DIRICHLET:
                spread = max(spread, np.max(np.abs(vals)))
            worst = max(worst, spread)
        return worst / max(self.sup(), 1e-300)

    def is_conforming(self, eps=EPS_CONT):
        return self.vertex_mismatch() <= eps

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge", "x", "re", "im"])
        for j, (xs, vs) in enumerate(zip(self.grid.blocks, self.blocks())):
            for x, v in zip(xs, vs):
                w.writerow([j, repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    def __repr__(self):
        return f"{type(self).__name__}(n={self.grid.size}, norm={self.norm():.6g})"


class RealFunction(WaveFunction):
    """Real-valued samples (potentials, phases, moduli)."""

    __slots__ = ()

    def __init__(self, grid, values):
        values = np.asarray(values)
        if np.iscomplexobj(values):
            if np.any(values.imag != 0):
                raise ValidationError("RealFunction needs real samples")
            values = values.real
        if values.shape != (grid.size,):
            raise GridMismatch(f"expected {grid.size} samples, got shape {values.shape}")
        self.grid = grid
        self.values = values.astype(float, copy=False)

    def _wrap(self, values):
        return RealFunction(self.grid, values)


def inner_product(f, g):
    """Trapezoidal L2 product, conjugate-linear in ``f``."""
    if not f.grid.same_as(g.grid):
        raise GridMismatch("functions live on different grids")
    return complex(np.sum(f.grid.weights * np.conj(f.values) * g.values))


def modulus(f):
    return RealFunction(f.grid, np.abs(f.values))


def apply_phase(f, theta):
    """Pointwise ``exp(i*theta) * f``; ``theta`` may be a RealFunction or array."""
    vals = theta.values if isinstance(theta, WaveFunction) else np.asarray(theta, dtype=float)
    if isinstance(theta, WaveFunction) and not theta.grid.same_as(f.grid):
        raise GridMismatch("phase and state live on different grids")
    return WaveFunction(f.grid, np.exp(1j * vals) * f.values)


# ---------------------------------------------------------------------------
# trig algebra


def _frac(w):
    if isinstance(w, Fraction):
        return w
    if isinstance(w, numbers.Integral):
        return Fraction(w)
    return Fraction(w)  # exact binary value of a float


def _is_exact(x):
    return isinstance(x, (numbers.Rational,))


def _is_zero(x, scale=1.0, tol=1e-12):
    if _is_exact(x):
        return x == 0
    return abs(x) <= tol * max(1.0, scale)


def exact_cos_sin(w, length):
    """``(cos(w L), sin(w L))``, exact (as Fractions) when ``w L / pi`` is a
    multiple of one half, floats otherwise."""
    lq = pi_multiple(length)
    if lq is not None:
        q = _frac(w) * lq
        if (2 * q).denominator == 1:
            twice = int(2 * q) % 4
            return [(Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)),
                    (Fraction(-1), Fraction(0)), (Fraction(0), Fraction(-1))][twice]
    arg = float(w) * length
    return math.cos(arg), math.sin(arg)


def _canon(terms):
    acc = {}
    for w, a, b in terms:
        w = _frac(w)
        if w < 0:
            w, b = -w, -b
        if w == 0:
            b = 0
        pa, pb = acc.get(w, (0, 0))
        acc[w] = (pa + a, pb + b)
    out = []
    for w in sorted(acc):
        a, b = acc[w]
        if _is_exact(a) and a == 0:
            a = 0
        if _is_exact(b) and b == 0:
            b = 0
        if (a == 0) and (b == 0):
            continue
        out.append((w, a, b))
    return tuple(out)


def _mul_terms(p, q):
    out = []
    half = Fraction(1, 2)
    for w1, a1, b1 in p:
        for w2, a2, b2 in q:
            # cos cos, sin sin, sin cos, cos sin -> sums and differences
            if a1 and a2:
                out.append((w1 - w2, half * a1 * a2, 0))
                out.append((w1 + w2, half * a1 * a2, 0))
            if b1 and b2:
                out.append((w1 - w2, half * b1 * b2, 0))
                out.append((w1 + w2, -half * b1 * b2, 0))
            if b1 and a2:
                out.append((w1 + w2, 0, half * b1 * a2))
                out.append((w1 - w2, 0, half * b1 * a2))
            if a1 and b2:
                out.append((w1 + w2, 0, half * a1 * b2))
                out.append((w2 - w1, 0, half * a1 * b2))
    return out


class TrigExpression:
    """Edgewise finite sums ``sum a*cos(w x) + b*sin(w x)`` with exact frequencies.

    Frequencies are :class:`fractions.Fraction`; coefficients stay Fractions as
    long as every input was exact, so products and derivatives of exact
    expressions compare equal term by term.
    """

    __slots__ = ("edges",)

    def __init__(self, edges):
        self.edges = tuple(_canon(t) for t in edges)

    # construction
    @classmethod
    def zero(cls, n_edges=1):
        return cls([()] * n_edges)

    @classmethod
    def constant(cls, c, n_edges=1):
        return cls([((0, c, 0),)] * n_edges)

    @classmethod
    def cos(cls, w, n_edges=1, edges=None, coef=1):
        sel = range(n_edges) if edges is None else edges
        return cls([((w, coef, 0),) if j in sel else () for j in range(n_edges)])

    @classmethod
    def sin(cls, w, n_edges=1, edges=None, coef=1):
        sel = range(n_edges) if edges is None else edges
        return cls([((w, 0, coef),) if j in sel else () for j in range(n_edges)])

    @classmethod
    def edgewise(cls, parts):
        """Stack single-edge expressions into one expression."""
        return cls([p.edges[0] for p in parts])

    @property
    def n_edges(self):
        return len(self.edges)

    def edge(self, j):
        return TrigExpression([self.edges[j]])

    # algebra
    def _check(self, other):
        if self.n_edges != other.n_edges:
            raise ValidationError("expressions have different numbers of edges")

    def __add__(self, other):
        if isinstance(other, numbers.Number):
            other = TrigExpression.constant(other, self.n_edges)
        self._check(other)
        return TrigExpression([p + q for p, q in zip(self.edges, other.edges)])

    __radd__ = __add__

    def __neg__(self):
        return TrigExpression([[(w, -a, -b) for w, a, b in t] for t in self.edges])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigExpression):
            return trig_mul(self, other)
        return TrigExpression([[(w, other * a, other * b) for w, a, b in t] for t in self.edges])

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if _is_exact(scalar):
            return self * (Fraction(1) / Fraction(scalar))
        return self * (1.0 / scalar)

    def __eq__(self, other):
        return isinstance(other, TrigExpression) and self.edges == other.edges

    def __hash__(self):
        return hash(self.edges)

    def is_zero(self):
        return all(len(t) == 0 for t in self.edges)

    def is_exact(self):
        return all(_is_exact(a) and _is_exact(b) for t in self.edges for _, a, b in t)

    def pruned(self, tol=1e-12):
        """Drop float terms whose coefficients are below ``tol``."""
        return TrigExpression(
            [[(w, a, b) for w, a, b in t if not (_is_zero(a, tol=tol) and _is_zero(b, tol=tol))] for t in self.edges]
        )

    def close_to(self, other, tol=1e-12):
        return (self - other).pruned(tol).is_zero()

    def derivative(self):
        return TrigExpression([[(w, b * w, -a * w) for w, a, b in t] for t in self.edges])

    def grad_squared(self):
        d = self.derivative()
        return trig_mul(d, d)

    @property
    def max_frequency(self):
        ws = [w for t in self.edges for w, _, _ in t]
        return max(ws) if ws else Fraction(0)

    def frequencies(self):
        return sorted({w for t in self.edges for w, _, _ in t})

    # evaluation
    def evaluate_edge(self, j, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, a, b in self.edges[j]:
            fw = float(w)
            if a:
                out = out + float(a) * np.cos(fw * x)
            if b:
                out = out + float(b) * np.sin(fw * x)
        return out

    def evaluate(self, grid):
        if grid.domain.n_edges != self.n_edges:
            raise GridMismatch("expression and grid have different edge counts")
        return RealFunction(grid, np.concatenate([self.evaluate_edge(j, b) for j, b in enumerate(grid.blocks)]))

    def end_value(self, j, length, marker):
        """Exact value at ``x = 0`` or ``x = length`` on edge ``j``."""
        total = 0
        for w, a, b in self.edges[j]:
            if marker == START:
                total += a
            else:
                c, s = exact_cos_sin(w, length)
                total += a * c + b * s
        return total

    def integral(self, j, length):
        total = 0.0
        for w, a, b in self.edges[j]:
            if w == 0:
                total += float(a) * length
            else:
                c, s = exact_cos_sin(w, length)
                total += (float(a) * float(s) + float(b) * (1 - float(c))) / float(w)
        return total

    # text form
    def to_text(self):
        lines = []
        for j, t in enumerate(self.edges):
            parts = []
            for w, a, b in t:
                if w == 0:
                    parts.append(f"{_fmt(a)}")
                    continue
                if a != 0:
                    parts.append(f"{_fmt(a)}*cos({w} x)")
                if b != 0:
                    parts.append(f"{_fmt(b)}*sin({w} x)")
            lines.append(f"edge {j}: " + (" + ".join(parts) if parts else "0"))
        return "\n".join(lines)

    @classmethod
    def parse(cls, text):
        edges = []
        for line in text.strip().splitlines():
            m = re.match(r"\s*edge\s+(\d+)\s*:\s*(.*)$", line)
            if not m:
                raise ValidationError(f"bad expression line {line!r}")
            body = m.group(2).strip()
            terms = []
            if body != "0":
                for tok in _split_terms(body):
                    tm = re.match(r"^(.+?)\*(cos|sin)\(([^ ]+) x\)$", tok)
                    if tm:
                        coef, kind, w = _num(tm.group(1)), tm.group(2), Fraction(tm.group(3))
                        terms.append((w, coef, 0) if kind == "cos" else (w, 0, coef))
                    else:
                        terms.append((0, _num(tok), 0))
            edges.append(terms)
        return cls(edges)

    def __repr__(self):
        return "TrigExpression(" + "; ".join(self.to_text().splitlines()) + ")"


def _fmt(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, numbers.Integral):
        return str(int(x))
    return repr(float(x))


def _num(text):
    text = text.strip()
    try:
        return Fraction(text) if re.fullmatch(r"[-+]?\d+(/\d+)?", text) else float(text)
    except ValueError:
        raise ValidationError(f"bad coefficient {text!r}") from None


def _split_terms(body):
    return [t.strip() for t in body.split(" + ")]


def trig_mul(p, q):
    """Exact product through the product-to-sum identities."""
    p._check(q)
    return TrigExpression([_mul_terms(a, b) for a, b in zip(p.edges, q.edges)])


def trig_derivative(p):
    return p.derivative()


def trig_grad_squared(p):
    return p.grad_squared()


def trig_inner(p, q, domain):
    """Exact-frequency L2 product of two expressions on ``domain``."""
    prod = trig_mul(p, q)
    return sum(prod.integral(e.id, e.length) for e in domain.edges)


def evaluate(p, grid):
    return p.evaluate(grid)


def stabilizes_domain(p, domain, tol=1e-12):
    """True when multiplication by ``p`` maps the operator domain into itself.

    Checked vertex by vertex from exact end values: ``p`` must be continuous
    at every vertex, and at Kirchhoff vertices the outgoing derivatives of
    ``p`` must sum to zero.
    """
    if p.n_edges != domain.n_edges:
        raise ValidationError("expression and domain have different edge counts")
    dp = p.derivative()
    scale = max([1.0] + [abs(float(a)) + abs(float(b)) for t in p.edges for _, a, b in t])
    for v in domain.vertices:
        vals, flux = [], 0
        for j, marker in v.incident:
            L = domain.edges[j].length
            vals.append(p.end_value(j, L, marker))
            d = dp.end_value(j, L, marker)
            flux += d if marker == START else -d
        if any(not _is_zero(val - vals[0], scale, tol) for val in vals[1:]):
            return False
        if v.condition is BoundaryKind.KIRCHHOFF and not _is_zero(flux, scale, tol):
            return False
    return True


# ---------------------------------------------------------------------------
# small helpers for the two canonical families

def c(w, pattern):
    """``pattern`` is a per-edge tuple of signs, e.g. ``(1, -1)``."""
    return TrigExpression([((w, s, 0),) if s else () for s in pattern])


def s(w, pattern):
    return TrigExpression([((w, 0, s),) if s else () for s in pattern])
