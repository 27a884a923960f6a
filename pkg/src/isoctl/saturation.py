"""Saturation cones over trigonometric expressions and replayable certificates.

The cone recursion is ``H_{N+1} = H_N + {-alpha |psi'|^2 : +psi, -psi in H_N}``
with ``H_0`` the stabilizing part of the generator span.  A certificate is
a tree whose leaves are generator combinations; every node caches its exact
value and depth.

Derivations rest on four single-edge identities (``c_k = cos kx``,
``s_k = sin kx``)::

    2 c_{m+l} = 2 - |(s_m/m - s_l/l)'|^2 - |(c_m/m + c_l/l)'|^2
   -2 c_{m+l} = 2 - |(s_m/m + s_l/l)'|^2 - |(c_m/m - c_l/l)'|^2
    2 s_{m+l} = 2 - |(c_m/m + s_l/l)'|^2 - |(c_l/l + s_m/m)'|^2
   -2 s_{m+l} = 2 - |(c_m/m - s_l/l)'|^2 - |(c_l/l - s_m/m)'|^2

applied edgewise to patterns that keep the vertex conditions.
"""

from __future__ import annotations

import json
import re
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .domain import Circle, eight_graph, parse_domain
from .errors import InvalidCertificate, TargetOutOfRange, UnknownGenerator, ValidationError
from .funcspace import TrigExpression, c, s, stabilizes_domain

K_MAX = 6


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    name: str
    domain: object
    names: tuple
    exprs: tuple

    def __post_init__(self):
        if len(self.names) != len(self.exprs):
            raise ValidationError("generator names and expressions differ in length")

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownGenerator(f"unknown generator {name!r}") from None

    def value(self, coeffs):
        total = TrigExpression.zero(self.domain.n_edges)
        for n, a in coeffs.items():
            if a:
                total = total + self.exprs[self.index(n)] * a
        return total

    def matrix(self, grid):
        """Generator samples as columns."""
        return np.stack([q.evaluate(grid).values.real for q in self.exprs], axis=1)

    def to_dict(self):
        return {"name": self.name, "domain": self.domain.describe(), "generators":
                [{"name": n, "expr": q.to_text()} for n, q in zip(self.names, self.exprs)]}

    @classmethod
    def from_dict(cls, d):
        dom = parse_domain(d["domain"])
        return cls(d["name"], dom, tuple(g["name"] for g in d["generators"]),
                   tuple(TrigExpression.parse(g["expr"]) for g in d["generators"]))


def eight_generators():
    """Q1..Q6 on the eight graph (Q6 does not stabilize the operator domain)."""
    h = Fraction(1, 2)
    exprs = (TrigExpression.constant(1, 2), c(1, (1, 1)), s(1, (1, 0)), s(1, (0, 1)), s(h, (1, -1)), c(h, (1, 1)))
    return GeneratorSet("eight", eight_graph(), ("Q1", "Q2", "Q3", "Q4", "Q5", "Q6"), exprs)


def circle_generators(K=1, length=2 * math.pi):
    """``{1, cos kx, sin kx : 1 <= k <= K}`` on the circle."""
    names, exprs = ["one"], [TrigExpression.constant(1)]
    for k in range(1, K + 1):
        names += [f"cos{k}", f"sin{k}"]
        exprs += [TrigExpression.cos(k), TrigExpression.sin(k)]
    return GeneratorSet(f"circle-trig{K}", Circle(length), tuple(names), tuple(exprs))


_EXTRA = re.compile(r"(C|Sp|Sm|O)(\d+)")


def generators_from_names(domain, names):
    """Generator set on ``domain`` from names like ``Q2`` or ``cos3``."""
    if domain.describe() == "eight":
        ks = [int(m.group(2)) + (m.group(1) == "O") for m in map(_EXTRA.fullmatch, names) if m]
        full = eight_family(K=max([1] + ks)).gens
        return GeneratorSet("eight", full.domain, tuple(names), tuple(full.exprs[full.index(n)] for n in names))
    if isinstance(domain, Circle):
        exprs = []
        for n in names:
            if n == "one":
                exprs.append(TrigExpression.constant(1))
            elif n.startswith(("cos", "sin")) and n[3:].isdigit():
                k = int(n[3:])
                exprs.append(TrigExpression.cos(k) if n.startswith("cos") else TrigExpression.sin(k))
            else:
                raise UnknownGenerator(f"unknown circle generator {n!r}")
        return GeneratorSet("circle", domain, tuple(names), tuple(exprs))
    raise UnknownGenerator(f"no named generators for domain {domain.describe()!r}")


# ---------------------------------------------------------------------------
# certificate nodes


class Certificate:
    """Base class; subclasses set ``value`` and ``depth`` at construction."""

    value: TrigExpression
    depth: int
    gens: GeneratorSet

    def children(self):
        return []

    def scaled(self, factor):
        raise NotImplementedError


class GeneratorCombo(Certificate):
    def __init__(self, gens, coeffs):
        self.gens = gens
        self.coeffs = {n: a for n, a in coeffs.items() if a != 0}
        for n in self.coeffs:
            gens.index(n)
        self.value = gens.value(self.coeffs)
        self.depth = 0

    def negated(self):
        return GeneratorCombo(self.gens, {n: -a for n, a in self.coeffs.items()})

    def scaled(self, factor):
        return GeneratorCombo(self.gens, {n: a * factor for n, a in self.coeffs.items()})

    def __repr__(self):
        return f"GeneratorCombo({self.coeffs})"


@dataclass
class Term:
    alpha: object
    plus: Certificate
    minus: Certificate


class ConeSum(Certificate):
    """``base - sum alpha_i |psi_i'|^2`` with both signs of each psi certified."""

    def __init__(self, base, terms):
        self.gens = base.gens
        self.base = base
        self.terms = list(terms)
        val = base.value
        for t in self.terms:
            val = val - t.plus.value.grad_squared() * t.alpha
        self.value = val
        self.depth = 1 + max([base.depth] + [max(t.plus.depth, t.minus.depth) for t in self.terms])

    def children(self):
        out = [self.base]
        for t in self.terms:
            out += [t.plus, t.minus]
        return out

    def scaled(self, factor):
        return ConeSum(self.base.scaled(factor), [Term(t.alpha * factor, t.plus, t.minus) for t in self.terms])

    def __repr__(self):
        return f"ConeSum(depth={self.depth}, terms={len(self.terms)})"


class Combination(Certificate):
    """Non-negative combination of certificates; cones are convex so the
    depth is the largest child depth."""

    def __init__(self, items):
        items = [(w, cert) for w, cert in items if w != 0]
        if not items:
            raise ValidationError("empty combination")
        self.gens = items[0][1].gens
        self.items = items
        val = TrigExpression.zero(self.gens.domain.n_edges)
        for w, cert in items:
            val = val + cert.value * w
        self.value = val
        self.depth = max(cert.depth for _, cert in items)

    def children(self):
        return [cert for _, cert in self.items]

    def scaled(self, factor):
        return Combination([(w * factor, cert) for w, cert in self.items])

    def __repr__(self):
        return f"Combination(n={len(self.items)}, depth={self.depth})"


def combine(items, gens):
    """Positive combination that collapses to a GeneratorCombo when possible."""
    items = [(w, cert) for w, cert in items if w != 0]
    if not items:
        return GeneratorCombo(gens, {})
    if all(isinstance(cert, GeneratorCombo) for _, cert in items):
        acc = {}
        for w, cert in items:
            for n, a in cert.coeffs.items():
                acc[n] = acc.get(n, 0) + w * a
        return GeneratorCombo(gens, acc)
    if len(items) == 1 and items[0][0] == 1:
        return items[0][1]
    return Combination(items)


def cert_evaluate(cert):
    return cert.value


def _walk(cert, path="root"):
    yield path, cert
    if isinstance(cert, ConeSum):
        yield from _walk(cert.base, path + ".base")
        for i, t in enumerate(cert.terms):
            yield from _walk(t.plus, f"{path}.term[{i}].plus")
            yield from _walk(t.minus, f"{path}.term[{i}].minus")
    elif isinstance(cert, Combination):
        for i, (_, ch) in enumerate(cert.items):
            yield from _walk(ch, f"{path}.item[{i}]")


def cert_validate(cert, domain=None):
    """``(ok, first failing node path, reason)``."""
    domain = domain or cert.gens.domain
    for path, node in _walk(cert):
        if not stabilizes_domain(node.value, domain):
            return False, path, "value does not stabilize the operator domain"
        if isinstance(node, ConeSum):
            for i, t in enumerate(node.terms):
                if float(t.alpha) < 0:
                    return False, f"{path}.term[{i}]", "negative alpha"
                if not (t.minus.value + t.plus.value).close_to(TrigExpression.zero(domain.n_edges), 1e-12):
                    return False, f"{path}.term[{i}]", "minus certificate is not the negation of plus"
            exp = max([node.base.depth] + [max(t.plus.depth, t.minus.depth) for t in node.terms]) + 1
            if node.depth != exp:
                return False, path, "depth mismatch"
        if isinstance(node, Combination):
            for i, (w, _) in enumerate(node.items):
                if float(w) < 0:
                    return False, f"{path}.item[{i}]", "negative combination weight"
    return True, None, None


def cert_count(cert):
    return sum(1 for _ in _walk(cert))


# ---------------------------------------------------------------------------
# pattern families and derivations


class PatternFamily:
    """Edgewise patterns of ``cos kx``/``sin kx`` kept in the operator domain.

    ``kinds`` maps a kind name to a constructor ``k -> TrigExpression``;
    ``cos_kind`` names the cosine pattern and ``sin_partner`` tells which sine
    pattern enters the identities for each target kind.  ``base`` holds the
    generator coefficients of the depth-zero patterns.
    """

    def __init__(self, gens, kinds, cos_kind, sin_partner, const, base, split="balanced"):
        self.gens = gens
        self.kinds = kinds
        self.cos_kind = cos_kind
        self.sin_partner = sin_partner
        self.const = const
        self.base = base
        self.split = split
        self._memo = {}

    def expr(self, kind, k):
        return self.kinds[kind](k)

    def _split(self, k):
        if self.split == "linear":
            return k - 1, 1
        return (k + 1) // 2, k // 2

    def cert(self, kind, k, sign=1):
        """Certificate of ``sign * pattern(kind, k)``."""
        key = (kind, k, sign)
        if key in self._memo:
            return self._memo[key]
        if (kind, k) in self.base:
            out = GeneratorCombo(self.gens, {n: sign * a for n, a in self.base[(kind, k)].items()})
        elif kind in ("O",):
            out = self._odd(k, sign)
        else:
            out = self._sum_rule(kind, k, sign)
        if out.value != self.expr(kind, k) * sign:
            raise AssertionError(f"derivation of {kind}{k} does not replay")
        self._memo[key] = out
        return out

    def lin(self, items, sign=1):
        """Certificate of ``sign * sum coef * pattern`` for ``items=[(coef, kind, k)]``."""
        parts = []
        for coef, kind, k in items:
            if coef == 0:
                continue
            sg = sign if coef > 0 else -sign
            parts.append((abs(coef), self.cert(kind, k, sg)))
        return combine(parts, self.gens)

    def _term(self, alpha, items):
        return Term(alpha, self.lin(items, 1), self.lin(items, -1))

    def _sum_rule(self, kind, k, sign):
        m, l = self._split(k)
        if m < 1 or l < 1:
            raise TargetOutOfRange(f"no identity reaches {kind}{k}")
        C = self.cos_kind
        S = self.sin_partner[kind]
        fm, fl = Fraction(1, m), Fraction(1, l)
        if kind == C:
            if sign > 0:
                psis = [[(fm, S, m), (-fl, S, l)], [(fm, C, m), (fl, C, l)]]
            else:
                psis = [[(fm, S, m), (fl, S, l)], [(fm, C, m), (-fl, C, l)]]
        else:
            # sign * 2 S_{m+l}: psi1 = -c_m/m - sign*S_l/l, psi2 = -c_l/l - sign*S_m/m
            psis = [[(-fm, C, m), (-sign * fl, kind, l)], [(-fl, C, l), (-sign * fm, kind, m)]]
        terms = []
        half = Fraction(1, 2)
        for items in psis:
            merged = _merge_items(items)
            if not merged:
                continue
            for t in terms:
                if t[1] == merged:
                    t[0] += half
                    break
            else:
                terms.append([half, merged])
        base = GeneratorCombo(self.gens, self.const)
        return ConeSum(base, [self._term(a, items) for a, items in terms])

    def _odd(self, m, sign):
        """``sign * O_m`` with ``O_m = (s_{m+1/2}, -s_{m+1/2})``.

        ``Q1 + Q2/2 - C_{2m}/2 - |(2 O_0 + sign C_m/m)'|^2 = sign (O_m + O_{m-1})``,
        then ``-sign O_{m-1}`` is added back.
        """
        if m < 1:
            raise TargetOutOfRange("odd modes start at m = 0")
        half = Fraction(1, 2)
        base = combine([(1, GeneratorCombo(self.gens, self.const)),
                        (half, self.cert(self.cos_kind, 1, 1)),
                        (half, self.cert(self.cos_kind, 2 * m, -1))], self.gens)
        items = [(2, "O", 0), (sign * Fraction(1, m), self.cos_kind, m)]
        bracket = ConeSum(base, [self._term(1, items)])
        return combine([(1, bracket), (1, self.cert("O", m - 1, -sign))], self.gens)


def _merge_items(items):
    acc = {}
    for coef, kind, k in items:
        acc[(kind, k)] = acc.get((kind, k), 0) + coef
    return [(v, kk, kk2) for (kk, kk2), v in sorted(acc.items(), key=lambda t: (t[0][0], t[0][1])) if v != 0]


def eight_family(split="balanced", K=1):
    """Eight-graph patterns.  ``K = 1`` uses Q1..Q5; larger ``K`` adds the
    patterns up to frequency ``K`` as extra generators (``C2``, ``Sp2``,
    ``Sm2``, ``O1`` = (s_{3/2}, -s_{3/2}), ...)."""
    gens = eight_generators()
    kinds = {
        "C": lambda k: c(k, (1, 1)),
        "S+": lambda k: s(k, (1, 1)),
        "S-": lambda k: s(k, (1, -1)),
        "O": lambda m: s(Fraction(2 * m + 1, 2), (1, -1)),
    }
    base = {("C", 1): {"Q2": 1}, ("S+", 1): {"Q3": 1, "Q4": 1}, ("S-", 1): {"Q3": 1, "Q4": -1}, ("O", 0): {"Q5": 1}}
    if K > 1:
        names, exprs = list(gens.names), list(gens.exprs)
        for k in range(2, K + 1):
            for kind, tag in (("C", "C"), ("S+", "Sp"), ("S-", "Sm")):
                names.append(f"{tag}{k}"); exprs.append(kinds[kind](k))
                base[(kind, k)] = {f"{tag}{k}": 1}
        for m in range(1, K):
            names.append(f"O{m}"); exprs.append(kinds["O"](m))
            base[("O", m)] = {f"O{m}": 1}
        gens = GeneratorSet(f"eight-K{K}", gens.domain, tuple(names), tuple(exprs))
    return PatternFamily(gens, kinds, "C", {"C": "S+", "S+": "S+", "S-": "S-"}, {"Q1": 1}, base, split)


def circle_family(K=1, split="balanced", length=2 * math.pi):
    gens = circle_generators(K, length)
    kinds = {"c": lambda k: TrigExpression.cos(k), "s": lambda k: TrigExpression.sin(k)}
    base = {}
    for k in range(1, K + 1):
        base[("c", k)] = {f"cos{k}": 1}
        base[("s", k)] = {f"sin{k}": 1}
    return PatternFamily(gens, kinds, "c", {"c": "s", "s": "s"}, {"one": 1}, base, split)


def derive_eight_graph(kind, k=0, j=1, k_max=K_MAX, family=None):
    """Certificate for an eight-graph eigenfunction (unnormalised form).

    ``kind`` is ``ground``, ``odd`` or ``even`` as in the catalog.
    """
    fam = family or eight_family()
    if kind == "ground":
        return GeneratorCombo(fam.gens, {"Q1": 1})
    if k > k_max or k < 0:
        raise TargetOutOfRange(f"k={k} outside 0..{k_max}")
    if kind == "odd":
        return fam.cert("O", k, 1)
    if kind == "even":
        if k < 1 or j not in (1, 2, 3):
            raise TargetOutOfRange("even modes need k >= 1, j in 1..3")
        if j == 1:
            return fam.cert("C", k, 1)
        h = Fraction(1, 2)
        second = fam.cert("S-", k, 1 if j == 2 else -1)
        return combine([(h, fam.cert("S+", k, 1)), (h, second)], fam.gens)
    raise TargetOutOfRange(f"unknown target kind {kind!r}")


def derive_circle(kind, k, sign=1, K=1, family=None):
    """Certificate for ``sign * cos kx`` (``kind='c'``) or ``sign * sin kx``."""
    fam = family or circle_family(K)
    if k == 0:
        return GeneratorCombo(fam.gens, {"one": sign})
    return fam.cert(kind, k, sign)


def certify_terms(family, coeffs, const=0):
    """Certificate for ``const + sum coef * pattern`` with ``coeffs`` a
    dict ``(kind, k) -> coef``; signs are absorbed by the +/- certificates."""
    parts = []
    if const:
        parts.append((abs(const), GeneratorCombo(family.gens, {n: (1 if const > 0 else -1) * a for n, a in family.const.items()})))
    for (kind, k), coef in sorted(coeffs.items(), key=lambda t: (t[0][0], t[0][1])):
        if coef == 0:
            continue
        parts.append((abs(coef), family.cert(kind, k, 1 if coef > 0 else -1)))
    return combine(parts, family.gens)


# ---------------------------------------------------------------------------
# flattening (for compilation)


def flatten(cert):
    """Equivalent certificate with Combination nodes pushed into ConeSums.

    Result is a GeneratorCombo or a ConeSum whose base is a GeneratorCombo;
    terms with proportional psi are merged.  Values are unchanged.
    """
    if isinstance(cert, GeneratorCombo):
        return cert
    if isinstance(cert, ConeSum):
        base = flatten(cert.base)
        terms = [Term(t.alpha, flatten(t.plus), flatten(t.minus)) for t in cert.terms]
        if isinstance(base, ConeSum):
            terms = base.terms + terms
            base = base.base
        return ConeSum(base, _merge_terms(terms))
    if isinstance(cert, Combination):
        gens = cert.gens
        acc = {}
        terms = []
        for w, ch in cert.items:
            f = flatten(ch).scaled(w)
            b = f if isinstance(f, GeneratorCombo) else f.base
            for n, a in b.coeffs.items():
                acc[n] = acc.get(n, 0) + a
            if isinstance(f, ConeSum):
                terms += f.terms
        base = GeneratorCombo(gens, acc)
        return ConeSum(base, _merge_terms(terms)) if terms else base
    raise InvalidCertificate(f"unknown node {cert!r}")


def _merge_terms(terms):
    """Merge terms whose psi are equal up to sign (alpha adds up)."""
    out = []
    for t in terms:
        for o in out:
            if o.plus.value == t.plus.value:
                o.alpha = o.alpha + t.alpha
                break
            if o.plus.value == t.minus.value:
                o.alpha = o.alpha + t.alpha
                break
        else:
            out.append(Term(t.alpha, t.plus, t.minus))
    return [t for t in out if t.alpha != 0]


# ---------------------------------------------------------------------------
# density


def density_residual(targets, cone, grid, weights=None):
    """Relative L2 residual of each target after least-squares projection
    onto the linear span of the cone elements (a span relaxation of the
    cone).  ``cone`` holds certificates or TrigExpressions; targets are
    RealFunctions, arrays or TrigExpressions."""
    w = grid.weights if weights is None else weights
    sw = np.sqrt(w)
    cols = []
    for el in cone:
        e = el.value if isinstance(el, Certificate) else el
        cols.append(e.evaluate(grid).values.real)
    B = np.stack(cols, axis=1) * sw[:, None] if cols else np.zeros((grid.size, 0))
    out = []
    for t in targets:
        if isinstance(t, TrigExpression):
            tv = t.evaluate(grid).values.real
        else:
            tv = np.real(t.values if hasattr(t, "values") else np.asarray(t))
        b = tv * sw
        nb = np.linalg.norm(b)
        if nb == 0:
            out.append(0.0)
            continue
        if B.shape[1]:
            coef, *_ = np.linalg.lstsq(B, b, rcond=None)
            r = b - B @ coef
        else:
            r = b
        out.append(float(np.linalg.norm(r) / nb))
    return out


def cone_elements(cert, max_depth=None):
    """Distinct node values of a certificate tree, optionally up to a depth."""
    seen = []
    for _, node in _walk(cert):
        if max_depth is not None and node.depth > max_depth:
            continue
        if not any(node.value == v for v in seen):
            seen.append(node.value)
    return seen


# ---------------------------------------------------------------------------
# JSON


def _enc(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _dec(x):
    x = str(x)
    try:
        return Fraction(x) if "." not in x and "e" not in x.lower() and "inf" not in x else float(x)
    except ValueError:
        return float(x)


def cert_to_json(cert):
    nodes = []
    ids = {}

    def visit(node):
        if id(node) in ids:
            return ids[id(node)]
        if isinstance(node, GeneratorCombo):
            d = {"kind": "GeneratorCombo", "coeffs": {n: _enc(a) for n, a in node.coeffs.items()}}
        elif isinstance(node, ConeSum):
            d = {"kind": "ConeSum", "base": visit(node.base),
                 "terms": [{"alpha": _enc(t.alpha), "plus": visit(t.plus), "minus": visit(t.minus)} for t in node.terms]}
        elif isinstance(node, Combination):
            d = {"kind": "Combination", "items": [{"weight": _enc(w), "cert": visit(ch)} for w, ch in node.items]}
        else:
            raise InvalidCertificate(f"unknown node {node!r}")
        d["depth"] = node.depth
        nodes.append(d)
        ids[id(node)] = len(nodes) - 1
        return ids[id(node)]

    root = visit(cert)
    return {"format": "isoctl-certificate/1", "generators": cert.gens.to_dict(), "root": root,
            "value": cert.value.to_text(), "nodes": nodes}


def cert_from_json(data):
    gens = GeneratorSet.from_dict(data["generators"])
    built = []
    for d in data["nodes"]:
        kind = d["kind"]
        if kind == "GeneratorCombo":
            node = GeneratorCombo(gens, {n: _dec(a) for n, a in d["coeffs"].items()})
        elif kind == "ConeSum":
            node = ConeSum(built[d["base"]], [Term(_dec(t["alpha"]), built[t["plus"]], built[t["minus"]]) for t in d["terms"]])
        elif kind == "Combination":
            node = Combination([(_dec(i["weight"]), built[i["cert"]]) for i in d["items"]])
        else:
            raise InvalidCertificate(f"unknown node kind {kind!r}")
        built.append(node)
    return built[data["root"]]


def dumps(cert):
    return json.dumps(cert_to_json(cert), indent=1, sort_keys=True)


def loads(text):
    return cert_from_json(json.loads(text))
