import math
from fractions import Fraction

import numpy as np
import pytest

from isoctl.catalog import eight_graph_expr
from isoctl.domain import Circle, discretize, eight_graph
from isoctl.errors import TargetOutOfRange, UnknownGenerator
from isoctl.funcspace import TrigExpression, c, s
from isoctl.saturation import (ConeSum, GeneratorCombo, GeneratorSet, Term, cert_evaluate, cert_validate,
                               circle_family, cone_elements, density_residual, derive_circle, derive_eight_graph,
                               dumps, eight_family, eight_generators, flatten, generators_from_names, loads)

H = Fraction(1, 2)
TARGETS = [("ground", 0, 1)] + [("odd", k, 1) for k in range(5)] + \
    [("even", k, j) for k in range(1, 5) for j in (1, 2, 3)]


def test_generator_combo_values():
    g = eight_generators()
    assert cert_evaluate(GeneratorCombo(g, {"Q1": 1})) == TrigExpression.constant(1, 2)
    assert cert_evaluate(GeneratorCombo(g, {})).is_zero()
    with pytest.raises(UnknownGenerator):
        GeneratorCombo(g, {"Q9": 1})


def test_cone_sum_cos_identity():
    g = eight_generators()
    q2 = GeneratorCombo(g, {"Q2": 1})
    cert = ConeSum(GeneratorCombo(g, {"Q1": 2}), [Term(4, q2, q2.negated())])
    assert cert.value == c(2, (1, 1)) * 2
    assert cert.depth == 1
    assert cert_validate(cert)[0]


def test_validate_rejects():
    g = eight_generators()
    q2 = GeneratorCombo(g, {"Q2": 1})
    ok, path, why = cert_validate(ConeSum(GeneratorCombo(g, {"Q1": 1}), [Term(-1, q2, q2.negated())]))
    assert not ok and path == "root.term[0]" and "alpha" in why
    bad = GeneratorSet("bad", eight_graph(), ("B",), (s(Fraction(1, 4), (1, 0)),))
    psi = GeneratorCombo(bad, {"B": 1})
    ok, path, _ = cert_validate(ConeSum(GeneratorCombo(bad, {}), [Term(1, psi, psi.negated())]))
    assert not ok
    ok, path, why = cert_validate(ConeSum(GeneratorCombo(g, {"Q1": 1}), [Term(1, q2, q2)]))
    assert not ok and "negation" in why
    # Q6 is continuous but breaks the Kirchhoff sum
    assert not cert_validate(GeneratorCombo(g, {"Q6": 1}))[0]


@pytest.mark.parametrize("kind,k,j", TARGETS)
def test_eight_derivations_replay(kind, k, j):
    cert = derive_eight_graph(kind, k, j)
    expr, _ = eight_graph_expr(kind, k, j)
    assert cert.value == expr
    assert cert_validate(cert)[0]
    assert flatten(cert).value == expr


def test_eight_examples():
    assert derive_eight_graph("ground").depth == 0
    assert derive_eight_graph("even", 2, 1).depth <= 3
    assert derive_eight_graph("odd", 1).value == s(Fraction(3, 2), (1, -1))
    with pytest.raises(TargetOutOfRange):
        derive_eight_graph("odd", 9)


def test_plus_minus_closure_and_depth_growth():
    fam = eight_family()
    for kind in ("C", "S+", "S-", "O"):
        depths = []
        for k in range(0 if kind == "O" else 1, 5):
            p, m = fam.cert(kind, k, 1), fam.cert(kind, k, -1)
            assert m.value == -p.value
            assert m.depth <= p.depth
            depths.append(p.depth)
        assert all(d <= 2 * (i + 1) for i, d in enumerate(depths))


def test_every_cone_sum_adds_one():
    cert = derive_eight_graph("even", 4, 2)
    stack = [cert]
    while stack:
        n = stack.pop()
        if isinstance(n, ConeSum):
            assert n.depth == 1 + max(ch.depth for ch in n.children())
        stack.extend(n.children())


def test_richer_generators():
    fam = eight_family(K=4)
    assert fam.cert("S+", 4, 1).depth == 0
    assert fam.cert("S+", 8, 1).depth == 1
    assert len(flatten(fam.cert("S+", 8, 1)).terms) == 1
    g = generators_from_names(eight_graph(), ["Q1", "C3", "O2"])
    assert g.exprs[2] == s(Fraction(5, 2), (1, -1))


def test_circle_derivations():
    for k in range(1, 9):
        for sg in (1, -1):
            assert derive_circle("c", k, sg).value == TrigExpression.cos(k) * sg
            assert derive_circle("s", k, sg).value == TrigExpression.sin(k) * sg


def test_json_roundtrip():
    cert = derive_eight_graph("even", 3, 1)
    back = loads(dumps(cert))
    assert back.value == cert.value and back.depth == cert.depth
    assert dumps(back) == dumps(cert)


def test_density_exact_membership():
    g = discretize(eight_graph(), nodes_per_edge=257)
    cone = []
    for kind, k, j in TARGETS:
        cone += cone_elements(derive_eight_graph(kind, k, j), max_depth=4)
    target, _ = eight_graph_expr("even", 3, 2)
    assert density_residual([target], cone, g)[0] <= 1e-10
    assert density_residual([TrigExpression.zero(2)], cone, g) == [0.0]


def test_density_sawtooth_tail():
    g = discretize(Circle(), nodes_per_edge=8192)
    cone = [TrigExpression.constant(1)]
    for k in range(1, 9):
        cone += [derive_circle("c", k).value, derive_circle("s", k).value]
    res = density_residual([g.x.copy()], cone, g)[0]
    # x = pi - 2 sum sin(kx)/k; relative tail over ||x||^2 = 8 pi^3 / 3
    tail = math.sqrt(math.pi * sum(4 / k**2 for k in range(9, 200000)) / (8 * math.pi**3 / 3))
    assert abs(res - tail) <= 1e-3
