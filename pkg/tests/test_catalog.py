import math
from fractions import Fraction

import numpy as np
import pytest

from isoctl.catalog import (disk_mode, disk_real_modes, eight_eta_mode, eight_graph_level, eight_graph_mode,
                            hermite_mode, make_entry, norm_error, parse_eight_tag, residual, sphere_mode,
                            three_branch_mode, torus_mode)
from isoctl.domain import discretize, eight_graph
from isoctl.errors import ValidationError
from isoctl.funcspace import TrigExpression, s, c


def _all_entries():
    out = [torus_mode(1, (k,)) for k in range(4)]
    out += [torus_mode(2, (1, 2), ["+", "-"]), torus_mode(3, (1, 0, 2))]
    for n in range(0, 4):
        for k in range(1, 4):
            out += [e for e in disk_real_modes(n, k) if e is not None]
            if n:
                out += [disk_mode(n, k, 1), disk_mode(n, k, -1)]
    out += [sphere_mode(l, m) for l in range(9) for m in range(-l, l + 1)]
    out += [hermite_mode(k) for k in range(9)] + [hermite_mode((1, 1)), hermite_mode((2, 0, 1))]
    out += [eight_graph_mode("ground"), *[eight_graph_mode("odd", k) for k in range(4)]]
    out += [eight_graph_mode("even", k, j) for k in range(1, 5) for j in (1, 2, 3)]
    out += [three_branch_mode(0)] + [three_branch_mode(k, j) for k in range(1, 5) for j in (1, 2, 3)]
    return out


@pytest.mark.parametrize("entry", _all_entries(), ids=lambda e: e.label)
def test_entry_invariants(entry):
    assert residual(entry) <= 1e-8
    assert norm_error(entry) <= 1e-10


def test_eight_examples():
    e = eight_graph_mode("odd", 0)
    assert e.lam == Fraction(1, 4)
    assert e.expr == s(Fraction(1, 2), (1, -1))
    e = eight_graph_mode("even", 1, 2)
    assert e.lam == 1 and e.expr == s(1, (1, 0))
    t = three_branch_mode(1, 1)
    assert t.lam == Fraction(1, 4) and t.expr == c(Fraction(1, 2), (1, 1, 1))


def test_eigenvalue_formulas():
    assert sphere_mode(1, 0).lam == 2
    assert hermite_mode(0).lam == 1
    assert hermite_mode((1, 1)).lam == 6
    assert disk_mode(0 + 1, 1).lam == pytest.approx(3.831705970207512 ** 2)


def test_eta_combination_identity():
    g = discretize(eight_graph(), nodes_per_edge=257)
    for k in range(1, 5):
        comb = (eight_graph_mode("even", k, 1).expr.evaluate(g).values
                + 1j * eight_graph_mode("even", k, 2).expr.evaluate(g).values
                + 1j * eight_graph_mode("even", k, 3).expr.evaluate(g).values)
        eta = np.exp(1j * k * g.x)
        assert np.max(np.abs(comb - eta)) <= 1e-12
        np.testing.assert_allclose(eight_eta_mode(k).sample(g).values, eta / math.sqrt(4 * math.pi), atol=1e-15)


def test_levels_and_tags():
    assert [e.lam for e in eight_graph_level(2)] == [1, 1, 1]
    assert eight_graph_level(1)[0].lam == Fraction(1, 4)
    assert parse_eight_tag("phi_e:2:3") == ("even", 2, 3)
    assert parse_eight_tag("phi_o:1") == ("odd", 1, 1)
    with pytest.raises(ValidationError):
        parse_eight_tag("phi_x")


def test_make_entry():
    assert make_entry("eight", {"k": 2, "j": 1}).label == "EightGraph(kind=even,k=2,j=1)"
    assert make_entry("sphere", {"l": 2, "m": -1}).lam == 6
    assert make_entry("torus", {"n": "1:2", "s": "+-"}).dim == 2
    with pytest.raises(ValidationError):
        make_entry("klein", {})
    with pytest.raises(ValidationError):
        sphere_mode(9, 0)
