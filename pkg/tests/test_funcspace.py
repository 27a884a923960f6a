import math
from fractions import Fraction

import numpy as np
import pytest

from isoctl.domain import Circle, discretize, eight_graph
from isoctl.errors import GridMismatch
from isoctl.funcspace import (TrigExpression, WaveFunction, apply_phase, c, inner_product, modulus, s,
                              stabilizes_domain, trig_grad_squared, trig_mul)

H = Fraction(1, 2)


def test_inner_product_examples():
    g = discretize(Circle(), nodes_per_edge=256)
    one = WaveFunction(g, np.ones(g.size))
    e1 = WaveFunction.from_callable(g, lambda j, x: np.exp(1j * x))
    e2 = WaveFunction.from_callable(g, lambda j, x: np.exp(2j * x))
    assert inner_product(one, one).real == pytest.approx(2 * math.pi, rel=1e-14)
    assert inner_product(e1, e1).real == pytest.approx(2 * math.pi, rel=1e-14)
    assert abs(inner_product(e1, e2)) <= 1e-12
    assert inner_product(e1, 1j * e1) == pytest.approx(2j * math.pi)


def test_inner_product_grid_mismatch():
    a = WaveFunction(discretize(Circle(), nodes_per_edge=16), np.ones(16))
    b = WaveFunction(discretize(Circle(), nodes_per_edge=32), np.ones(32))
    with pytest.raises(GridMismatch):
        inner_product(a, b)


def test_trig_mul_examples():
    cx = TrigExpression.cos(1)
    assert trig_mul(cx, cx) == TrigExpression.constant(H) + TrigExpression.cos(2, coef=H)
    assert trig_mul(TrigExpression.cos(2), cx) == TrigExpression.cos(1, coef=H) + TrigExpression.cos(3, coef=H)
    sh = TrigExpression.sin(H)
    got = trig_mul(sh, sh)
    assert got == TrigExpression.constant(H) - TrigExpression.cos(1, coef=H)
    x = np.linspace(0, 10, 1000)
    np.testing.assert_allclose(got.evaluate_edge(0, x), np.sin(x / 2) ** 2, atol=1e-14)


def test_grad_squared_examples():
    assert trig_grad_squared(TrigExpression.sin(1)) == TrigExpression.constant(H) + TrigExpression.cos(2, coef=H)
    g = trig_grad_squared(TrigExpression.cos(3))
    assert g == TrigExpression.constant(Fraction(9, 2)) - TrigExpression.cos(6, coef=Fraction(9, 2))
    assert trig_grad_squared(TrigExpression.constant(5)).is_zero()


def test_mul_matches_pointwise_product():
    rng = np.random.default_rng(0)
    p = TrigExpression([((0, 0.3, 0), (H, 1.2, -0.4), (2, 0.1, 0.7))])
    q = TrigExpression([((1, -0.5, 0.25), (Fraction(3, 2), 0.0, 1.0))])
    x = rng.uniform(0, 2 * math.pi, 1000)
    np.testing.assert_allclose(trig_mul(p, q).evaluate_edge(0, x), p.evaluate_edge(0, x) * q.evaluate_edge(0, x),
                               atol=1e-12)
    # exact rational coefficients make commutativity and associativity exact
    F = Fraction
    p = TrigExpression([((0, F(3, 10), 0), (H, F(6, 5), F(-2, 5)), (2, F(1, 10), F(7, 10)))])
    q = TrigExpression([((1, F(-1, 2), F(1, 4)), (F(3, 2), 0, 1))])
    assert trig_mul(p, q) == trig_mul(q, p)
    assert trig_mul(trig_mul(p, q), p) == trig_mul(p, trig_mul(q, p))


def test_stabilizes_domain_examples():
    g = eight_graph()
    assert stabilizes_domain(s(1, (1, 0)), g)
    assert stabilizes_domain(TrigExpression.constant(3, 2), g)
    assert not stabilizes_domain(s(Fraction(1, 4), (1, 0)), g)
    # (c_1/2, c_1/2) is continuous but its Kirchhoff flux does not vanish
    assert not stabilizes_domain(c(H, (1, 1)), g)
    assert stabilizes_domain(s(H, (1, -1)) + c(1, (1, 1)), g)


def test_text_roundtrip():
    p = s(Fraction(3, 2), (1, -1)) + c(2, (1, 1)) * Fraction(1, 3) + 0.25
    assert TrigExpression.parse(p.to_text()) == p


def test_modulus_and_phase():
    g = discretize(Circle(), nodes_per_edge=128)
    f = WaveFunction.from_callable(g, lambda j, x: np.exp(3j * x))
    np.testing.assert_allclose(modulus(f).values, 1.0, atol=1e-15)
    assert apply_phase(f, np.zeros(g.size)).values.tolist() == f.values.tolist()
    th = np.sin(g.x) * 5
    out = apply_phase(f, th)
    assert np.max(np.abs(np.abs(out.values) - np.abs(f.values))) <= 1e-14
    assert out.norm() == pytest.approx(f.norm(), rel=1e-15)
