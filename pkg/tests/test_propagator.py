import math

import numpy as np
import pytest

from isoctl.catalog import eight_graph_mode
from isoctl.domain import Interval, discretize
from isoctl.errors import StepTooLarge, TruncationLoss, ValidationError
from isoctl.funcspace import TrigExpression, WaveFunction
from isoctl.propagator import (PropagatorContext, abstract_conjugation, abstract_limit_target, apply_phase_samples,
                               conjugated_limit_target, conjugated_step, evolve_free, evolve_pulse, substeps)

COS = TrigExpression.cos(1)
SIN = TrigExpression.sin(1)
Q2 = TrigExpression([[(1, 1, 0)], [(1, 1, 0)]])


def test_bases_orthonormal(circle_ctx, eight_ctx):
    assert circle_ctx.orthonormality_error() <= 1e-8
    assert eight_ctx.orthonormality_error() <= 1e-8
    assert eight_ctx.kind == "eight" and circle_ctx.kind == "fourier"


def test_fd_basis_on_interval():
    g = discretize(Interval(math.pi), nodes_per_edge=64)
    ctx = PropagatorContext.build(g)
    assert ctx.kind == "fd" and ctx.orthonormality_error() <= 1e-8


def test_free_flow_examples(circle_grid, circle_ctx, eight_grid, eight_ctx):
    psi = WaveFunction.from_callable(circle_grid, lambda j, x: np.exp(1j * x) / math.sqrt(2 * math.pi))
    assert (evolve_free(circle_ctx, psi, 2 * math.pi) - psi * np.exp(-2j * math.pi)).norm() <= 1e-8
    assert (evolve_free(circle_ctx, psi, 0.0) - psi).norm() <= 1e-10
    f = eight_graph_mode("odd", 1).sample(eight_grid)
    out = evolve_free(eight_ctx, f, 0.7)
    assert (out - f * np.exp(-2.25j * 0.7)).norm() <= 1e-6
    assert abs(out.norm() - 1) <= 1e-8


def test_truncation_loss(circle_grid):
    ctx = PropagatorContext.build(circle_grid, n_modes=16)
    psi = WaveFunction.from_callable(circle_grid, lambda j, x: np.exp(20j * x) / math.sqrt(2 * math.pi))
    with pytest.raises(TruncationLoss):
        evolve_free(ctx, psi, 0.1)


def test_pulse_zero_is_free(circle_ctx, flat_circle):
    a = evolve_pulse(circle_ctx, flat_circle, [0.0], [COS], 1e-2)
    assert (a - evolve_free(circle_ctx, flat_circle, 1e-2)).norm() <= 1e-9


def test_pulse_limit_and_unitarity(circle_ctx, circle_grid, flat_circle):
    tgt = apply_phase_samples(flat_circle, -COS.evaluate(circle_grid).values.real)
    errs = []
    for d in (1e-2, 1e-3):
        out = evolve_pulse(circle_ctx, flat_circle, [1.0], [COS], d)
        assert abs(out.norm() - 1) <= 1e-8
        errs.append((out - tgt).norm())
    assert errs[1] < errs[0]


def test_strang_second_order(circle_ctx, flat_circle):
    ex = evolve_pulse(circle_ctx, flat_circle, [3.0], [COS], 1e-2, method="exact")
    errs = [(evolve_pulse(circle_ctx, flat_circle, [3.0], [COS], 1e-2, n_sub=n) - ex).norm() for n in (4, 8, 16)]
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_substep_rules(circle_ctx, circle_grid):
    W = 3.0 * COS.evaluate(circle_grid).values.real
    assert substeps(circle_ctx, W, 1e-2) >= 4
    n = substeps(circle_ctx, W, 1e-2, rule="conservative", u_norm=3.0)
    assert 1e-2 / n <= min(1e-2 / 16, 1e-3 / (1 + 3.0 / 1e-2)) * (1 + 1e-9)


def test_step_too_large(circle_ctx, flat_circle):
    with pytest.raises(StepTooLarge):
        evolve_pulse(circle_ctx, flat_circle, [1e4], [COS], 1.0, n_sub=1)
    with pytest.raises(ValidationError):
        evolve_pulse(circle_ctx, flat_circle, [1.0], [COS], 0.0)


def test_conjugated_step_limit(circle_ctx, flat_circle):
    assert (conjugated_step(circle_ctx, flat_circle, SIN, 0.0, 1e-2)
            - evolve_free(circle_ctx, flat_circle, 1e-2)).norm() == 0
    tgt = conjugated_limit_target(circle_ctx, flat_circle, SIN, 1.0)
    errs = [(conjugated_step(circle_ctx, flat_circle, SIN, 1.0, g) - tgt).norm() for g in (1e-2, 1e-3)]
    assert errs[1] < errs[0]


def test_conjugated_step_keeps_vertex_conditions(eight_ctx, eight_grid):
    psi = eight_graph_mode("ground").sample(eight_grid)
    out = conjugated_step(eight_ctx, psi, Q2, 0.5, 1e-2)
    assert out.vertex_mismatch() <= 1e-8


@pytest.mark.parametrize("case", ["circle-sin", "circle-cos", "eight-q2"])
def test_abstract_limit_strictly_decreasing(case, circle_ctx, flat_circle, eight_ctx, eight_grid):
    if case == "eight-q2":
        ctx, psi, S, Q = eight_ctx, eight_graph_mode("ground").sample(eight_grid), Q2, Q2
    else:
        ctx, psi, S, Q = circle_ctx, flat_circle, SIN if case == "circle-sin" else COS, COS
    tgt = abstract_limit_target(ctx, psi, S, [0.5], [Q])
    errs = [(abstract_conjugation(ctx, psi, S, [0.5], [Q], d) - tgt).norm() for d in (1e-1, 1e-2, 1e-3)]
    assert errs[0] > errs[1] > errs[2]
