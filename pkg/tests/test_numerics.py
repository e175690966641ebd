import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from mlcontracts.errors import BracketError, DomainError, InfeasibleStartError
from mlcontracts.numerics import (
    Constraint,
    ConvexProgram,
    binom_cdf,
    binom_tail,
    fd_gradient,
    find_root_bisect,
    fit_loglog_slope,
    minimize_scalar,
    solve_convex,
)


def test_bisect_sqrt2():
    assert find_root_bisect(lambda x: x * x - 2, 0, 2, 1e-10) == pytest.approx(math.sqrt(2), abs=1e-10)


def test_bisect_zero():
    assert find_root_bisect(lambda x: x, -1, 1) == 0.0


def test_bisect_no_sign_change():
    with pytest.raises(BracketError):
        find_root_bisect(lambda x: x * x + 1, -1, 1)


def test_bisect_width_halves():
    widths = []
    find_root_bisect(lambda x: x ** 3 - 0.3, 0.0, 1.0, 1e-12, history=widths)
    assert len(widths) > 30
    prev = 1.0
    for w in widths:
        assert w == pytest.approx(prev / 2, rel=1e-12)
        prev = w


def test_golden_examples():
    assert minimize_scalar(lambda x: (x - 3) ** 2, 0, 10) == pytest.approx(3, abs=1e-8)
    assert minimize_scalar(lambda x: x, 0, 1) == 0.0
    assert minimize_scalar(lambda x: -x, 0, 1) == 1.0
    with pytest.raises(DomainError):
        minimize_scalar(lambda x: x, 1, 1)


def test_pooling_style_objective_minimum():
    d, nu, delta, ab = 0.01, 0.5, 0.1, 1e-4
    f = lambda n: nu * d * (d + delta * n) / (d * n) + (1 - nu) * d / n + ab * n
    assert minimize_scalar(f, 1e-3, 1e3, tol=1e-12) == pytest.approx(10.0, rel=1e-6)


def test_unconstrained_quadratic():
    prog = ConvexProgram(lambda x: float((x[0] - 1) ** 2 + 3 * (x[1] + 2) ** 2))
    rep = solve_convex(prog, [0.0, 0.0])
    assert rep.converged
    assert rep.x == pytest.approx([1.0, -2.0], abs=1e-9)


def _hyperbola_program():
    return ConvexProgram(
        lambda x: float(x[0] + x[1]),
        [Constraint(lambda x: 1.0 - x[0] * x[1])],
        lower=np.zeros(2),
    )


def test_constrained_program_and_merit_monotone():
    # minimise x + y subject to xy >= 1 (convex on the positive orthant)
    rep = solve_convex(_hyperbola_program(), [3.0, 0.5])
    assert rep.converged and rep.max_violation <= 1e-8
    assert rep.x == pytest.approx([1.0, 1.0], abs=1e-4)
    assert rep.objective == pytest.approx(2.0, abs=1e-9)
    for stage in rep.merit_history:
        assert all(b <= a + 1e-15 * max(1.0, abs(a)) for a, b in zip(stage, stage[1:]))


def test_infeasible_start():
    with pytest.raises(InfeasibleStartError):
        solve_convex(_hyperbola_program(), [0.5, 0.5])


def test_iteration_cap_reports_non_converged():
    rep = solve_convex(_hyperbola_program(), [3.0, 0.5], max_iter=2)
    assert not rep.converged


def test_fd_gradient_matches_analytic():
    f = lambda x: float(np.sin(x[0]) * x[1] ** 2 + np.exp(x[2]))
    x = np.array([0.3, -1.2, 0.5])
    analytic = np.array([np.cos(x[0]) * x[1] ** 2, 2 * np.sin(x[0]) * x[1], np.exp(x[2])])
    assert fd_gradient(f, x) == pytest.approx(analytic, abs=1e-8)


def test_binom_tail_examples():
    assert binom_tail(2, 0.5, 1) == pytest.approx(0.75, abs=1e-15)
    assert binom_tail(7, 0.3, 0) == 1.0
    assert binom_tail(10, 0.999, 10) == pytest.approx(0.999 ** 10, abs=1e-14)
    assert binom_tail(10, 0.999, 10) == pytest.approx(0.9900448802097482, abs=1e-13)


@pytest.mark.parametrize("args", [(3, 1.5, 1), (3, -0.1, 1), (3, 0.5, 4), (3, 0.5, -1), (-1, 0.5, 0)])
def test_binom_tail_domain(args):
    with pytest.raises(DomainError):
        binom_tail(*args)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 400), st.floats(0.0, 1.0), st.data())
def test_binom_complement(m, q, data):
    k = data.draw(st.integers(0, m))
    assert binom_tail(m, q, k) + binom_cdf(m, q, k - 1) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 2000), st.floats(0.001, 0.999), st.data())
def test_binom_tail_matches_scipy(m, q, data):
    k = data.draw(st.integers(0, m))
    assert binom_tail(m, q, k) == pytest.approx(binom.sf(k - 1, m, q), abs=1e-12)


def test_slope_examples():
    pts = [(2.0 ** e, 3 * (2.0 ** e) ** 0.75) for e in range(10, 17)]
    assert fit_loglog_slope(pts) == pytest.approx(0.75, abs=1e-12)
    assert fit_loglog_slope([(t, 5.0) for t in (1.0, 2.0, 4.0)]) == pytest.approx(0.0, abs=1e-12)
    assert fit_loglog_slope([(1.0, 1.0), (math.e, math.e)]) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("pts", [[(1.0, 1.0)], [(0.0, 1.0), (1.0, 2.0)], [(1.0, -1.0), (2.0, 1.0)]])
def test_slope_domain(pts):
    with pytest.raises(DomainError):
        fit_loglog_slope(pts)
