import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from mlcontracts.errors import DomainError
from mlcontracts.model import (
    ProblemParams,
    agent_best_response_linear,
    best_response_samples,
    expected_accuracy,
    participation_threshold,
    principal_utility_linear,
)

params_st = st.builds(
    ProblemParams,
    theta=st.floats(0.0, 0.9),
    d=st.floats(1e-3, 1.0),
    p=st.floats(0.2, 3.0),
    alpha=st.floats(1e-5, 1e-2),
    beta=st.floats(0.2, 5.0),
)


def test_accuracy_examples(baseline):
    assert expected_accuracy(10, baseline) == pytest.approx(0.999, abs=1e-15)
    assert expected_accuracy(1, baseline) == pytest.approx(0.99, abs=1e-15)
    far = ProblemParams(0.3, 0.01, 1.0, 1e-4, 1.0)
    assert expected_accuracy(1e12, far) == pytest.approx(0.7, abs=1e-12)


@pytest.mark.parametrize("n", [0.0, -1.0])
def test_accuracy_rejects_nonpositive_n(baseline, n):
    with pytest.raises(DomainError):
        expected_accuracy(n, baseline)


@pytest.mark.parametrize("field,value", [("theta", 1.0), ("theta", -0.1), ("d", 0.0), ("p", -1.0),
                                         ("alpha", 0.0), ("beta", math.nan)])
def test_params_validation(field, value):
    kwargs = dict(theta=0.0, d=0.01, p=1.0, alpha=1e-4, beta=1.0)
    kwargs[field] = value
    with pytest.raises(DomainError):
        ProblemParams(**kwargs)


def test_best_response_baseline_against_grid(baseline):
    r = agent_best_response_linear(0.25, baseline)
    assert r.n == pytest.approx(5.0, rel=1e-12)
    assert r.expected_accuracy == pytest.approx(0.998, abs=1e-12)
    assert r.agent_utility == pytest.approx(0.249, abs=1e-12)
    assert r.participates
    grid = np.arange(1e-4, 100.0 + 1e-9, 1e-4)
    util = 0.25 * (1 - 0.01 / grid) - 1e-4 * grid
    assert grid[np.argmax(util)] == pytest.approx(5.0, abs=1e-4)


def test_zero_slope(baseline):
    r = agent_best_response_linear(0.0, baseline)
    assert (r.n, r.agent_utility, r.expected_payment, r.participates) == (0.0, 0.0, 0.0, True)


def test_negative_slope_rejected(baseline):
    with pytest.raises(DomainError):
        agent_best_response_linear(-0.1, baseline)


def test_participation_threshold_boundary(baseline):
    c2 = participation_threshold(baseline)
    assert c2 == pytest.approx(4e-6, rel=1e-12)
    assert agent_best_response_linear(c2, baseline).participates
    below = agent_best_response_linear(c2 * (1 - 1e-6), baseline)
    assert not below.participates
    assert below.agent_utility < 0


def test_principal_utility_examples(baseline):
    rep = principal_utility_linear(0.25, baseline)
    assert rep.principal_utility == pytest.approx(0.7485, abs=1e-12)
    assert rep.ratio_to_first_best == pytest.approx(0.75, abs=1e-12)
    assert rep.first_best_utility == pytest.approx(0.998, abs=1e-12)
    assert principal_utility_linear(1.0, baseline).principal_utility == pytest.approx(0.0, abs=1e-15)
    low = principal_utility_linear(participation_threshold(baseline) * 0.5, baseline)
    assert low.principal_utility == 0.0 and not low.participates


def test_principal_utility_matches_simulated_agent(baseline):
    grid = np.linspace(0.01, 50, 500_001)
    c = 0.25
    n = grid[np.argmax(c * (1 - 0.01 / grid) - 1e-4 * grid)]
    assert (1 - c) * (1 - 0.01 / n) == pytest.approx(principal_utility_linear(c, baseline).principal_utility,
                                                     abs=1e-9)


def test_undefined_ratio_flag():
    params = ProblemParams(0.9, 1.0, 1.0, 0.5, 1.0)
    rep = principal_utility_linear(0.5, params)
    assert not rep.ratio_defined and math.isnan(rep.ratio_to_first_best)


@settings(max_examples=200, deadline=None)
@given(params_st, st.floats(1e-3, 1.0))
def test_best_response_beats_grid(params, c):
    n_hat = best_response_samples(c, params)
    grid = np.geomspace(n_hat / 100, n_hat * 100, 10_000)
    u_grid = c * (1 - params.theta - params.d / grid ** params.p) - params.alpha * grid
    u_hat = c * (1 - params.theta - params.d / n_hat ** params.p) - params.alpha * n_hat
    assert u_hat >= u_grid.max() - 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(1, 60), st.floats(0.01, 2.0))
def test_expected_linear_payment_independent_of_test_size(a, m, c):
    k = np.arange(m + 1)
    expected = c * float(np.sum(binom.pmf(k, m, a) * k / m))
    assert expected == pytest.approx(c * a, abs=1e-12)


def test_argmax_identical_across_test_sizes(baseline):
    grid = np.linspace(1.0, 20.0, 2001)
    acc = 1 - 0.01 / grid
    winners = set()
    for m in (1, 5, 50, 500):
        k = np.arange(m + 1)
        pay = np.array([0.25 * np.sum(binom.pmf(k, m, a) * k / m) for a in acc])
        winners.add(int(np.argmax(pay - 1e-4 * grid)))
    assert len(winners) == 1


@settings(max_examples=100, deadline=None)
@given(params_st, st.floats(1e-3, 1.0), st.floats(0.1, 10.0))
def test_scale_covariance(params, c, lam):
    scaled = ProblemParams(params.theta, params.d, params.p, params.alpha * lam, params.beta)
    assert best_response_samples(lam * c, scaled) == pytest.approx(best_response_samples(c, params), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(params_st)
def test_accuracy_concave(params):
    n = np.geomspace(1e-2, 1e4, 400)
    h = 1e-4 * n
    second = np.array([(expected_accuracy(x + s, params) - 2 * expected_accuracy(x, params)
                        + expected_accuracy(x - s, params)) / s ** 2 for x, s in zip(n, h)])
    scale = params.d * params.p * (params.p + 1) * n ** (-params.p - 2)
    assert np.all(second <= 1e-6 * scale + 1e-9)
