"""Two-state contracts for an agent that discovers its state while collecting data.

Telling the states apart takes about ``k / dtheta^2`` samples, so a
separating menu must ask every state for at least that many. The
alternative is a single pooled accuracy target that both states can reach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .hidden_state import (
    MenuContract,
    MenuItem,
    PriorBelief,
    _mimic,
    solve_two_state_closed_form,
)
from .model import ProblemParams, expected_accuracy, first_best_samples, first_best_utility
from .numerics import minimize_scalar


@dataclass(frozen=True)
class PoolingContract:
    target_accuracy: float
    payment: float
    n_lo: float
    n_hi: float
    utility: float


@dataclass(frozen=True)
class StateLearningContract:
    kind: str
    contract: MenuContract | PoolingContract
    k_test: float
    utility: float
    separating_utility: float
    pooling_utility: float


def _check(theta_lo, theta_hi, nu):
    if theta_hi < theta_lo:
        raise DomainError("need theta_lo <= theta_hi")
    if not 0.0 < nu < 1.0:
        raise DomainError("nu must lie in (0, 1)")


def sample_floor(theta_lo: float, theta_hi: float, k_test: float) -> float:
    """``k / dtheta^2``; zero when the states coincide (nothing to learn)."""
    if not k_test > 0:
        raise DomainError("k_test must be positive")
    delta = theta_hi - theta_lo
    return 0.0 if delta == 0.0 else k_test / delta ** 2


def separating_contract(theta_lo: float, theta_hi: float, nu: float, params: ProblemParams,
                        k_test: float) -> MenuContract:
    _check(theta_lo, theta_hi, nu)
    n0 = sample_floor(theta_lo, theta_hi, k_test)
    a = params.alpha
    if theta_lo == theta_hi:
        n = max(first_best_samples(params), n0)
        n_lo = n_hi = n
        t_lo = t_hi = a * n
    else:
        free = solve_two_state_closed_form(theta_lo, theta_hi, nu, params)
        n_lo, n_hi = max(free.n_lo, n0), max(free.n_hi, n0)
        delta = theta_hi - theta_lo
        t_hi = a * n_hi
        t_lo = a * n_lo + a * (n_hi - _mimic(n_hi, delta, params.d, params.p))
    utility = (nu * (expected_accuracy(n_lo, params, theta_lo) - params.beta * t_lo)
               + (1.0 - nu) * (expected_accuracy(n_hi, params, theta_hi) - params.beta * t_hi))
    prior = PriorBelief((theta_lo, theta_hi), (nu, 1.0 - nu)) if theta_lo < theta_hi else None
    items = [MenuItem(theta_lo, n_lo, t_lo), MenuItem(theta_hi, n_hi, t_hi)]
    return MenuContract(items, utility, True, prior)


def pooling_objective(n_bar: float, delta: float, nu: float, params: ProblemParams) -> float:
    """Expected loss plus weighted payment when both states must reach ``a(n_bar, theta_hi)``."""
    d, p = params.d, params.p
    n_under = _mimic(n_bar, delta, d, p)
    return nu * d / n_under ** p + (1.0 - nu) * d / n_bar ** p + params.alpha * params.beta * n_bar


def pooling_contract(theta_lo: float, theta_hi: float, nu: float, params: ProblemParams) -> PoolingContract:
    _check(theta_lo, theta_hi, nu)
    delta = theta_hi - theta_lo
    n_star = first_best_samples(params)
    n_bar = minimize_scalar(lambda n: pooling_objective(n, delta, nu, params),
                            1e-6 * n_star, 100.0 * n_star, tol=1e-12 * n_star)
    target = 1.0 - theta_hi - params.d / n_bar ** params.p
    payment = params.alpha * n_bar
    n_lo = _mimic(n_bar, delta, params.d, params.p)
    return PoolingContract(target, payment, n_lo, n_bar, target - params.beta * payment)


def state_aware_utility(theta_lo: float, theta_hi: float, nu: float, params: ProblemParams) -> float:
    """Optimal menu utility when the agent knows its state from the start."""
    _check(theta_lo, theta_hi, nu)
    if theta_lo == theta_hi:
        return first_best_utility(params, theta_lo)
    return solve_two_state_closed_form(theta_lo, theta_hi, nu, params).utility


def state_learning_contract(theta_lo: float, theta_hi: float, nu: float, params: ProblemParams,
                            k_test: float) -> StateLearningContract:
    """Better of the separating menu and the pooling contract."""
    sep = separating_contract(theta_lo, theta_hi, nu, params, k_test)
    pool = pooling_contract(theta_lo, theta_hi, nu, params)
    u_sep, u_pool = sep.expected_principal_utility, pool.utility
    if u_sep > u_pool:
        return StateLearningContract("separating", sep, k_test, u_sep, u_sep, u_pool)
    return StateLearningContract("pooling", pool, k_test, u_pool, u_sep, u_pool)


@dataclass(frozen=True)
class Fig2Row:
    delta_theta: float
    k_test: float
    aware_utility: float
    separating_utility: float
    pooling_utility: float
    learning_utility: float


def fig2_sweep(params: ProblemParams, theta_lo: float, nu: float, deltas, k_values) -> list[Fig2Row]:
    rows = []
    for k in k_values:
        for delta in deltas:
            hi = theta_lo + float(delta)
            choice = state_learning_contract(theta_lo, hi, nu, params, float(k))
            rows.append(Fig2Row(float(delta), float(k), state_aware_utility(theta_lo, hi, nu, params),
                                choice.separating_utility, choice.pooling_utility, choice.utility))
    return rows


def worst_case_ratio(rows: list[Fig2Row]) -> dict[float, float]:
    """Per ``k``: minimum over the grid of learning utility over state-aware utility."""
    out: dict[float, float] = {}
    for r in rows:
        ratio = r.learning_utility / r.aware_utility if r.aware_utility > 0 else math.nan
        out[r.k_test] = min(out.get(r.k_test, math.inf), ratio)
    return out
