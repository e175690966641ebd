"""First-best threshold contracts and linear contracts for one round of delegation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UndefinedBenchmarkError
from .model import (
    ProblemParams,
    agent_best_response_linear,
    expected_accuracy,
    first_best_samples,
    participation_threshold,
    principal_utility_linear,
)


@dataclass(frozen=True)
class ThresholdContract:
    """Pay ``payment`` iff test accuracy reaches ``accuracy_threshold``."""

    accuracy_threshold: float
    payment: float

    def __post_init__(self):
        if not self.payment > 0:
            raise DomainError("threshold contract payment must be positive")


@dataclass(frozen=True)
class LinearContract:
    """Pay ``c`` times the observed test accuracy."""

    c: float

    def __post_init__(self):
        if self.c < 0:
            raise DomainError("linear contracts need a non-negative slope")


@dataclass(frozen=True)
class FirstBest:
    contract: ThresholdContract
    n_star: float
    utility: float


def first_best(params: ProblemParams) -> FirstBest:
    n = first_best_samples(params)
    payment = params.alpha * n
    threshold = expected_accuracy(n, params)
    return FirstBest(ThresholdContract(threshold, payment), n, threshold - params.beta * payment)


def approximation_bound(p: float) -> float:
    """``1 - (p+1)^(-(p+1)/p)``; tends to ``1 - 1/e`` as ``p -> 0``."""
    if not p > 0:
        raise DomainError("p must be positive")
    return -math.expm1(-(p + 1.0) / p * math.log1p(p))


def robust_slope(p: float, beta: float) -> float:
    """The theta-agnostic slope ``1 / (beta (p+1)^((p+1)/p))``."""
    return 1.0 / (beta * (p + 1.0) ** ((p + 1.0) / p))


def approx_linear_contract(params: ProblemParams) -> LinearContract:
    return LinearContract(max(robust_slope(params.p, params.beta), participation_threshold(params)))


def robust_alpha_bound(d: float, p: float, beta: float, theta_bar: float) -> float:
    return (p / (beta * d ** (1.0 / p))) * ((1.0 - theta_bar) / (p + 1.0) ** 2) ** ((p + 1.0) / p)


def robust_contract_applicable(params: ProblemParams, theta_bar: float) -> bool:
    """Whether the robust slope is guaranteed to work for every state below ``theta_bar``."""
    if not 0.0 <= theta_bar < 1.0:
        raise DomainError("theta_bar must lie in [0, 1)")
    if params.theta >= theta_bar:
        raise DomainError(f"theta={params.theta} must be below theta_bar={theta_bar}")
    return params.alpha <= robust_alpha_bound(params.d, params.p, params.beta, theta_bar)


def approximation_ratio(contract: LinearContract | float, params: ProblemParams) -> float:
    c = contract.c if isinstance(contract, LinearContract) else float(contract)
    report = principal_utility_linear(c, params)
    if not report.ratio_defined:
        raise UndefinedBenchmarkError(
            f"first-best utility {report.first_best_utility} is not positive")
    if not report.participates:
        raise DomainError(f"agent does not participate under c={c}")
    return report.ratio_to_first_best


def tightness_instance(theta: float, p: float, d: float, beta: float = 1.0) -> ProblemParams:
    """Instance on which the robust slope is the optimal linear contract.

    The first-order condition of the linear-contract utility vanishes at the
    robust slope when ``(alpha beta d^(1/p) / p)^(p/(p+1))`` equals
    ``(1 - theta) / ((p + 1)(1 + B p (p+1)^(1/p)))`` with ``B`` the bound.
    """
    if not 0.0 <= theta < 1.0 or not p > 0 or not d > 0:
        raise DomainError("need theta in [0,1), p > 0, d > 0")
    bound = approximation_bound(p)
    s = (1.0 - theta) / ((p + 1.0) * (1.0 + bound * p * (p + 1.0) ** (1.0 / p)))
    alpha = p * s ** ((p + 1.0) / p) / (beta * d ** (1.0 / p))
    return ProblemParams(theta=theta, d=d, p=p, alpha=alpha, beta=beta)


def linear_utility_curve(c: np.ndarray, params: ProblemParams) -> np.ndarray:
    """Vectorised principal utility over an array of slopes (0 where the agent opts out)."""
    c = np.asarray(c, dtype=float)
    p = params.p
    k = (params.alpha * params.d ** (1.0 / p) / p) ** (p / (p + 1.0))
    excess = k * c ** (-p / (p + 1.0))
    acc = 1.0 - params.theta - excess
    agent = c * (1.0 - params.theta) - (p + 1.0) * k * c ** (1.0 / (p + 1.0))
    u = (1.0 - params.beta * c) * acc
    return np.where(agent >= -1e-12 * np.maximum(1.0, c), u, 0.0)


def best_linear_ratio_grid(params: ProblemParams, points: int = 100_000) -> tuple[float, float]:
    """Best slope on a log grid over ``[c_participation, 1/beta]`` and its first-best ratio."""
    fb = first_best(params).utility
    if fb <= 0:
        raise UndefinedBenchmarkError("first-best utility is not positive")
    lo = participation_threshold(params)
    hi = 1.0 / params.beta
    if lo >= hi:
        return math.nan, 0.0
    grid = np.geomspace(lo, hi, points)
    u = linear_utility_curve(grid, params)
    i = int(np.argmax(u))
    return float(grid[i]), float(u[i] / fb)


__all__ = [
    "FirstBest", "LinearContract", "ThresholdContract", "agent_best_response_linear",
    "approx_linear_contract", "approximation_bound", "approximation_ratio",
    "best_linear_ratio_grid", "first_best", "linear_utility_curve", "robust_alpha_bound",
    "robust_contract_applicable", "robust_slope", "tightness_instance",
]
