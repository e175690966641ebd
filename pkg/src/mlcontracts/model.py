"""Problem parameters, the learning curve and the agent's response to linear contracts.

Expected test accuracy after ``n`` samples is ``1 - theta - d / n**p``. The
agent pays ``alpha`` per sample; the principal values one unit of payment at
``beta`` units of accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError

# Utility at exactly the participation threshold evaluates to a rounding-level
# negative number; treat that as participation.
PARTICIPATION_TOL = 1e-12


@dataclass(frozen=True)
class ProblemParams:
    """One delegation instance ``(theta, d, p, alpha, beta)``."""

    theta: float
    d: float
    p: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.theta < 1.0:
            raise DomainError(f"theta must lie in [0, 1), got {self.theta}")
        for name in ("d", "p", "alpha", "beta"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value}")

    def with_theta(self, theta: float) -> "ProblemParams":
        return replace(self, theta=theta)


@dataclass(frozen=True)
class AgentResponse:
    n: float
    expected_accuracy: float
    expected_payment: float
    agent_utility: float
    participates: bool


@dataclass(frozen=True)
class UtilityReport:
    principal_utility: float
    agent_utility: float
    first_best_utility: float
    ratio_to_first_best: float
    participates: bool = True
    ratio_defined: bool = True


def expected_accuracy(n: float, params: ProblemParams, theta: float | None = None) -> float:
    """Mean test accuracy of a model trained on ``n > 0`` samples.

    ``theta`` overrides ``params.theta`` (used when evaluating other hidden states).
    """
    if not n > 0:
        raise DomainError(f"sample count must be positive, got {n}")
    th = params.theta if theta is None else theta
    return 1.0 - th - params.d * math.exp(-params.p * math.log(n))


def samples_for_accuracy(accuracy: float, params: ProblemParams, theta: float | None = None) -> float:
    """Inverse learning curve; ``inf`` when the accuracy is unreachable."""
    th = params.theta if theta is None else theta
    gap = 1.0 - th - accuracy
    if gap <= 0.0:
        return math.inf
    return (params.d / gap) ** (1.0 / params.p)


def best_response_samples(c: float, params: ProblemParams) -> float:
    """Maximiser of ``c * a(n) - alpha * n``: ``(c d p / alpha)^(1/(p+1))``."""
    if c < 0:
        raise DomainError(f"linear contract slope must be non-negative, got {c}")
    if c == 0:
        return 0.0
    return math.exp(math.log(c * params.d * params.p / params.alpha) / (params.p + 1.0))


def participation_threshold(params: ProblemParams) -> float:
    """Smallest slope at which the agent's best response earns non-negative utility."""
    p = params.p
    return (params.alpha * params.d ** (1.0 / p) / p) * ((p + 1.0) / (1.0 - params.theta)) ** ((p + 1.0) / p)


def agent_best_response_linear(c: float, params: ProblemParams) -> AgentResponse:
    n = best_response_samples(c, params)
    if n == 0.0:
        return AgentResponse(n=0.0, expected_accuracy=-math.inf, expected_payment=0.0,
                             agent_utility=0.0, participates=True)
    acc = expected_accuracy(n, params)
    payment = c * acc
    utility = payment - params.alpha * n
    return AgentResponse(
        n=n,
        expected_accuracy=acc,
        expected_payment=payment,
        agent_utility=utility,
        participates=utility >= -PARTICIPATION_TOL * max(1.0, c),
    )


def first_best_samples(params: ProblemParams) -> float:
    return (params.p * params.d / (params.alpha * params.beta)) ** (1.0 / (params.p + 1.0))


def first_best_utility(params: ProblemParams, theta: float | None = None) -> float:
    n = first_best_samples(params)
    return expected_accuracy(n, params, theta) - params.beta * params.alpha * n


def principal_utility_linear(c: float, params: ProblemParams) -> UtilityReport:
    """Principal's expected utility ``(1 - beta c) a(n(c))`` under a ``c``-linear contract.

    A non-participating agent leaves the principal with zero utility.
    """
    if not c > 0:
        raise DomainError(f"principal utility needs a positive slope, got {c}")
    response = agent_best_response_linear(c, params)
    fb = first_best_utility(params)
    if response.participates:
        utility = (1.0 - params.beta * c) * response.expected_accuracy
        agent_u = response.agent_utility
    else:
        utility = 0.0
        agent_u = 0.0
    if fb > 0:
        ratio, defined = utility / fb, True
    else:
        ratio, defined = math.nan, False
    return UtilityReport(
        principal_utility=utility,
        agent_utility=agent_u,
        first_best_utility=fb,
        ratio_to_first_best=ratio,
        participates=response.participates,
        ratio_defined=defined,
    )
