"""Variable label quality: samples of quality ``q`` cost ``q^b + alpha0`` each and
shrink the learning-curve term to ``d / (q n^p)``."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError
from .numerics import minimize_scalar


@dataclass(frozen=True)
class QualityParams:
    alpha0: float
    b: float
    p: float
    theta: float = 0.0
    d: float = 1.0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if not self.b > 1:
            raise DomainError("b must exceed 1")
        if not (self.p > 0 and self.d > 0):
            raise DomainError("p and d must be positive")
        if not 0.0 <= self.theta < 1.0:
            raise DomainError("theta must lie in [0, 1)")


@dataclass(frozen=True)
class QualityChoice:
    q_star: float
    n: float
    total_cost: float
    closed_form: float
    closed_form_p: float


def samples_needed(q: float, qp: QualityParams, target_accuracy: float) -> float:
    gap = 1.0 - qp.theta - target_accuracy
    return (qp.d / (q * gap)) ** (1.0 / qp.p)


def _clip01(v: float) -> float:
    return min(1.0, max(0.0, v))


def closed_form_quality(qp: QualityParams) -> float:
    """``(alpha0 / (b - 1))^(1/b)`` clipped to ``[0, 1]``; ignores ``p``."""
    return _clip01((qp.alpha0 / (qp.b - 1.0)) ** (1.0 / qp.b))


def closed_form_quality_p(qp: QualityParams) -> float:
    """Stationary point of ``(q^b + alpha0) q^(-1/p)``: ``(alpha0 / (p b - 1))^(1/b)``, clipped."""
    if qp.p * qp.b <= 1.0:
        return 1.0
    return _clip01((qp.alpha0 / (qp.p * qp.b - 1.0)) ** (1.0 / qp.b))


def optimal_quality(qp: QualityParams, target_accuracy: float) -> QualityChoice:
    """Cheapest quality level for reaching ``target_accuracy``, found numerically on ``(0, 1]``."""
    if not 1.0 - qp.theta - target_accuracy > 0:
        raise DomainError(f"target accuracy {target_accuracy} is not achievable with theta={qp.theta}")
    cost = lambda q: (q ** qp.b + qp.alpha0) * samples_needed(q, qp, target_accuracy)
    q = minimize_scalar(lambda q: math.log(cost(q)), 1e-9, 1.0, tol=1e-13)
    n = samples_needed(q, qp, target_accuracy)
    return QualityChoice(q, n, cost(q), closed_form_quality(qp), closed_form_quality_p(qp))
