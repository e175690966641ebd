"""Small numerical toolkit: bracketing, golden section, a log-barrier solver,
exact binomial tails and log-log slope fits.

Everything here is deterministic and works on plain floats or small numpy
arrays; problem sizes in this package never exceed a few dozen variables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import bdtr, gammaln
from scipy.stats import binom as binom_dist

from .errors import BracketError, DomainError, InfeasibleStartError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def find_root_bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                     max_iter: int = 500, history: list | None = None) -> float:
    """Bisection on ``[lo, hi]``; requires ``f(lo) * f(hi) <= 0``.

    If ``history`` is given, the bracket width after every halving is appended.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket at floating-point resolution
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if history is not None:
            history.append(hi - lo)
    return 0.5 * (lo + hi)


def minimize_scalar(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
                    max_iter: int = 500) -> float:
    """Golden-section search for the minimiser of a unimodal ``f`` on ``[lo, hi]``."""
    if not lo < hi:
        raise DomainError(f"need lo < hi, got [{lo}, {hi}]")
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    # boundary minima: the shrunken bracket hugs the endpoint, pick the endpoint itself
    candidates = [(f(x), x)]
    if a == lo:
        candidates.append((f(lo), lo))
    if b == hi:
        candidates.append((f(hi), hi))
    return min(candidates)[1]


# --------------------------------------------------------------------------
# log-barrier solver
# --------------------------------------------------------------------------

@dataclass
class Constraint:
    """Inequality ``fun(x) <= 0`` with optional analytic derivatives."""

    fun: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class ConvexProgram:
    """``minimize objective(x)  s.t.  g_k(x) <= 0,  x >= lower``."""

    objective: Callable[[np.ndarray], float]
    constraints: list[Constraint] = field(default_factory=list)
    lower: np.ndarray | None = None
    objective_grad: Callable[[np.ndarray], np.ndarray] | None = None
    objective_hess: Callable[[np.ndarray], np.ndarray] | None = None


@dataclass
class SolveReport:
    x: np.ndarray
    objective: float
    max_violation: float
    iterations: int
    converged: bool
    duality_gap: float = math.inf
    merit_history: list[list[float]] = field(default_factory=list)


def _fd_step(x: np.ndarray) -> np.ndarray:
    return 1e-6 * np.maximum(1.0, np.abs(x))


def fd_gradient(fun: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central finite differences with ``h = 1e-6 * max(1, |x|)``."""
    h = _fd_step(x)
    g = np.empty_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = h[i]
        g[i] = (fun(x + e) - fun(x - e)) / (2.0 * h[i])
    return g


def fd_hessian(grad: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    h = _fd_step(x)
    H = np.empty((x.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = h[i]
        H[:, i] = (grad(x + e) - grad(x - e)) / (2.0 * h[i])
    return 0.5 * (H + H.T)


class _Barrier:
    """Merit ``f(x) - mu * sum(log(-g_k(x))) - mu * sum(log(x_i - l_i))``."""

    def __init__(self, prog: ConvexProgram, dim: int):
        self.prog = prog
        self.dim = dim
        if prog.lower is None:
            self.lower = np.full(dim, -np.inf)
        else:
            self.lower = np.asarray(prog.lower, dtype=float)
        self.bounded = np.isfinite(self.lower)
        f = prog.objective
        self.f = f
        self.fgrad = prog.objective_grad or (lambda x: fd_gradient(f, x))
        self.fhess = prog.objective_hess or (lambda x: fd_hessian(self.fgrad, x))
        self.cons = []
        for c in prog.constraints:
            g = c.fun
            gg = c.grad or (lambda x, g=g: fd_gradient(g, x))
            gh = c.hess or (lambda x, gg=gg: fd_hessian(gg, x))
            self.cons.append((g, gg, gh))

    @property
    def n_terms(self) -> int:
        return len(self.cons) + int(self.bounded.sum())

    def slacks(self, x):
        bslack = x[self.bounded] - self.lower[self.bounded]
        if np.any(bslack <= 0):
            # constraint callables may be undefined outside the box
            return np.full(len(self.cons), np.inf), bslack
        gvals = np.array([g(x) for g, _, _ in self.cons], dtype=float)
        return gvals, bslack

    def strictly_feasible(self, x) -> bool:
        gvals, bslack = self.slacks(x)
        return bool(np.all(gvals < 0) and np.all(bslack > 0) and np.all(np.isfinite(gvals)))

    def merit(self, x, mu):
        gvals, bslack = self.slacks(x)
        if np.any(gvals >= 0) or np.any(bslack <= 0) or not np.all(np.isfinite(gvals)):
            return math.inf
        return self.f(x) - mu * (np.sum(np.log(-gvals)) + np.sum(np.log(bslack)))

    def derivatives(self, x, mu):
        grad = np.array(self.fgrad(x), dtype=float)
        hess = np.array(self.fhess(x), dtype=float)
        for g, gg, gh in self.cons:
            gv = g(x)
            dg = np.asarray(gg(x), dtype=float)
            grad += mu * dg / (-gv)
            hess += mu * (np.outer(dg, dg) / gv ** 2 + np.asarray(gh(x), dtype=float) / (-gv))
        idx = np.flatnonzero(self.bounded)
        s = x[idx] - self.lower[idx]
        grad[idx] -= mu / s
        hess[idx, idx] += mu / s ** 2
        return grad, hess


def _newton_direction(grad, hess):
    """Newton step, shifting the Hessian until it is positive definite."""
    n = grad.size
    scale = max(1e-300, float(np.max(np.abs(np.diag(hess)))))
    shift = 0.0
    for _ in range(80):
        try:
            L = np.linalg.cholesky(hess + shift * np.eye(n))
        except np.linalg.LinAlgError:
            shift = max(1e-12 * scale, 10.0 * shift)
            continue
        y = np.linalg.solve(L, -grad)
        return np.linalg.solve(L.T, y)
    return -grad / scale


def solve_convex(prog: ConvexProgram, x0, tol: float = 1e-10, mu0: float | None = None,
                 max_iter: int = 5000, inner_tol: float = 1e-14) -> SolveReport:
    """Log-barrier interior-point method.

    Each stage minimises the barrier merit at fixed weight ``mu`` by damped
    Newton steps with Armijo backtracking; ``mu`` is halved between stages
    until the duality bound ``m * mu`` drops below ``tol``. Iterates stay
    strictly feasible, and within a stage the merit never increases.
    """
    x = np.array(x0, dtype=float)
    barrier = _Barrier(prog, x.size)
    if not barrier.strictly_feasible(x):
        gvals, bslack = barrier.slacks(x)
        raise InfeasibleStartError(
            f"start is not strictly feasible: max g={gvals.max() if gvals.size else -np.inf}, "
            f"min bound slack={bslack.min() if bslack.size else np.inf}")
    m = max(1, barrier.n_terms)
    if mu0 is None:
        mu0 = max(1e-3 * abs(barrier.f(x)), 1e-8) / m
    mu = mu0
    iterations = 0
    history: list[list[float]] = []
    converged = False
    while True:
        stage = [barrier.merit(x, mu)]
        while iterations < max_iter:
            grad, hess = barrier.derivatives(x, mu)
            dx = _newton_direction(grad, hess)
            slope = float(grad @ dx)
            if slope >= 0:
                dx, slope = -grad, -float(grad @ grad)
            if -slope / 2.0 <= inner_tol * (1.0 + abs(stage[-1])):
                break
            iterations += 1
            step = 1.0
            current = stage[-1]
            accepted = False
            while step > 1e-20:
                trial = x + step * dx
                value = barrier.merit(trial, mu)
                if value <= current + 0.25 * step * slope:
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            x = trial
            stage.append(value)
        history.append(stage)
        if m * mu <= tol:
            converged = True
            break
        if iterations >= max_iter:
            break
        mu *= 0.5
    gvals, bslack = barrier.slacks(x)
    violation = max([0.0] + list(gvals) + list(-bslack))
    return SolveReport(
        x=x,
        objective=float(barrier.f(x)),
        max_violation=float(violation),
        iterations=iterations,
        converged=converged and violation <= 1e-8,
        duality_gap=m * mu,
        merit_history=history,
    )


# --------------------------------------------------------------------------
# statistics helpers
# --------------------------------------------------------------------------

def binom_tail(m: int, q: float, k: int) -> float:
    """``P(X >= k)`` for ``X ~ Binomial(m, q)``.

    Sums the probability mass on whichever side of ``k`` lies away from the
    mean and complements if needed, so the absolute error stays near machine
    precision even when the answer is within 1e-12 of 1.
    """
    if m < 0 or int(m) != m:
        raise DomainError(f"m must be a non-negative integer, got {m}")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if k < 0 or k > m or int(k) != k:
        raise DomainError(f"k must be an integer in [0, m], got {k}")
    m, k = int(m), int(k)
    if k == 0:
        return 1.0
    if q == 0.0:
        return 0.0
    if q == 1.0:
        return 1.0
    if k > m * q:
        return min(1.0, math.fsum(_pmf(np.arange(k, m + 1), m, q)))
    lower = math.fsum(_pmf(np.arange(0, k), m, q))
    return max(0.0, 1.0 - lower)


def _pmf(i: np.ndarray, m: int, q: float) -> np.ndarray:
    try:
        return binom_dist.pmf(i, m, q)
    except (OverflowError, FloatingPointError):
        # scipy's backend overflows for q near the smallest normal double
        i = i.astype(float)
        logpmf = (gammaln(m + 1.0) - gammaln(i + 1.0) - gammaln(m - i + 1.0)
                  + i * math.log(q) + (m - i) * math.log1p(-q))
        return np.exp(logpmf)


def binom_cdf(m: int, q: float, k: int) -> float:
    """``P(X <= k)`` via the regularised incomplete beta function (independent of :func:`binom_tail`)."""
    if k < 0:
        return 0.0
    if k >= m:
        return 1.0
    return float(bdtr(k, m, q))


def fit_loglog_slope(points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2 or pts.shape[1] != 2:
        raise DomainError("need at least two (x, y) points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("log-log fit needs strictly positive finite values")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    lx_c = lx - lx.mean()
    denom = float(lx_c @ lx_c)
    if denom == 0.0:
        raise DomainError("x values must not all coincide")
    return float(lx_c @ (ly - ly.mean()) / denom)
