"""Menu contracts when the optimal error ``theta`` is private to the agent.

States are indexed easiest first (``theta_1 < ... < theta_N``). A menu offers
one ``(n_i, t_i)`` pair per state; the agent of state ``i`` that picks item
``j`` has to collect ``n_ij`` samples to reach the accuracy of item ``j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleStartError
from .model import ProblemParams, expected_accuracy, first_best_samples, first_best_utility
from .numerics import Constraint, ConvexProgram, SolveReport, find_root_bisect, solve_convex

FEASIBILITY_TOL = 1e-8


@dataclass(frozen=True)
class PriorBelief:
    support: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        support = tuple(float(s) for s in self.support)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)
        if len(support) == 0 or len(support) != len(weights):
            raise DomainError("support and weights must be non-empty and of equal length")
        if any(not 0.0 <= s < 1.0 for s in support):
            raise DomainError("support points must lie in [0, 1)")
        if any(b <= a for a, b in zip(support, support[1:])):
            raise DomainError("support must be strictly increasing")
        if any(w < 0 for w in weights):
            raise DomainError("weights must be non-negative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DomainError(f"weights must sum to 1, got {math.fsum(weights)}")

    def __len__(self):
        return len(self.support)


@dataclass(frozen=True)
class MenuItem:
    theta: float
    n: float
    t: float


@dataclass
class MenuContract:
    items: list[MenuItem]
    expected_principal_utility: float
    converged: bool = True
    prior: PriorBelief | None = None
    report: SolveReport | None = field(default=None, repr=False)

    @property
    def n(self) -> np.ndarray:
        return np.array([it.n for it in self.items])

    @property
    def t(self) -> np.ndarray:
        return np.array([it.t for it in self.items])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([it.theta for it in self.items])


@dataclass(frozen=True)
class TwoStateSolution:
    n_lo: float
    n_hi: float
    t_lo: float
    t_hi: float
    info_rent: float
    distortion: float
    utility: float


@dataclass(frozen=True)
class MenuDiagnostics:
    info_rent: np.ndarray
    distortion: np.ndarray
    utility: float
    first_best_benchmark: float
    utility_gap: float


# ---------------------------------------------------------------- mimicry

def _mimic(n, delta, d, p):
    """``d^(1/p) n / (d + delta n^p)^(1/p)``; ``nan`` where the base is non-positive."""
    base = d + delta * n ** p
    if base <= 0:
        return math.nan
    return d ** (1.0 / p) * n * base ** (-1.0 / p)


def _mimic_d1(n, delta, d, p):
    return d ** ((p + 1.0) / p) * (d + delta * n ** p) ** (-(p + 1.0) / p)


def _mimic_d2(n, delta, d, p):
    base = d + delta * n ** p
    return -(p + 1.0) * delta * d ** ((p + 1.0) / p) * n ** (p - 1.0) * base ** (-(2.0 * p + 1.0) / p)


def mimic_samples(n_j: float, theta_i: float, theta_j: float, params: ProblemParams) -> float | None:
    """Samples a state-``theta_i`` agent needs to match ``a(n_j, theta_j)``; ``None`` if unreachable."""
    if not n_j > 0:
        raise DomainError("n_j must be positive")
    value = _mimic(n_j, theta_j - theta_i, params.d, params.p)
    return None if math.isnan(value) else value


# ---------------------------------------------------------------- feasibility

def menu_violations(ns, ts, thetas, params: ProblemParams) -> tuple[np.ndarray, np.ndarray]:
    """PC violations ``alpha n_i - t_i`` and the IC matrix ``t_j - alpha n_ij - (t_i - alpha n_i)``.

    IC entries are ``-inf`` on the diagonal and where ``n_ij`` does not exist.
    """
    ns, ts = np.asarray(ns, dtype=float), np.asarray(ts, dtype=float)
    a = params.alpha
    pc = a * ns - ts
    N = ns.size
    ic = np.full((N, N), -np.inf)
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            nij = _mimic(ns[j], thetas[j] - thetas[i], params.d, params.p)
            if not math.isnan(nij):
                ic[i, j] = ts[j] - a * nij - (ts[i] - a * ns[i])
    return pc, ic


def max_violation(menu: MenuContract, params: ProblemParams) -> float:
    pc, ic = menu_violations(menu.n, menu.t, menu.thetas, params)
    return float(max(0.0, pc.max(), ic.max()))


def cheapest_payments(ns, thetas, params: ProblemParams, max_rounds: int | None = None) -> np.ndarray | None:
    """Smallest payments making ``ns`` implementable, or ``None`` if no payments do.

    Least fixed point of ``t_i = max(alpha n_i, max_j t_j + alpha (n_i - n_ij))``;
    values still moving after ``N`` sweeps indicate a positive cycle.
    """
    ns = np.asarray(ns, dtype=float)
    N = ns.size
    a = params.alpha
    nij = np.full((N, N), np.nan)
    for i in range(N):
        for j in range(N):
            if i != j:
                nij[i, j] = _mimic(ns[j], thetas[j] - thetas[i], params.d, params.p)
    t = a * ns
    rounds = N + 1 if max_rounds is None else max_rounds
    for _ in range(rounds):
        changed = False
        for i in range(N):
            best = a * ns[i]
            for j in range(N):
                if i != j and not math.isnan(nij[i, j]):
                    best = max(best, t[j] + a * (ns[i] - nij[i, j]))
            if best > t[i] + 1e-15 * max(1.0, abs(best)):
                t[i] = best
                changed = True
        if not changed:
            return t
    return None


# ---------------------------------------------------------------- program (Opt)

def _sech2(z):
    e = math.exp(-2.0 * abs(z))
    return 4.0 * e / (1.0 + e) ** 2


def _build_program(prior: PriorBelief, params: ProblemParams, floor: float) -> tuple[ConvexProgram, float]:
    thetas, nus = prior.support, prior.weights
    N = len(thetas)
    a, b, d, p = params.alpha, params.beta, params.d, params.p
    scale = 4.0 * first_best_samples(params)
    nu = np.asarray(nus)
    th = np.asarray(thetas)

    def objective(x):
        n, t = x[:N], x[N:]
        return -float(np.sum(nu * (1.0 - th - d * n ** (-p) - b * t)))

    def objective_grad(x):
        n = x[:N]
        return np.concatenate([-nu * p * d * n ** (-p - 1.0), nu * b])

    def objective_hess(x):
        n = x[:N]
        H = np.zeros((2 * N, 2 * N))
        H[np.arange(N), np.arange(N)] = nu * p * (p + 1.0) * d * n ** (-p - 2.0)
        return H

    cons = []
    for i in range(N):
        def pc(x, i=i):
            return a * x[i] - x[N + i]

        def pc_grad(x, i=i):
            g = np.zeros(2 * N)
            g[i], g[N + i] = a, -1.0
            return g

        cons.append(Constraint(pc, pc_grad, lambda x: np.zeros((2 * N, 2 * N))))

    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            delta = thetas[j] - thetas[i]
            if delta > 0:
                cons.append(_convex_ic(i, j, delta, N, a, d, p))
            else:
                cons.append(_bounded_ic(i, j, delta, N, a, d, p, scale))

    lower = np.concatenate([np.full(N, floor), np.full(N, -np.inf)])
    return ConvexProgram(objective, cons, lower, objective_grad, objective_hess), scale


def _convex_ic(i, j, delta, N, a, d, p) -> Constraint:
    # i is easier than j: mimicry always possible and the constraint is convex
    def fun(x):
        return x[N + j] - a * _mimic(x[j], delta, d, p) - x[N + i] + a * x[i]

    def grad(x):
        g = np.zeros(2 * N)
        g[j] = -a * _mimic_d1(x[j], delta, d, p)
        g[i] = a
        g[N + j] += 1.0
        g[N + i] -= 1.0
        return g

    def hess(x):
        H = np.zeros((2 * N, 2 * N))
        H[j, j] = -a * _mimic_d2(x[j], delta, d, p)
        return H

    return Constraint(fun, grad, hess)


def _bounded_ic(i, j, delta, N, a, d, p, s) -> Constraint:
    # i is harder than j: compare tanh-squashed sample counts so that an
    # unreachable accuracy (no n_ij) maps continuously to the bound 1
    def parts(x):
        r = (x[N + j] - x[N + i]) / a + x[i]
        m = _mimic(x[j], delta, d, p)
        return r / s, (math.nan if math.isnan(m) else m / s)

    def fun(x):
        u, v = parts(x)
        return math.tanh(u) - (1.0 if math.isnan(v) else math.tanh(v))

    def grad(x):
        u, v = parts(x)
        g = np.zeros(2 * N)
        su = _sech2(u)
        g[N + j] += su / (a * s)
        g[N + i] -= su / (a * s)
        g[i] += su / s
        if not math.isnan(v):
            g[j] -= _sech2(v) * _mimic_d1(x[j], delta, d, p) / s
        return g

    def hess(x):
        u, v = parts(x)
        du = np.zeros(2 * N)
        du[N + j], du[N + i], du[i] = 1.0 / (a * s), -1.0 / (a * s), 1.0 / s
        H = -2.0 * math.tanh(u) * _sech2(u) * np.outer(du, du)
        if not math.isnan(v):
            m1 = _mimic_d1(x[j], delta, d, p) / s
            m2 = _mimic_d2(x[j], delta, d, p) / s
            sv = _sech2(v)
            H[j, j] -= -2.0 * math.tanh(v) * sv * m1 * m1 + sv * m2
        return H

    return Constraint(fun, grad, hess)


def _initial_point(prior: PriorBelief, params: ProblemParams, floor: float, barrier_ok) -> np.ndarray:
    thetas = prior.support
    N = len(thetas)
    n0 = max(first_best_samples(params), floor * 1.001) if floor > 0 else first_best_samples(params)
    ns = np.full(N, n0)
    eps = params.alpha * n0
    for _ in range(60):
        ts = np.empty(N)
        ts[-1] = params.alpha * ns[-1] + eps
        for i in range(N - 2, -1, -1):
            nij = _mimic(ns[i + 1], thetas[i + 1] - thetas[i], params.d, params.p)
            ts[i] = ts[i + 1] + params.alpha * (ns[i] - nij) + eps
        x = np.concatenate([ns, ts])
        if barrier_ok(x):
            return x
        eps *= 0.5
    raise InfeasibleStartError("could not construct a strictly feasible menu")


def solve_menu(prior: PriorBelief, params: ProblemParams, min_n: float | None = None,
               tol: float = 1e-10, max_iter: int = 5000) -> MenuContract:
    """Optimal menu for a finite prior, optionally with every ``n_i >= min_n``."""
    if min_n is not None and min_n < 0:
        raise DomainError("min_n must be non-negative")
    if any(w == 0.0 for w in prior.weights):
        raise DomainError("every state needs positive prior weight")
    floor = 0.0 if min_n is None else float(min_n)
    N = len(prior)
    prog, _ = _build_program(prior, params, floor)

    def strictly_feasible(x):
        if np.any(x[:N] <= floor):
            return False
        return all(c.fun(x) < 0 for c in prog.constraints)

    x0 = _initial_point(prior, params, floor, strictly_feasible)
    report = solve_convex(prog, x0, tol=tol, max_iter=max_iter)
    ns, ts = report.x[:N], report.x[N:]
    items = [MenuItem(th, float(n), float(t)) for th, n, t in zip(prior.support, ns, ts)]
    menu = MenuContract(items, -report.objective, report.converged, prior, report)
    if menu.converged and max_violation(menu, params) > FEASIBILITY_TOL:
        menu.converged = False
    return menu


def menu_utility(ns, ts, prior: PriorBelief, params: ProblemParams) -> float:
    return math.fsum(
        nu * (expected_accuracy(n, params, th) - params.beta * t)
        for th, nu, n, t in zip(prior.support, prior.weights, ns, ts))


# ---------------------------------------------------------------- two states

def two_state_stationarity(n: float, delta: float, nu: float, params: ProblemParams) -> float:
    """Derivative condition for the hard state's samples; increasing in ``n``."""
    d, p = params.d, params.p
    ab = params.alpha * params.beta
    slope = (d / (d + delta * n ** p)) ** ((p + 1.0) / p)
    return -p * d * n ** (-p - 1.0) + (ab / (1.0 - nu)) * (1.0 - nu * slope)


def solve_two_state_closed_form(theta_lo: float, theta_hi: float, nu: float,
                                params: ProblemParams) -> TwoStateSolution:
    """Closed-form optimum for two states; ``nu`` is the weight of the easy state."""
    if not theta_lo < theta_hi:
        raise DomainError("need theta_lo < theta_hi")
    if not 0.0 < nu < 1.0:
        raise DomainError("nu must lie in (0, 1)")
    a, d, p = params.alpha, params.d, params.p
    delta = theta_hi - theta_lo
    n_lo = first_best_samples(params)
    f = lambda n: two_state_stationarity(n, delta, nu, params)
    if f(n_lo) <= 0.0:
        n_hi = n_lo
    else:
        lo = n_lo
        while f(lo) >= 0.0:
            lo *= 0.5
            if lo < 1e-300:
                raise ConvergenceError("failed to bracket the hard-state stationarity root")
        n_hi = find_root_bisect(f, lo, n_lo, tol=1e-14 * n_lo)
    t_hi = a * n_hi
    rent = a * n_hi * (1.0 - (d / (d + delta * n_hi ** p)) ** (1.0 / p))
    t_lo = a * n_lo + rent
    utility = (nu * (expected_accuracy(n_lo, params, theta_lo) - params.beta * t_lo)
               + (1.0 - nu) * (expected_accuracy(n_hi, params, theta_hi) - params.beta * t_hi))
    return TwoStateSolution(n_lo, n_hi, t_lo, t_hi, rent, n_lo - n_hi, utility)


# ---------------------------------------------------------------- diagnostics

def menu_diagnostics(menu: MenuContract, params: ProblemParams) -> MenuDiagnostics:
    if menu.prior is None:
        raise DomainError("diagnostics need the prior the menu was built for")
    ns, ts = menu.n, menu.t
    rent = ts - params.alpha * ns
    distortion = first_best_samples(params) - ns
    weights = menu.prior.weights
    benchmark = math.fsum(w * first_best_utility(params, th) for w, th in zip(weights, menu.thetas))
    utility = menu.expected_principal_utility
    return MenuDiagnostics(rent, distortion, utility, benchmark, benchmark - utility)


@dataclass(frozen=True)
class Fig1Row:
    delta_theta: float
    nu: float
    info_rent: float
    distortion: float
    menu_utility: float
    first_best_utility: float


def fig1_sweep(params: ProblemParams, theta_lo: float, nu: float, deltas) -> list[Fig1Row]:
    """Two-state menus solved by the barrier program along a grid of state gaps."""
    rows = []
    for delta in deltas:
        prior = PriorBelief((theta_lo, theta_lo + float(delta)), (nu, 1.0 - nu))
        menu = solve_menu(prior, params)
        if not menu.converged:
            raise ConvergenceError(f"menu program did not converge at delta={delta}")
        diag = menu_diagnostics(menu, params)
        rows.append(Fig1Row(float(delta), nu, float(diag.info_rent[0]), float(diag.distortion[-1]),
                            diag.utility, diag.first_best_benchmark))
    return rows
