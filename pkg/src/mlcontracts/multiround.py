"""Repeated delegation with linear contracts.

Each round the principal announces a slope ``c_t``; the agent may collect
samples and hands over a classifier; the principal deploys a classifier,
observes its test accuracy and pays ``c_t * max(0, test accuracy)``.

The agent runs a budgeted phased-exploration strategy: it keeps its
cumulative sample count at ``floor(s_t^(2/3))`` with ``s_t = sum c_u``, treats
sampling rounds as exploration rounds grouped into phases of length
``2^(j-1)``, and exploits the best classifier of the previous phase
otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, ProtocolError

TRIVIAL = "h0"


@dataclass(frozen=True)
class MultiRoundConfig:
    T: int
    k_dist: int = 3
    target_index: int = 1
    theta_star: float = 0.1
    off_errors: float | tuple[float, ...] = 0.4
    d: float = 0.3
    p: float = 0.5
    noise: float = 0.05
    test_size: int | None = None
    x: float = 2.0 / 3.0
    alpha: float = 0.01
    beta: float = 1.0
    seed: int = 0
    backend: str = "synthetic"

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise DomainError("T must be a positive integer")
        if self.k_dist < 1 or not 1 <= self.target_index <= self.k_dist:
            raise DomainError("need 1 <= target_index <= k_dist")
        if not 0.0 <= self.theta_star < 0.5:
            raise DomainError("theta_star must lie in [0, 0.5)")
        off = self.off_error_list()
        if any(not self.theta_star < e <= 0.5 for e in off):
            raise DomainError("off-target errors must lie in (theta_star, 0.5]")
        if not (self.d > 0 and self.p > 0 and self.alpha >= 0 and self.beta > 0):
            raise DomainError("need d, p, beta > 0 and alpha >= 0")
        if self.noise < 0 or self.noise > 0.5:
            raise DomainError("noise half-width must lie in [0, 0.5]")
        if self.test_size is not None and self.test_size < 1:
            raise DomainError("test_size must be a positive integer")
        if not 0.0 < self.x < 1.0:
            raise DomainError("x must lie in (0, 1)")
        if self.backend not in ("synthetic", "halfspace"):
            raise DomainError(f"unknown backend {self.backend!r}")

    def off_error_list(self) -> list[float]:
        """Error floors of the ``k_dist - 1`` non-target sources, in source order."""
        if isinstance(self.off_errors, (int, float)):
            return [float(self.off_errors)] * (self.k_dist - 1)
        off = [float(e) for e in self.off_errors]
        if len(off) != self.k_dist - 1:
            raise DomainError(f"expected {self.k_dist - 1} off-target errors, got {len(off)}")
        return off

    def source_error_floor(self, source: int) -> float:
        if not 1 <= source <= self.k_dist:
            raise DomainError(f"source index {source} outside 1..{self.k_dist}")
        off = self.off_error_list()
        return off[source - 1] if source < self.target_index else off[source - 2]


@dataclass(frozen=True)
class RoundRecord:
    t: int
    c_t: float
    samples_drawn: int
    source_dist: int | None
    provided_classifier: str
    deployed_classifier: str
    true_accuracy: float
    test_accuracy: float
    payment: float


@dataclass
class RegretReport:
    principal_H_regret: float
    agent_H_regret: float
    s_T: float
    total_samples: int
    principal_curve: np.ndarray = field(repr=False)
    agent_curve: np.ndarray = field(repr=False)


# ---------------------------------------------------------------- helpers

def floor_two_thirds(s) -> int:
    """Exact ``floor(s^(2/3))`` for ``s >= 0`` (integers checked with integer cubes)."""
    if s < 0:
        raise DomainError("s must be non-negative")
    if s == 0:
        return 0
    k = math.floor(float(s) ** (2.0 / 3.0))
    if float(s).is_integer():
        s2 = int(s) ** 2
        while k ** 3 > s2:
            k -= 1
        while (k + 1) ** 3 <= s2:
            k += 1
    else:
        s2 = float(s) * float(s)
        while k > 0 and k ** 3 > s2:
            k -= 1
        while (k + 1) ** 3 <= s2:
            k += 1
    return k


def classifier_id(source: int, count: int) -> str:
    return f"D{source}@{count}"


def classifier_true_error(source_dist: int | None, train_count: int, config: MultiRoundConfig) -> float:
    """Error on the target distribution of the model trained on ``train_count`` points of ``source_dist``."""
    if train_count < 0:
        raise DomainError("train_count must be non-negative")
    if source_dist is None:
        return 0.5
    if not 1 <= source_dist <= config.k_dist:
        raise DomainError(f"source index {source_dist} outside 1..{config.k_dist}")
    if source_dist != config.target_index:
        return config.source_error_floor(source_dist)
    if train_count == 0:
        return 0.5
    return min(0.5, config.theta_star + config.d * train_count ** (-config.p))


# ---------------------------------------------------------------- halfspace backend

def erm_threshold(samples: Sequence[tuple[float, int]]) -> tuple[str, float, float]:
    """Empirical risk minimiser over ``1{x >= thr}`` and ``1{x <= thr}``.

    Returns ``(direction, threshold, empirical_error)``; ties go to the
    smallest threshold, then to ``">="``.
    """
    if len(samples) == 0:
        raise DomainError("ERM needs at least one sample")
    arr = np.asarray(samples, dtype=float)
    order = np.argsort(arr[:, 0], kind="stable")
    xs, ys = arr[order, 0], arr[order, 1]
    n = xs.size
    ones_before = np.concatenate([[0.0], np.cumsum(ys)])
    zeros_before = np.arange(n + 1) - ones_before
    total_ones = ones_before[-1]
    total_zeros = n - total_ones
    # cut k: indices < k on one side; only cuts between distinct x values are realisable
    valid = np.ones(n + 1, dtype=bool)
    valid[1:n] = xs[1:] > xs[:-1]
    err_ge = ones_before + (total_zeros - zeros_before)
    err_le = zeros_before + (total_ones - ones_before)
    above = max(1.0, math.nextafter(float(xs[-1]), math.inf))
    below = min(0.0, math.nextafter(float(xs[0]), -math.inf))
    thr_ge = np.concatenate([[min(0.0, xs[0])], xs[1:], [above]])
    thr_le = np.concatenate([[below], xs[:-1], [max(1.0, xs[-1])]])
    candidates = []
    for k in np.flatnonzero(valid):
        candidates.append((err_ge[k], float(thr_ge[k]), 0))
        candidates.append((err_le[k], float(thr_le[k]), 1))
    err, thr, direction = min(candidates)
    return (">=" if direction == 0 else "<="), thr, float(err) / n


def halfspace_true_error(direction: str, threshold: float, target: float, flip: float) -> float:
    """Population error of a threshold classifier against ``1{x >= target}`` with label flips."""
    thr = min(1.0, max(0.0, threshold))
    disagreement = abs(thr - target)
    if direction == "<=":
        disagreement = 1.0 - disagreement
    return flip + (1.0 - 2.0 * flip) * disagreement


def source_threshold(source: int, config: MultiRoundConfig) -> float:
    return source / (config.k_dist + 1.0)


class _HalfspaceData:
    """Per-source labelled samples; the target source has label-flip rate ``theta_star``."""

    def __init__(self, config: MultiRoundConfig):
        self.config = config
        self.data: dict[int, list[tuple[float, int]]] = {j: [] for j in range(1, config.k_dist + 1)}
        self.cache: dict[tuple[int, int], float] = {}

    def draw(self, source: int, count: int, rng: np.random.Generator):
        xs = rng.random(count)
        flips = rng.random(count) < self.config.theta_star
        labels = (xs >= source_threshold(source, self.config)) ^ flips
        self.data[source].extend(zip(xs.tolist(), labels.astype(int).tolist()))

    def error(self, source: int | None, count: int) -> float:
        if source is None or count == 0:
            return 0.5
        key = (source, count)
        if key not in self.cache:
            direction, thr, _ = erm_threshold(self.data[source][:count])
            target = source_threshold(self.config.target_index, self.config)
            self.cache[key] = halfspace_true_error(direction, thr, target, self.config.theta_star)
        return self.cache[key]


# ---------------------------------------------------------------- agent

@dataclass
class AgentAction:
    samples: int
    source: int | None
    classifier: tuple[int, int] | None
    exploring: bool


class AgentState:
    """Bookkeeping for the phased-exploration agent."""

    def __init__(self, k_dist: int, rng: np.random.Generator):
        self.k = k_dist
        self.rng = rng
        self.s = 0.0
        self.s_int = 0
        self.integral = True
        self.total_samples = 0
        self.counts = [0] * k_dist
        self.sampling_rounds = 0
        self.phase = 0
        self.candidates: list[tuple[int, int]] = []
        self.scores: list[float] = []
        self.order: list[int] = []
        self.phase_best: list[tuple[int, int] | None] = [None]
        self.last_sample_phase = 0
        self.pending: tuple[float, int | None] | None = None
        self.phase_history: list[int] = []

    def _cumulative_target(self) -> int:
        return floor_two_thirds(self.s_int if self.integral else self.s)

    def _start_phase(self):
        if self.phase > 0:
            self.phase_best.append(self._best_candidate())
        self.phase += 1
        self.candidates = [(i + 1, self.counts[i]) for i in range(self.k)]
        self.scores = [0.0] * self.k
        self.order = []

    def _best_candidate(self) -> tuple[int, int]:
        best = max(range(self.k), key=lambda i: (self.scores[i], -i))
        return self.candidates[best]

    def exploit_choice(self) -> tuple[int, int] | None:
        return self.phase_best[max(0, self.last_sample_phase - 1)]

    def observe(self, payment: float | None):
        if self.pending is None:
            return
        c, slot = self.pending
        self.pending = None
        if payment is None:
            raise ProtocolError("feedback missing for a round with a positive contract")
        if slot is not None:
            self.scores[slot] += payment / c

    def step(self, c: float) -> AgentAction:
        if self.pending is not None:
            raise ProtocolError("previous round's feedback was never delivered")
        if c < 0:
            raise DomainError("contract slopes must be non-negative")
        self.s += c
        if self.integral and float(c).is_integer():
            self.s_int += int(c)
        else:
            self.integral = False
        target = self._cumulative_target()
        draw = max(0, target - self.total_samples)
        if draw > 0:
            self.sampling_rounds += 1
            phase = self.sampling_rounds.bit_length()
            if phase != self.phase:
                self._start_phase()
            self.phase_history.append(phase)
            # each pick is uniform over candidates; drawing them in shuffled
            # blocks of k keeps per-candidate exploration counts within one
            if not self.order:
                self.order = self.rng.permutation(self.k).tolist()
            slot = self.order.pop()
            classifier = self.candidates[slot]
            source = int(self.rng.integers(self.k)) + 1
            self.counts[source - 1] += draw
            self.total_samples += draw
            self.last_sample_phase = phase
            self.pending = (c, slot)
            return AgentAction(draw, source, classifier, True)
        if c > 0:
            self.pending = (c, None)
        return AgentAction(0, None, self.exploit_choice(), False)


def agent_step(state: AgentState, c_t: float, last_feedback: float | None) -> AgentAction:
    """Deliver the previous round's payment, then act for a round with slope ``c_t``."""
    state.observe(last_feedback)
    return state.step(c_t)


# ---------------------------------------------------------------- principal

def contracting_rounds(T: int, x: float) -> int:
    if not 0.0 < x < 1.0:
        raise DomainError("x must lie in (0, 1)")
    N = math.ceil(T ** (1.0 / (2.0 - x)) - 1e-9)
    return max(1, min(T, N))


def principal_schedule(T: int, x: float) -> tuple[np.ndarray, int]:
    """``c_t = 1`` for ``t <= N = ceil(T^(1/(2-x)))`` and 0 afterwards."""
    N = contracting_rounds(T, x)
    c = np.zeros(T)
    c[:N] = 1.0
    return c, N


# ---------------------------------------------------------------- simulation

def _streams(seed: int):
    env, agent, principal = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(env), np.random.default_rng(agent), np.random.default_rng(principal)


def _error_fn(config: MultiRoundConfig, halfspace: _HalfspaceData | None):
    if halfspace is not None:
        return lambda cl: 0.5 if cl is None else halfspace.error(cl[0], cl[1])
    return lambda cl: 0.5 if cl is None else classifier_true_error(cl[0], cl[1], config)


def _name(cl) -> str:
    return TRIVIAL if cl is None else classifier_id(*cl)


def run_delegation(config: MultiRoundConfig, contracts=None, record: bool = True
                   ) -> tuple[list[RoundRecord], RegretReport]:
    """Simulate the protocol; ``contracts`` defaults to :func:`principal_schedule`.

    Whenever ``c_t > 0`` the agent's classifier is deployed. In rounds with
    ``c_t = 0`` the principal redeploys a uniformly drawn classifier from
    those deployed in earlier contracting rounds.
    """
    T = config.T
    if contracts is None:
        contracts, _ = principal_schedule(T, config.x)
    contracts = np.asarray(contracts, dtype=float)
    if contracts.shape != (T,) or np.any(contracts < 0):
        raise DomainError("need T non-negative contract slopes")
    env_rng, agent_rng, principal_rng = _streams(config.seed)
    noise = env_rng.uniform(-config.noise, config.noise, size=T) if config.test_size is None else None
    halfspace = _HalfspaceData(config) if config.backend == "halfspace" else None
    error_of = _error_fn(config, halfspace)
    agent = AgentState(config.k_dist, agent_rng)
    bench = 1.0 - config.theta_star
    pool: list = []
    trace: list[RoundRecord] = []
    p_curve = np.empty(T)
    a_curve = np.empty(T)
    p_total = a_total = 0.0
    feedback = None
    for t in range(T):
        c = float(contracts[t])
        action = agent_step(agent, c, feedback)
        if halfspace is not None and action.samples:
            halfspace.draw(action.source, action.samples, agent_rng)
        if c > 0:
            deployed = action.classifier
            pool.append(deployed)
        elif pool:
            deployed = pool[int(principal_rng.integers(len(pool)))]
        else:
            deployed = None
        loss = error_of(deployed)
        if noise is not None:
            test_acc = 1.0 - loss + noise[t]
        else:
            test_acc = env_rng.binomial(config.test_size, 1.0 - loss) / config.test_size
        payment = c * max(0.0, test_acc)
        feedback = payment if c > 0 else None
        p_total += loss - config.theta_star + config.beta * payment
        a_total += c * bench - (payment - config.alpha * action.samples)
        p_curve[t] = p_total
        a_curve[t] = a_total
        if record:
            trace.append(RoundRecord(t + 1, c, action.samples, action.source, _name(action.classifier),
                                     _name(deployed), 1.0 - loss, test_acc, payment))
    agent.observe(feedback)
    report = RegretReport(p_total, a_total, agent.s, agent.total_samples, p_curve, a_curve)
    return trace, report


def run_no_delegation(config: MultiRoundConfig) -> RegretReport:
    """The principal runs the agent's algorithm itself with ``c_t = 1`` and bears the sampling cost."""
    T = config.T
    env_rng, agent_rng, _ = _streams(config.seed)
    noise = env_rng.uniform(-config.noise, config.noise, size=T) if config.test_size is None else None
    halfspace = _HalfspaceData(config) if config.backend == "halfspace" else None
    error_of = _error_fn(config, halfspace)
    learner = AgentState(config.k_dist, agent_rng)
    curve = np.empty(T)
    total = 0.0
    feedback = None
    for t in range(T):
        action = agent_step(learner, 1.0, feedback)
        if halfspace is not None and action.samples:
            halfspace.draw(action.source, action.samples, agent_rng)
        loss = error_of(action.classifier)
        if noise is not None:
            feedback = 1.0 - loss + noise[t]
        else:
            feedback = env_rng.binomial(config.test_size, 1.0 - loss) / config.test_size
        feedback = max(0.0, feedback)
        total += loss - config.theta_star + config.alpha * action.samples
        curve[t] = total
    learner.observe(feedback)
    return RegretReport(total, math.nan, learner.s, learner.total_samples, curve, np.full(T, math.nan))


# ---------------------------------------------------------------- sweeps

MODES = ("delegation", "always", "no-delegation")


@dataclass(frozen=True)
class SweepRow:
    T: int
    seed: int
    mode: str
    principal_regret: float
    agent_regret: float
    s_T: float
    total_samples: int


def _sweep_point(args) -> SweepRow:
    config, mode = args
    if mode == "delegation":
        _, rep = run_delegation(config, record=False)
    elif mode == "always":
        _, rep = run_delegation(config, np.ones(config.T), record=False)
    elif mode == "no-delegation":
        rep = run_no_delegation(config)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return SweepRow(config.T, config.seed, mode, rep.principal_H_regret, rep.agent_H_regret,
                    rep.s_T, rep.total_samples)


def regret_sweep(base: MultiRoundConfig, T_list, seeds, modes=MODES, workers: int = 1) -> list[SweepRow]:
    """Run every ``(T, seed, mode)`` point; rows come back sorted by ``(T, seed, mode)``."""
    jobs = [(replace(base, T=int(T), seed=int(s)), m) for T in T_list for s in seeds for m in modes]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, jobs, chunksize=1))
    else:
        rows = [_sweep_point(j) for j in jobs]
    return sorted(rows, key=lambda r: (r.T, r.seed, MODES.index(r.mode) if r.mode in MODES else 99))


def mean_by_T(rows: list[SweepRow], mode: str, column: str) -> list[tuple[float, float]]:
    groups: dict[int, list[float]] = {}
    for r in rows:
        if r.mode == mode:
            groups.setdefault(r.T, []).append(getattr(r, column))
    return [(float(T), float(np.mean(v))) for T, v in sorted(groups.items())]
