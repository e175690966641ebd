"""Batch runner: ``mlcontracts <subcommand> [--config FILE] [--key value ...]``.

Configuration is an INI file with ``#`` comments. Every key can be
overridden on the command line as ``--key value`` (or ``--section.key
value`` when a key name is ambiguous). Exit codes: 0 success, 2 invalid
configuration, 3 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DomainError, InfeasibleStartError
from .hidden_state import PriorBelief, fig1_sweep, menu_diagnostics, solve_menu, solve_two_state_closed_form
from .model import ProblemParams, agent_best_response_linear, principal_utility_linear
from .multiround import MultiRoundConfig, regret_sweep, run_delegation
from .quality import QualityParams, optimal_quality
from .single_round import (
    approx_linear_contract,
    approximation_bound,
    best_linear_ratio_grid,
    first_best,
    robust_alpha_bound,
    tightness_instance,
)
from .state_learning import fig2_sweep
from .test_regime import hidden_action_gap, kappa, min_test_size

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

DEFAULTS: dict[str, dict[str, str]] = {
    "problem": {"theta": "0", "d": "0.01", "p": "1", "alpha": "1e-4", "beta": "1"},
    "prior": {"thetas": "0.05,0.15", "nus": "0.5,0.5"},
    "linear": {"c": ""},
    "sweep": {"n_instances": "500", "seed": "0"},
    "tightness": {"p_values": "0.5,1,2", "grid_points": "100000"},
    "fig1": {"delta_grid": "0.01:0.45:0.02"},
    "state_learning": {"k_test": "0.1", "dtheta_grid": "0.01:0.45:0.01"},
    "test_regime": {"epsilons": "0.05,0.1", "strict": "false"},
    "multiround": {
        "T_list": "1024,2048,4096,8192,16384,32768,65536",
        "seeds": "0:9:1",
        "T": "4096",
        "seed": "0",
        "k_dist": "3",
        "target_index": "1",
        "theta_star": "0.1",
        "off_errors": "0.4",
        "curve_d": "0.3",
        "curve_p": "0.5",
        "noise": "0.05",
        "test_size": "",
        "x": "0.6666666666666666",
        "sample_cost": "0.01",
        "payment_weight": "1",
        "backend": "synthetic",
        "workers": "1",
    },
    "quality": {"alpha0": "0.5", "b": "2", "targets": "0.5,0.6,0.7,0.8,0.9"},
    "output": {"directory": "."},
}

SUBCOMMANDS = ("first-best", "linear", "approx-sweep", "tightness", "menu", "two-state", "fig1",
               "state-learning", "test-size", "multiround", "no-delegation", "quality")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- config

def load_config(path: str | None, overrides: list[str]) -> dict[str, dict[str, str]]:
    cfg = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                           interpolation=None)
        parser.optionxform = str
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in cfg:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if key not in cfg[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                cfg[section][key] = value.strip()
    if len(overrides) % 2:
        raise ConfigError(f"override flags need values: {overrides}")
    for flag, value in zip(overrides[::2], overrides[1::2]):
        if not flag.startswith("--"):
            raise ConfigError(f"unexpected argument {flag!r}")
        section, key = _resolve_key(cfg, flag[2:])
        cfg[section][key] = value
    return cfg


def _resolve_key(cfg, name: str) -> tuple[str, str]:
    if "." in name:
        section, key = name.split(".", 1)
        if section not in cfg or key not in cfg[section]:
            raise ConfigError(f"unknown key --{name}")
        return section, key
    owners = [sec for sec, vals in cfg.items() if name in vals]
    if not owners:
        raise ConfigError(f"unknown key --{name}")
    if len(owners) > 1:
        raise ConfigError(f"ambiguous key --{name}; use one of " + ", ".join(f"--{s}.{name}" for s in owners))
    return owners[0], name


def _float(cfg, sec, key) -> float:
    try:
        value = float(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} must be a number, got {cfg[sec][key]!r}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"[{sec}] {key} must be finite")
    return value


def _int(cfg, sec, key) -> int:
    try:
        return int(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"[{sec}] {key} must be an integer, got {cfg[sec][key]!r}") from exc


def _bool(cfg, sec, key) -> bool:
    value = cfg[sec][key].strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{sec}] {key} must be a boolean, got {value!r}")


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if not step > 0 or stop < start:
                raise ConfigError(f"bad range {text!r}")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad list {text!r}") from exc


def _list(cfg, sec, key) -> list[float]:
    values = parse_grid(cfg[sec][key])
    if not values:
        raise ConfigError(f"[{sec}] {key} must not be empty")
    return values


def _int_list(cfg, sec, key) -> list[int]:
    values = _list(cfg, sec, key)
    if any(v != int(v) for v in values):
        raise ConfigError(f"[{sec}] {key} must contain integers")
    return [int(v) for v in values]


def problem_params(cfg) -> ProblemParams:
    return ProblemParams(*(_float(cfg, "problem", k) for k in ("theta", "d", "p", "alpha", "beta")))


def prior_belief(cfg) -> PriorBelief:
    return PriorBelief(tuple(_list(cfg, "prior", "thetas")), tuple(_list(cfg, "prior", "nus")))


def multiround_config(cfg, T: int | None = None, seed: int | None = None) -> MultiRoundConfig:
    sec = "multiround"
    off = _list(cfg, sec, "off_errors")
    test_size = cfg[sec]["test_size"].strip()
    return MultiRoundConfig(
        T=_int(cfg, sec, "T") if T is None else T,
        k_dist=_int(cfg, sec, "k_dist"),
        target_index=_int(cfg, sec, "target_index"),
        theta_star=_float(cfg, sec, "theta_star"),
        off_errors=off[0] if len(off) == 1 else tuple(off),
        d=_float(cfg, sec, "curve_d"),
        p=_float(cfg, sec, "curve_p"),
        noise=_float(cfg, sec, "noise"),
        test_size=_int(cfg, sec, "test_size") if test_size else None,
        x=_float(cfg, sec, "x"),
        alpha=_float(cfg, sec, "sample_cost"),
        beta=_float(cfg, sec, "payment_weight"),
        seed=_int(cfg, sec, "seed") if seed is None else seed,
        backend=cfg[sec]["backend"].strip(),
    )


# ---------------------------------------------------------------- output

def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def write_csv(directory: Path, name: str, header: list[str], rows) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


# ---------------------------------------------------------------- subcommands

def cmd_first_best(cfg, out):
    params = problem_params(cfg)
    fb = first_best(params)
    return [write_csv(out, "first_best.csv",
                      ["theta", "d", "p", "alpha", "beta", "n_star", "payment", "threshold", "utility"],
                      [[params.theta, params.d, params.p, params.alpha, params.beta, fb.n_star,
                        fb.contract.payment, fb.contract.accuracy_threshold, fb.utility]])]


def cmd_linear(cfg, out):
    params = problem_params(cfg)
    c = _float(cfg, "linear", "c") if cfg["linear"]["c"].strip() else approx_linear_contract(params).c
    if not c > 0:
        raise ConfigError("[linear] c must be positive")
    resp = agent_best_response_linear(c, params)
    rep = principal_utility_linear(c, params)
    return [write_csv(out, "linear.csv",
                      ["c", "n", "expected_accuracy", "agent_utility", "participates",
                       "principal_utility", "first_best_utility", "ratio"],
                      [[c, resp.n, resp.expected_accuracy, resp.agent_utility, resp.participates,
                        rep.principal_utility, rep.first_best_utility, rep.ratio_to_first_best]])]


def random_robust_instances(count: int, seed: int) -> list[ProblemParams]:
    """Instances drawn so that the robust slope's guarantee applies."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        theta = rng.uniform(0.0, 0.9)
        theta_bar = rng.uniform(theta, 0.99)
        p = float(np.exp(rng.uniform(np.log(0.1), np.log(5.0))))
        d = float(np.exp(rng.uniform(np.log(1e-3), np.log(10.0))))
        beta = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        bound = robust_alpha_bound(d, p, beta, theta_bar)
        alpha = bound * rng.uniform(1e-3, 1.0)
        if not (alpha > 0 and math.isfinite(alpha)) or theta >= theta_bar:
            continue
        out.append(ProblemParams(theta, d, p, alpha, beta))
    return out


def approx_sweep_rows(count: int, seed: int):
    rows = []
    for params in random_robust_instances(count, seed):
        c = approx_linear_contract(params).c
        ratio = principal_utility_linear(c, params).ratio_to_first_best
        rows.append([params.theta, params.p, params.d, params.alpha, params.beta, c, ratio,
                     approximation_bound(params.p)])
    return rows


def cmd_approx_sweep(cfg, out):
    count = _int(cfg, "sweep", "n_instances")
    if count < 1:
        raise ConfigError("[sweep] n_instances must be positive")
    rows = approx_sweep_rows(count, _int(cfg, "sweep", "seed"))
    return [write_csv(out, "approx_sweep.csv", ["theta", "p", "d", "alpha", "beta", "c_star", "ratio", "bound"],
                      rows)]


def cmd_tightness(cfg, out):
    base = problem_params(cfg)
    points = _int(cfg, "tightness", "grid_points")
    rows = []
    for p in _list(cfg, "tightness", "p_values"):
        params = tightness_instance(base.theta, p, base.d, base.beta)
        c, ratio = best_linear_ratio_grid(params, points)
        rows.append([params.theta, p, params.d, params.alpha, params.beta, c, ratio, approximation_bound(p)])
    return [write_csv(out, "tightness.csv", ["theta", "p", "d", "alpha", "beta", "best_c", "grid_ratio", "bound"],
                      rows)]


def cmd_menu(cfg, out):
    params, prior = problem_params(cfg), prior_belief(cfg)
    menu = solve_menu(prior, params)
    if not menu.converged:
        raise ConvergenceError("menu program did not converge")
    diag = menu_diagnostics(menu, params)
    rows = [[it.theta, nu, it.n, it.t, r, dist]
            for it, nu, r, dist in zip(menu.items, prior.weights, diag.info_rent, diag.distortion)]
    path = write_csv(out, "menu.csv", ["theta", "nu", "n", "t", "info_rent", "distortion"], rows)
    summary = write_csv(out, "menu_summary.csv", ["menu_utility", "first_best_utility", "utility_gap"],
                        [[diag.utility, diag.first_best_benchmark, diag.utility_gap]])
    return [path, summary]


def _two_state_prior(cfg):
    prior = prior_belief(cfg)
    if len(prior) != 2:
        raise ConfigError("[prior] must have exactly two states for this subcommand")
    return prior


def cmd_two_state(cfg, out):
    params, prior = problem_params(cfg), _two_state_prior(cfg)
    (lo, hi), (nu, _) = prior.support, prior.weights
    sol = solve_two_state_closed_form(lo, hi, nu, params)
    menu = solve_menu(prior, params)
    if not menu.converged:
        raise ConvergenceError("menu program did not converge")
    return [write_csv(out, "two_state.csv",
                      ["theta_lo", "theta_hi", "nu", "n_lo", "n_hi", "t_lo", "t_hi", "info_rent", "distortion",
                       "utility", "solver_utility"],
                      [[lo, hi, nu, sol.n_lo, sol.n_hi, sol.t_lo, sol.t_hi, sol.info_rent, sol.distortion,
                        sol.utility, menu.expected_principal_utility]])]


def cmd_fig1(cfg, out):
    params, prior = problem_params(cfg), prior_belief(cfg)
    rows = fig1_sweep(params, prior.support[0], prior.weights[0], _list(cfg, "fig1", "delta_grid"))
    return [write_csv(out, "fig1.csv",
                      ["delta_theta", "nu", "info_rent", "distortion", "menu_utility", "first_best_utility"],
                      [[r.delta_theta, r.nu, r.info_rent, r.distortion, r.menu_utility, r.first_best_utility]
                       for r in rows])]


def cmd_state_learning(cfg, out):
    params, prior = problem_params(cfg), prior_belief(cfg)
    rows = fig2_sweep(params, prior.support[0], prior.weights[0], _list(cfg, "state_learning", "dtheta_grid"),
                      _list(cfg, "state_learning", "k_test"))
    return [write_csv(out, "fig2.csv",
                      ["delta_theta", "k_test", "aware_utility", "separating_utility", "pooling_utility",
                       "learning_utility"],
                      [[r.delta_theta, r.k_test, r.aware_utility, r.separating_utility, r.pooling_utility,
                        r.learning_utility] for r in rows])]


def cmd_test_size(cfg, out):
    params = problem_params(cfg)
    strict = _bool(cfg, "test_regime", "strict")
    rows = []
    for eps in _list(cfg, "test_regime", "epsilons"):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            m = min_test_size(eps, params, strict=strict)
        rep = hidden_action_gap(params, m, eps)
        rows.append([eps, kappa(eps, params), m, rep.best_deviation_n, rep.utility_gap, rep.passed])
    return [write_csv(out, "test_size.csv",
                      ["epsilon", "kappa", "m", "best_deviation_n", "utility_gap", "passed"], rows)]


SWEEP_HEADER = ["T", "seed", "mode", "principal_regret", "agent_regret", "s_T", "total_samples"]


def _sweep_rows(rows):
    return [[r.T, r.seed, r.mode, r.principal_regret, r.agent_regret, r.s_T, r.total_samples] for r in rows]


def cmd_multiround(cfg, out):
    base = multiround_config(cfg)
    T_list = _int_list(cfg, "multiround", "T_list")
    seeds = _int_list(cfg, "multiround", "seeds")
    workers = _int(cfg, "multiround", "workers")
    rows = regret_sweep(base, T_list, seeds, ("delegation", "always"), workers)
    trace, _ = run_delegation(base)
    sweep = write_csv(out, "regret_sweep.csv", SWEEP_HEADER, _sweep_rows(rows))
    trace_path = write_csv(out, "trace.csv",
                           ["t", "c_t", "samples_drawn", "source_dist", "deployed_classifier", "true_accuracy",
                            "test_accuracy", "payment"],
                           [[r.t, r.c_t, r.samples_drawn, r.source_dist, r.deployed_classifier, r.true_accuracy,
                             r.test_accuracy, r.payment] for r in trace])
    return [sweep, trace_path]


def cmd_no_delegation(cfg, out):
    base = multiround_config(cfg)
    rows = regret_sweep(base, _int_list(cfg, "multiround", "T_list"), _int_list(cfg, "multiround", "seeds"),
                        ("no-delegation",), _int(cfg, "multiround", "workers"))
    return [write_csv(out, "no_delegation_sweep.csv", SWEEP_HEADER, _sweep_rows(rows))]


def cmd_quality(cfg, out):
    params = problem_params(cfg)
    qp = QualityParams(_float(cfg, "quality", "alpha0"), _float(cfg, "quality", "b"), params.p, params.theta,
                       params.d)
    rows = []
    for target in _list(cfg, "quality", "targets"):
        ch = optimal_quality(qp, target)
        rows.append([target, ch.q_star, ch.n, ch.total_cost, ch.closed_form, ch.closed_form_p])
    return [write_csv(out, "quality.csv",
                      ["target_accuracy", "q_star", "n", "total_cost", "closed_form", "closed_form_p"], rows)]


COMMANDS = {
    "first-best": cmd_first_best,
    "linear": cmd_linear,
    "approx-sweep": cmd_approx_sweep,
    "tightness": cmd_tightness,
    "menu": cmd_menu,
    "two-state": cmd_two_state,
    "fig1": cmd_fig1,
    "state-learning": cmd_state_learning,
    "test-size": cmd_test_size,
    "multiround": cmd_multiround,
    "no-delegation": cmd_no_delegation,
    "quality": cmd_quality,
}


def run_subcommand(name: str, cfg) -> list[Path]:
    return COMMANDS[name](cfg, Path(cfg["output"]["directory"]))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="mlcontracts", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("command", choices=SUBCOMMANDS)
    parser.add_argument("--config", default=None, help="INI configuration file")
    args, extra = parser.parse_known_args(argv)
    try:
        cfg = load_config(args.config, extra)
        paths = run_subcommand(args.command, cfg)
    except (ConvergenceError, InfeasibleStartError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, DomainError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
