import numpy as np
import pytest

from mlcontracts.errors import DomainError
from mlcontracts.hidden_state import (
    MenuContract,
    MenuItem,
    PriorBelief,
    cheapest_payments,
    fig1_sweep,
    max_violation,
    menu_diagnostics,
    menu_utility,
    menu_violations,
    mimic_samples,
    solve_menu,
    solve_two_state_closed_form,
)
from mlcontracts.model import ProblemParams, expected_accuracy, first_best_samples
from oracles import grid_best

TWO = PriorBelief((0.05, 0.15), (0.5, 0.5))
THREE = PriorBelief((0.05, 0.10, 0.15), (1 / 3, 1 / 3, 1 / 3))


def random_params(rng):
    return ProblemParams(0.0, float(10 ** rng.uniform(-2.5, 0)), float(rng.uniform(0.5, 2.0)),
                         float(10 ** rng.uniform(-5, -3)), float(rng.uniform(0.5, 2.0)))


# ---------------------------------------------------------------- mimic samples

def test_mimic_same_state(baseline):
    assert mimic_samples(7.3, 0.1, 0.1, baseline) == pytest.approx(7.3, rel=1e-15)


@pytest.mark.parametrize("n_j", [7.106, 7.0714])
def test_mimic_example(baseline, n_j):
    got = mimic_samples(n_j, 0.05, 0.15, baseline)
    assert got == pytest.approx(0.01 * n_j / (0.01 + 0.1 * n_j), rel=1e-14)
    assert got == pytest.approx(0.0988, abs=2e-3)
    assert expected_accuracy(got, baseline, 0.05) == pytest.approx(expected_accuracy(n_j, baseline, 0.15), abs=1e-13)


def test_mimic_unreachable(baseline):
    assert mimic_samples(10.0, 0.5, 0.1, baseline) is None
    with pytest.raises(DomainError):
        mimic_samples(0.0, 0.1, 0.2, baseline)


# ---------------------------------------------------------------- prior

def test_prior_validation():
    with pytest.raises(DomainError):
        PriorBelief((0.2, 0.1), (0.5, 0.5))
    with pytest.raises(DomainError):
        PriorBelief((0.1, 0.1), (0.5, 0.5))
    with pytest.raises(DomainError):
        PriorBelief((0.1, 0.2), (0.5, 0.6))
    with pytest.raises(DomainError):
        PriorBelief((0.1, 1.0), (0.5, 0.5))


def test_zero_weight_rejected(baseline):
    with pytest.raises(DomainError):
        solve_menu(PriorBelief((0.1, 0.2), (1.0, 0.0)), baseline)


# ---------------------------------------------------------------- solver

def test_single_state_is_first_best(baseline):
    menu = solve_menu(PriorBelief((0.1,), (1.0,)), baseline)
    assert menu.converged
    assert menu.n[0] == pytest.approx(10.0, rel=1e-6)
    assert menu.t[0] == pytest.approx(1e-3, rel=1e-6)
    diag = menu_diagnostics(menu, baseline)
    assert abs(diag.info_rent[0]) < 1e-10 and abs(diag.distortion[0]) < 1e-5
    assert diag.utility_gap == pytest.approx(0.0, abs=1e-9)


def test_two_state_matches_closed_form(baseline):
    cf = solve_two_state_closed_form(0.05, 0.15, 0.5, baseline)
    menu = solve_menu(TWO, baseline)
    assert menu.converged
    assert menu.expected_principal_utility == pytest.approx(cf.utility, rel=1e-5)
    assert menu.n == pytest.approx([cf.n_lo, cf.n_hi], rel=1e-5)
    assert menu.t == pytest.approx([cf.t_lo, cf.t_hi], rel=1e-5)


def test_closed_form_values(baseline):
    cf = solve_two_state_closed_form(0.05, 0.15, 0.5, baseline)
    assert cf.n_lo == pytest.approx(10.0, rel=1e-12)
    assert cf.n_hi == pytest.approx(7.071411565568, rel=1e-9)
    assert cf.t_hi == pytest.approx(1e-4 * cf.n_hi, rel=1e-14)
    assert cf.info_rent == pytest.approx(6.9728e-4, rel=1e-4)
    assert cf.distortion == pytest.approx(10.0 - cf.n_hi, rel=1e-12)
    assert cf.utility == pytest.approx(0.8975907167, abs=1e-9)
    assert cf.info_rent == pytest.approx(cf.t_lo - 1e-4 * cf.n_lo, rel=1e-12)


def test_closed_form_domain(baseline):
    with pytest.raises(DomainError):
        solve_two_state_closed_form(0.15, 0.05, 0.5, baseline)
    with pytest.raises(DomainError):
        solve_two_state_closed_form(0.05, 0.15, 1.0, baseline)


def test_closed_form_limits(baseline):
    tiny = solve_two_state_closed_form(0.05, 0.05 + 1e-9, 0.5, baseline)
    assert tiny.n_hi == pytest.approx(10.0, rel=1e-6)
    assert tiny.info_rent < 1e-9
    rare = solve_two_state_closed_form(0.05, 0.15, 1e-9, baseline)
    assert rare.n_hi == pytest.approx(10.0, rel=1e-6)


def test_n3_against_grid(baseline):
    menu = solve_menu(THREE, baseline)
    assert menu.converged
    axis = np.linspace(3.0, 12.0, 60)
    best, n_best, _, _, _ = grid_best(THREE, baseline, [axis] * 3)
    assert menu.expected_principal_utility >= best - 1e-10
    assert menu.expected_principal_utility - best < 1e-4
    assert np.abs(menu.n - n_best).max() <= 2 * (axis[1] - axis[0])
    assert menu.n == pytest.approx([10.0, 7.0724, 5.7757], abs=1e-3)


def test_n2_against_fine_grid(baseline):
    menu = solve_menu(TWO, baseline)
    best, _, _, _, _ = grid_best(TWO, baseline, [np.linspace(5, 12, 701), np.linspace(5, 12, 701)])
    assert best <= menu.expected_principal_utility + 1e-10
    assert menu.expected_principal_utility - best < 1e-7


def test_grid_oracle_payments_agree_with_library(baseline):
    _, n_best, t_best, _, _ = grid_best(THREE, baseline, [np.linspace(3.0, 12.0, 19)] * 3)
    assert cheapest_payments(n_best, THREE.support, baseline) == pytest.approx(t_best, rel=1e-12)


def test_cheapest_payments_feasible_and_tight(baseline):
    ns = [10.0, 7.0, 6.0]
    t = cheapest_payments(ns, THREE.support, baseline)
    pc, ic = menu_violations(ns, t, THREE.support, baseline)
    assert pc.max() <= 1e-15 and ic.max() <= 1e-15
    for i in range(3):
        lowered = t.copy()
        lowered[i] -= 1e-9
        pc, ic = menu_violations(ns, lowered, THREE.support, baseline)
        assert max(pc.max(), ic.max()) > 0


def test_random_instances_feasible():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        N = int(rng.integers(2, 5))
        th = np.sort(rng.choice(np.linspace(0.0, 0.6, 61), size=N, replace=False))
        prior = PriorBelief(tuple(th), tuple(rng.dirichlet(np.ones(N))))
        params = random_params(rng)
        menu = solve_menu(prior, params)
        assert menu.converged
        assert max_violation(menu, params) <= 1e-8
        assert np.all(menu.n > 0) and np.all(menu.t >= 0)
        diag = menu_diagnostics(menu, params)
        assert diag.utility <= diag.first_best_benchmark + 1e-9
        assert menu.expected_principal_utility == pytest.approx(
            menu_utility(menu.n, menu.t, prior, params), abs=1e-12)
        if _all_downward_exist(menu, params):
            assert np.all(np.diff(menu.n) <= 1e-6 * menu.n.max())


def _all_downward_exist(menu, params):
    th, ns = menu.thetas, menu.n
    return all(params.d + (th[j] - th[i]) * ns[j] ** params.p > 0
               for i in range(len(th)) for j in range(i))


def test_closed_form_vs_solver_random():
    rng = np.random.default_rng(99)
    for _ in range(50):
        params = random_params(rng)
        lo = float(rng.uniform(0, 0.4))
        hi = lo + float(rng.uniform(0.005, 0.4))
        nu = float(rng.uniform(0.05, 0.95))
        cf = solve_two_state_closed_form(lo, hi, nu, params)
        menu = solve_menu(PriorBelief((lo, hi), (nu, 1 - nu)), params)
        assert menu.converged
        assert menu.expected_principal_utility == pytest.approx(cf.utility, rel=1e-5)
        n_fb = first_best_samples(params)
        assert abs(cf.n_lo - n_fb) <= 1e-6 * n_fb
        assert cf.n_hi <= n_fb * (1 + 1e-12)
        assert cf.info_rent >= -1e-12


def test_non_monotone_optimum_confirmed_by_grid():
    # the middle state cannot mimic the hard item (accuracy unreachable), so nothing ties n_2 to n_3
    params = ProblemParams(0.0, 0.01, 1.0, 1e-4, 1.0)
    prior = PriorBelief((0.15159741, 0.16486586, 0.39421435), (0.42779636, 0.0700579, 0.50214574))
    menu = solve_menu(prior, params)
    assert menu.converged and menu.n[1] < menu.n[2] - 1.0
    axis = np.linspace(2.0, 12.0, 51)
    best, n_best, _, ns, util = grid_best(prior, params, [axis] * 3)
    assert n_best[1] < n_best[2]
    monotone = np.all(np.diff(ns, axis=1) <= 0, axis=1)
    assert util[monotone].max() < best - 2e-5
    assert menu.expected_principal_utility >= best - 1e-10


def test_min_n_floor(baseline):
    menu = solve_menu(TWO, baseline, min_n=9.0)
    assert menu.converged
    assert np.all(menu.n >= 9.0 - 1e-9)
    free = solve_menu(TWO, baseline)
    assert menu.expected_principal_utility <= free.expected_principal_utility + 1e-12
    with pytest.raises(DomainError):
        solve_menu(TWO, baseline, min_n=-1.0)


def test_diagnostics_two_state(baseline):
    menu = solve_menu(TWO, baseline)
    diag = menu_diagnostics(menu, baseline)
    assert diag.info_rent[0] == pytest.approx(6.9728e-4, rel=1e-4)
    assert diag.info_rent[1] == pytest.approx(0.0, abs=1e-9)
    assert diag.distortion[1] == pytest.approx(10.0 - 7.0714116, rel=1e-5)
    assert diag.utility_gap > 0
    with pytest.raises(DomainError):
        menu_diagnostics(MenuContract([MenuItem(0.1, 1.0, 1.0)], 0.0, True, None), baseline)


def test_fig1_monotone(baseline):
    rows = fig1_sweep(baseline, 0.05, 0.5, np.arange(0.01, 0.46, 0.04))
    rent = [r.info_rent for r in rows]
    dist = [r.distortion for r in rows]
    util = [r.menu_utility for r in rows]
    assert all(b >= a - 1e-10 for a, b in zip(rent, rent[1:]))
    assert all(b >= a - 1e-6 for a, b in zip(dist, dist[1:]))
    assert all(b <= a + 1e-10 for a, b in zip(util, util[1:]))
    assert all(r.menu_utility <= r.first_best_utility + 1e-10 for r in rows)
