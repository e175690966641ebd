"""Screening menus when the achievable error is private to the agent."""

import numpy as np

from mlcontracts import (
    PriorBelief,
    ProblemParams,
    fig1_sweep,
    menu_diagnostics,
    solve_menu,
    solve_two_state_closed_form,
    state_learning_contract,
)

params = ProblemParams(theta=0.0, d=0.01, p=1.0, alpha=1e-4, beta=1.0)

prior = PriorBelief((0.05, 0.10, 0.15), (1 / 3, 1 / 3, 1 / 3))
menu = solve_menu(prior, params)
diag = menu_diagnostics(menu, params)
for item, rent in zip(menu.items, diag.info_rent):
    print(f"theta={item.theta:.2f}: n={item.n:7.4f}  t={item.t:.4e}  rent={rent:.2e}")
print(f"menu utility {diag.utility:.6f} vs first best {diag.first_best_benchmark:.6f}")

cf = solve_two_state_closed_form(0.05, 0.15, 0.5, params)
print(f"two states: hard state cut to n={cf.n_hi:.4f}, easy state keeps rent {cf.info_rent:.3e}")

print("gap   rent       distortion  utility")
for row in fig1_sweep(params, 0.05, 0.5, np.arange(0.05, 0.46, 0.1)):
    print(f"{row.delta_theta:.2f}  {row.info_rent:.3e}  {row.distortion:9.4f}  {row.menu_utility:.5f}")

print("agent learns its state while sampling (k=0.1):")
for gap in (0.02, 0.03, 0.1, 0.3):
    choice = state_learning_contract(0.05, 0.05 + gap, 0.5, params, 0.1)
    print(f"  gap {gap:.2f}: {choice.kind:10s} utility {choice.utility:.5f}")
