"""Baseline delegation instance: first-best contract, the robust linear slope, and a finite test set."""

import warnings

from mlcontracts import (
    ProblemParams,
    agent_best_response_linear,
    approx_linear_contract,
    first_best,
    hidden_action_gap,
    min_test_size,
    principal_utility_linear,
)

params = ProblemParams(theta=0.0, d=0.01, p=1.0, alpha=1e-4, beta=1.0)

fb = first_best(params)
print(f"first best: n*={fb.n_star:g}, pay {fb.contract.payment:g} for accuracy >= "
      f"{fb.contract.accuracy_threshold:g}, utility {fb.utility:g}")

c = approx_linear_contract(params).c
resp = agent_best_response_linear(c, params)
rep = principal_utility_linear(c, params)
print(f"linear slope {c:g}: agent collects {resp.n:g} samples, principal gets "
      f"{rep.principal_utility:g} ({rep.ratio_to_first_best:.0%} of first best)")

# kappa is negative here, so the test size comes from its small-kappa limit
for eps in (0.1, 0.05):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        m = min_test_size(eps, params, strict=False)
    gap = hidden_action_gap(params, m, eps)
    print(f"eps={eps}: test set of {m} points, agent's best n={gap.best_deviation_n:.3g}, "
          f"utility gap {gap.utility_gap:.2e} ({'ok' if gap.passed else 'too large'})")
