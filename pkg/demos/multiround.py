"""Regret growth of delegated versus in-house learning over a range of horizons."""

from mlcontracts import MultiRoundConfig, fit_loglog_slope, mean_by_T, regret_sweep

T_list = [2 ** k for k in range(10, 15)]
rows = regret_sweep(MultiRoundConfig(T=T_list[0]), T_list, range(5))

for mode in ("delegation", "always", "no-delegation"):
    column = "agent_regret" if mode == "always" else "principal_regret"
    pts = mean_by_T(rows, mode, column)
    series = "  ".join(f"{v:8.1f}" for _, v in pts)
    print(f"{mode:14s} {column:17s} {series}   slope {fit_loglog_slope(pts):.3f}")
