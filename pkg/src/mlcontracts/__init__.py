"""Contracts for delegated data collection and model training."""

from .errors import (
    BracketError,
    ConstructionInapplicableError,
    ContractError,
    ConvergenceError,
    DomainError,
    InfeasibleStartError,
    ProtocolError,
    UndefinedBenchmarkError,
)
from .hidden_state import (
    MenuContract,
    PriorBelief,
    TwoStateSolution,
    fig1_sweep,
    menu_diagnostics,
    mimic_samples,
    solve_menu,
    solve_two_state_closed_form,
)
from .model import (
    AgentResponse,
    ProblemParams,
    UtilityReport,
    agent_best_response_linear,
    expected_accuracy,
    principal_utility_linear,
)
from .multiround import (
    MultiRoundConfig,
    RegretReport,
    RoundRecord,
    agent_step,
    classifier_true_error,
    erm_threshold,
    mean_by_T,
    principal_schedule,
    regret_sweep,
    run_delegation,
    run_no_delegation,
)
from .numerics import binom_tail, find_root_bisect, fit_loglog_slope, minimize_scalar, solve_convex
from .quality import QualityChoice, QualityParams, optimal_quality
from .single_round import (
    LinearContract,
    ThresholdContract,
    approx_linear_contract,
    approximation_ratio,
    first_best,
    robust_contract_applicable,
    tightness_instance,
)
from .state_learning import (
    PoolingContract,
    StateLearningContract,
    fig2_sweep,
    pooling_contract,
    separating_contract,
    state_learning_contract,
)
from .test_regime import HiddenActionReport, hidden_action_gap, min_test_size

__version__ = "0.1.0"
