"""Attention-market simulation and optimization toolkit.

The heavy lifting lives in the compiled extension; this package re-exports
its public surface.
"""

from ._core import (  # noqa: F401
    AllocationMode,
    AllocationOptions,
    AllocationSolution,
    ControlOptions,
    ControlSolution,
    CostSpec,
    CriticalBetaOptions,
    CriticalBetaReport,
    EquilibriumReport,
    IntegratorConfig,
    IntegratorMethod,
    JacobianMethod,
    MarketParams,
    MarketState,
    QualityLaw,
    StabilityOptions,
    StabilityReport,
    SteadyStateOptions,
    Trajectory,
    WelfareBreakdown,
    HeadEffectComparison,
    basin_probe,
    choice_probabilities,
    classify_stability,
    consumer_surplus,
    costate_drift,
    critical_beta,
    eigenvalues,
    hamiltonian,
    head_effect_comparison,
    integrate,
    jacobian_at,
    jacobian_fd,
    log_sum_exp,
    optimize_allocation,
    path_dependence_experiment,
    PathDependenceReport,
    perturbation_decay_rate,
    platform_profit,
    probability_jacobians,
    producer_surplus,
    quality_best_response,
    quality_drift,
    shares_and_hhi,
    simplex_project,
    solve_fbsm,
    solve_steady_state,
    streamer_profit,
    utilities,
    viewer_drift,
    welfare_breakdown,
    welfare_of,
    __version__,
)
