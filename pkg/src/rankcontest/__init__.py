"""Equilibrium solver and Monte-Carlo oracle for parallel rank-order contests."""

__version__ = "0.1.0"

from .distributions import SkillDistribution, quantile_skill, sample_quantiles
from .equilibrium import (
    ChoiceProfile,
    CustomProfile,
    EquilibriumProfile,
    aggregate_supply,
    disclosed_effort,
    effort,
    expected_prize_identity_check,
    interim_utility,
    invert_supply,
    solve_choice_profile,
    verify_equilibrium,
)
from .exceptions import ConfigError, ContestError, DomainError, UnsupportedCaseError
from .objectives import (
    EffortObjective,
    ParticipationObjective,
    SpeSolution,
    best_response_participation,
    effort_utility,
    is_weight_monotone,
    participation_utility,
    rank_density,
    rank_weight,
    solve_common_theta_spe,
    wta_dominance_check,
)
from .prizes import (
    AllocationCurve,
    PrizeStructure,
    allocation_derivative,
    interim_allocation,
    invert_allocation,
    simple_contest,
    single_crossing_dominates,
    xi,
)
from .simulation import (
    EffortSchedule,
    GameConfig,
    SimulationReport,
    best_response_gap,
    run_disclosed_variant,
    run_game,
)
