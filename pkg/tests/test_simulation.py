import numpy as np
import pytest

from rankcontest import (
    DomainError,
    EffortObjective,
    EffortSchedule,
    GameConfig,
    ParticipationObjective,
    PrizeStructure,
    SkillDistribution,
    best_response_gap,
    run_disclosed_variant,
    run_game,
    solve_choice_profile,
)
from rankcontest.equilibrium import CustomProfile
from rankcontest.simulation import (
    _ranks,
    analytic_interim_bins,
    default_effort_grid,
    play_block,
)

UNIFORM = SkillDistribution.uniform()
WTA = PrizeStructure([1.0, 0.0])
TOTAL2 = EffortObjective((1.0, 1.0))


def _two_wta(replications=20_000, seed=0, objectives=None):
    structures = (WTA, PrizeStructure([2.0, 0.0]))
    objectives = objectives or (ParticipationObjective(0.6), ParticipationObjective(0.6))
    config = GameConfig(2, UNIFORM, structures, objectives, replications=replications, seed=seed)
    return config, solve_choice_profile(list(structures))


def test_single_wta_total_effort_in_ci():
    config = GameConfig(2, UNIFORM, (WTA,), (TOTAL2,), replications=50_000, seed=1)
    rep = run_game(config, solve_choice_profile([WTA]))
    assert abs(rep.designer_utility[0] - 1 / 3) <= rep.designer_ci[0]
    assert rep.participation[0] == 2.0


def test_participation_matches_closed_form():
    config, prof = _two_wta(seed=2)
    rep = run_game(config, prof)
    expected = [2 * (2 * 0.6 - 1) / 3, 2 * 1.6 / 3]
    assert np.all(np.abs(rep.designer_utility - expected) <= rep.designer_ci)
    # every contestant enters somewhere
    assert rep.participation.sum() == pytest.approx(2.0)


def test_identical_contests_attract_equal_counts():
    s = PrizeStructure([0.7, 0.2, 0.1])
    config = GameConfig(3, UNIFORM, (s, s), (EffortObjective((1, 1, 1)),) * 2,
                        replications=40_000, seed=3)
    rep = run_game(config, solve_choice_profile([s, s]))
    diff = abs(rep.participation[0] - rep.participation[1])
    assert diff <= rep.participation_ci[0] + rep.participation_ci[1]


def test_interim_utility_bins_match_analytic():
    config, prof = _two_wta(replications=40_000, seed=4)
    rep = run_game(config, prof)
    ref = analytic_interim_bins(prof, UNIFORM, config.interim_bins)
    assert np.all(np.abs(rep.interim_utility - ref) <= rep.interim_ci + 1e-3)


def test_play_block_conservation_and_ranks():
    config, prof = _two_wta()
    sched = EffortSchedule(prof, UNIFORM)
    log = play_block(config, sched, np.random.default_rng(0), 500)
    assert np.all(log["counts"].sum(axis=1) == 2)
    for r in range(500):
        for j in range(2):
            inside = np.flatnonzero(log["contest"][r] == j)
            assert sorted(log["rank"][r, inside]) == list(range(1, inside.size + 1))
            paid = log["prize"][r, inside].sum()
            assert paid == pytest.approx(config.structures[j].weights[: inside.size].sum())
    np.testing.assert_allclose(log["utility"], log["skill"] * log["prize"] - log["effort"])


def test_ties_go_to_skill_then_index():
    contest = np.array([0, 0, 0, 0])
    effort = np.array([0.5, 0.5, 0.5, 0.9])
    q = np.array([0.4, 0.2, 0.4, 0.9])
    np.testing.assert_array_equal(_ranks(contest, effort, q), [3, 2, 4, 1])


def test_same_seed_same_report_any_worker_count():
    config, prof = _two_wta(replications=30_000, seed=9)
    sched = EffortSchedule(prof, UNIFORM)
    a = run_game(config, prof, sched, workers=1).to_dict()
    b = run_game(config, prof, sched, workers=4).to_dict()
    c = run_game(config, prof, sched, workers=1).to_dict()
    assert a == b == c


def test_different_seeds_differ():
    config, prof = _two_wta(replications=5_000, seed=1)
    other, _ = _two_wta(replications=5_000, seed=2)
    assert run_game(config, prof).to_dict() != run_game(other, prof).to_dict()


def test_confidence_interval_shrinks_with_replications():
    config, prof = _two_wta(replications=20_000, seed=5)
    bigger, _ = _two_wta(replications=40_000, seed=5)
    a, b = run_game(config, prof), run_game(bigger, prof)
    np.testing.assert_allclose(b.designer_ci / a.designer_ci, 1 / np.sqrt(2), rtol=0.05)


def test_gap_small_in_equilibrium():
    config, prof = _two_wta(seed=6)
    gap = best_response_gap(config, prof, samples=50_000)
    assert gap.epsilon <= 0.01


def test_gap_zero_without_prizes():
    zero = PrizeStructure([0.0, 0.0])
    config = GameConfig(2, UNIFORM, (zero,), (TOTAL2,))
    gap = best_response_gap(config, solve_choice_profile([zero]), samples=1_000)
    assert gap.epsilon == 0.0


def test_gap_detects_non_equilibrium_choice():
    # everybody crowds into the poorer contest
    structures = (WTA, PrizeStructure([2.0, 0.0]))
    prof = CustomProfile(list(structures), lambda q: np.stack([q, 0 * q], axis=-1))
    config = GameConfig(2, UNIFORM, structures, (TOTAL2, TOTAL2), seed=7)
    assert best_response_gap(config, prof, samples=20_000).epsilon > 0.1


def test_disclosed_variant_single_contestant():
    s = PrizeStructure([1.0])
    config = GameConfig(1, UNIFORM, (s,), (EffortObjective((1.0,)),), replications=1_000)
    prof = solve_choice_profile([s])
    rep = run_disclosed_variant(config, prof)
    base = run_game(config, prof)
    assert rep.designer_utility[0] == pytest.approx(0.0, abs=1e-12)
    assert base.designer_utility[0] == pytest.approx(0.0, abs=1e-12)


def test_disclosed_variant_preserves_total_effort():
    config = GameConfig(2, UNIFORM, (WTA, PrizeStructure([0.6, 0.1])), (TOTAL2, TOTAL2),
                        replications=60_000, seed=8)
    prof = solve_choice_profile(list(config.structures))
    a, b = run_game(config, prof), run_disclosed_variant(config, prof)
    assert np.all(np.abs(a.designer_utility - b.designer_utility)
                  <= a.designer_ci + b.designer_ci)


def test_default_effort_grid():
    g = default_effort_grid(2.0, extra=(0.3,))
    assert g[0] == 0.0 and g[-1] == 2.0 and 0.3 in g
    assert np.all(np.diff(g) > 0)
    assert default_effort_grid(0.0).tolist() == [0.0]


def test_config_validation():
    with pytest.raises(DomainError):
        GameConfig(3, UNIFORM, (WTA,), (TOTAL2,))
    with pytest.raises(DomainError):
        GameConfig(2, UNIFORM, (WTA,), (TOTAL2, TOTAL2))
    with pytest.raises(DomainError):
        GameConfig(2, UNIFORM, (WTA,), (TOTAL2,), replications=0)
    config, prof = _two_wta()
    with pytest.raises(DomainError):
        run_game(GameConfig(2, UNIFORM, (WTA,), (TOTAL2,)), prof)
