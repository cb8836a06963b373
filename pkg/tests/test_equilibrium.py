import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from helpers import random_distribution, random_market
from rankcontest import (
    CustomProfile,
    DomainError,
    PrizeStructure,
    SkillDistribution,
    UnsupportedCaseError,
    aggregate_supply,
    disclosed_effort,
    effort,
    expected_prize_identity_check,
    interim_utility,
    invert_supply,
    solve_choice_profile,
    verify_equilibrium,
)
from rankcontest.equilibrium import participation_pmf, shares_against

WTA = PrizeStructure([1.0, 0.0])
WTA2 = PrizeStructure([2.0, 0.0])
UNIFORM = SkillDistribution.uniform()


def test_supply_and_inverse_fixtures():
    two = [WTA, WTA]
    assert float(aggregate_supply(two, 0.5)) == pytest.approx(1.0)
    assert float(invert_supply(two, 0.5)) == pytest.approx(0.75, abs=1e-12)
    assert float(aggregate_supply([WTA, PrizeStructure([0.4, 0.4])], 0.4)) == pytest.approx(1.6)
    assert float(invert_supply([WTA, WTA2], 0.0)) == 2.0


def test_supply_inverse_honors_max_at_jumps():
    curves = [WTA, PrizeStructure([0.4, 0.4])]
    # Q jumps by 1 at x = 0.4; for q in (0.6, 1] the largest x with Q(x) >= q is 0.4
    assert float(invert_supply(curves, 0.9)) == pytest.approx(0.4)
    assert float(invert_supply(curves, 0.3)) == pytest.approx(0.7)


def test_single_contest_share_is_identity():
    prof = solve_choice_profile([PrizeStructure([3.0, 1.0, 0.0])])
    q = np.linspace(0, 1, 11)
    np.testing.assert_allclose(prof.share(0, q), q, atol=1e-12)


def test_identical_contests_split_equally():
    prof = solve_choice_profile([WTA, WTA])
    q = np.linspace(0, 1, 11)
    np.testing.assert_allclose(prof.shares(q), np.stack([q / 2, q / 2], 1), atol=1e-12)


def test_asymmetric_wta_fixture():
    prof = solve_choice_profile([WTA, WTA2])
    q = np.linspace(0, 1, 21)
    phi1 = np.where(q <= 0.5, 0.0, (2 * q - 1) / 3)
    phi2 = np.where(q <= 0.5, q, (1 + q) / 3)
    np.testing.assert_allclose(prof.shares(q), np.stack([phi1, phi2], 1), atol=1e-12)


def test_constant_contests_partition():
    curves = [WTA, PrizeStructure([0.4, 0.4]), PrizeStructure([0.4, 0.4]), PrizeStructure([0.1, 0.1])]
    prof = solve_choice_profile(curves)
    assert prof.x_star == 0.4
    assert prof.top_constant == (1, 2)
    assert prof.q_star == pytest.approx(0.6)
    s = prof.shares(np.array([0.3, 0.6, 1.0]))
    np.testing.assert_allclose(s[:, 0], [0.3, 0.6, 0.6], atol=1e-12)
    np.testing.assert_allclose(s[:, 1], [0.0, 0.0, 0.2], atol=1e-12)
    np.testing.assert_array_equal(s[:, 3], 0.0)


def test_mismatched_field_sizes_rejected():
    with pytest.raises(DomainError):
        solve_choice_profile([WTA, PrizeStructure([1.0, 0.0, 0.0])])


def test_shares_reject_out_of_range_quantiles():
    with pytest.raises(DomainError):
        solve_choice_profile([WTA]).shares(np.array([1.2]))


def test_shares_match_scalar_oracle(rng):
    for _ in range(15):
        curves = random_market(rng, m_max=4, n_max=6)
        ws = [list(c.weights) for c in curves]
        prof = solve_choice_profile(curves)
        for q in (0.0, 0.1, 0.37, 0.8, 1.0):
            np.testing.assert_allclose(prof.shares(np.array(q)), oracles.shares(ws, q), atol=1e-9)


def test_shares_sum_monotone_and_start_at_zero(rng):
    q = np.linspace(0, 1, 1001)
    for _ in range(20):
        prof = solve_choice_profile(random_market(rng))
        s = prof.shares(q)
        assert np.max(np.abs(s.sum(1) - q)) <= 1e-9
        assert np.all(np.diff(s, axis=0) >= -1e-12)
        np.testing.assert_array_equal(s[0], 0.0)


def test_wta_effort_closed_form():
    prof = solve_choice_profile([WTA])
    q = np.linspace(0, 1, 11)
    np.testing.assert_allclose(effort(prof, UNIFORM, 0, q), (1 - q) ** 2 / 2, atol=1e-12)
    assert effort(prof, UNIFORM, 0, 0.5) == pytest.approx(0.125)


def test_constant_contest_effort_is_zero():
    prof = solve_choice_profile([WTA, PrizeStructure([0.3, 0.3])])
    np.testing.assert_array_equal(prof.effort(UNIFORM, 1, np.linspace(0, 1, 5)), 0.0)


def test_effort_vanishes_at_one_and_decreases(rng):
    q = np.linspace(0, 1, 201)
    for _ in range(10):
        curves = random_market(rng, m_max=4, n_max=6)
        dist = random_distribution(rng, ("uniform", "power", "piecewise-linear"))
        prof = solve_choice_profile(curves)
        for j in range(prof.m):
            b = prof.effort(dist, j, q)
            assert abs(b[-1]) <= 1e-12
            assert np.all(b >= -1e-12)
            assert np.all(np.diff(b) <= 1e-10)


def test_effort_matches_integration_by_parts_oracle(rng):
    for _ in range(2):
        curves = random_market(rng, m_max=2, n_max=4, constant_prob=0.0)
        ws = [list(c.weights) for c in curves]
        dist = SkillDistribution.power(1.7, 1.3)
        prof = solve_choice_profile(curves)
        for j in range(len(ws)):
            for q in (0.05, 0.6):
                ref = oracles.effort_parts(ws, lambda t: float(dist.quantile(t)),
                                           lambda t: float(dist.quantile_slope(t)), j, q)
                assert float(prof.effort(dist, j, np.array(q))) == pytest.approx(ref, abs=1e-7)


def test_interim_utility_fixture():
    prof = solve_choice_profile([WTA])
    q = np.linspace(0, 1, 11)
    np.testing.assert_allclose(interim_utility(prof, UNIFORM, 0, q), (1 - q) ** 2 / 2, atol=1e-12)


def test_interim_utility_at_one():
    dist = SkillDistribution.uniform(0.5, 1.5)
    prof = solve_choice_profile([WTA, WTA2])
    for j in range(2):
        end = 0.5 * float(prof.curves[j].value(prof.total_shares()[j]))
        assert float(prof.interim_utility(dist, j, np.array(1.0))) == pytest.approx(end)


def test_interim_utility_routes_agree(rng):
    q = np.linspace(0.01, 1, 23)
    for _ in range(10):
        curves = random_market(rng, m_max=4, n_max=7)
        dist = random_distribution(rng)
        prof = solve_choice_profile(curves)
        for j in range(prof.m):
            a = prof.interim_utility(dist, j, q, route="direct")
            b = prof.interim_utility(dist, j, q, route="parts")
            np.testing.assert_allclose(a, b, atol=1e-8)
            assert np.all(np.diff(a) <= 1e-9)


def test_verify_equilibrium_on_solver_output(rng):
    for _ in range(10):
        assert verify_equilibrium(solve_choice_profile(random_market(rng))) <= 1e-6


def test_verify_single_contest_is_exactly_zero():
    assert verify_equilibrium(solve_choice_profile([PrizeStructure([2.0, 1.0, 0.0])])) == 0.0


def test_verify_detects_swapped_shares():
    eq = solve_choice_profile([WTA, WTA2])
    swapped = CustomProfile([WTA, WTA2], lambda q: eq.shares(q)[..., ::-1])
    assert verify_equilibrium(swapped) > 0.05


def test_verify_detects_shifted_mass():
    eq = solve_choice_profile([WTA, WTA2])
    eps = 0.05

    def moved(q):
        s = eq.shares(q).copy()
        band = np.clip(q - 0.2, 0.0, eps)
        return s + np.stack([band, -band], axis=-1)

    assert verify_equilibrium(CustomProfile([WTA, WTA2], moved)) > eps * 0.5


def test_disclosed_effort_k1_is_zero():
    prof = solve_choice_profile([WTA, WTA2])
    np.testing.assert_array_equal(disclosed_effort(prof, UNIFORM, 1, 1, np.linspace(0, 1, 5)), 0.0)


def test_disclosed_effort_full_field_single_contest_equals_effort():
    prof = solve_choice_profile([PrizeStructure([1.0, 0.6, 0.0])])
    q = np.linspace(0, 1, 11)
    np.testing.assert_allclose(disclosed_effort(prof, UNIFORM, 0, 3, q), prof.effort(UNIFORM, 0, q),
                               atol=1e-12)


def test_disclosed_effort_undefined_for_empty_contest():
    prof = solve_choice_profile([WTA, PrizeStructure([0.3, 0.3]), PrizeStructure([0.1, 0.1])])
    assert prof.total_shares()[2] == 0.0
    with pytest.raises(UnsupportedCaseError):
        disclosed_effort(prof, UNIFORM, 2, 2, 0.5)


def test_disclosed_effort_expectation(rng):
    q = np.linspace(0, 1, 11)
    for _ in range(5):
        curves = random_market(rng, m_max=3, n_max=6, constant_prob=0.0)
        dist = random_distribution(rng, ("uniform", "power"))
        prof = solve_choice_profile(curves)
        for j in range(prof.m):
            p = prof.total_shares()[j]
            if p <= 0:
                continue
            pmf = participation_pmf(prof.n, p)
            mix = sum(pmf[k - 1] * disclosed_effort(prof, dist, j, k, q) for k in range(1, prof.n + 1))
            np.testing.assert_allclose(mix, prof.effort(dist, j, q), atol=1e-8)


def test_expected_prize_identity_fixture():
    assert expected_prize_identity_check([1.0, 0.5, 0.0], 0.6, 0.3) <= 1e-12
    assert expected_prize_identity_check([3.0, 2.0, 0.5, 0.0], 1.0, 0.7) <= 1e-15


def test_expected_prize_identity_domain():
    with pytest.raises(DomainError):
        expected_prize_identity_check([1.0, 0.0], 0.0, 0.0)
    with pytest.raises(DomainError):
        expected_prize_identity_check([1.0, 0.0], 0.5, 0.6)


@given(st.lists(st.floats(0, 3), min_size=2, max_size=8).map(lambda v: sorted(v, reverse=True)),
       st.floats(0.01, 1.0), st.floats(0.0, 1.0))
def test_expected_prize_identity_property(w, p, frac):
    assert expected_prize_identity_check(w, p, p * frac) <= 1e-12


def test_shares_against_matches_full_solve(rng):
    for _ in range(5):
        curves = random_market(rng, m_max=3, n_max=5)
        n = curves[0].n
        own = np.stack([np.sort(rng.random(n))[::-1] for _ in range(4)] + [np.full(n, 0.2)])
        got = shares_against(own, curves, 0.6)
        for s, row in enumerate(own):
            ref = solve_choice_profile([PrizeStructure(row)] + curves).share(0, np.array(0.6))
            assert got[s] == pytest.approx(float(ref), abs=1e-10)
