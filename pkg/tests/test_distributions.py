import numpy as np
import pytest
from hypothesis import given, strategies as st

from rankcontest import DomainError, SkillDistribution, quantile_skill, sample_quantiles


def test_uniform_quantile_map():
    d = SkillDistribution.uniform(0.0, 1.0)
    np.testing.assert_allclose(d.quantile([0.0, 0.25, 1.0]), [1.0, 0.75, 0.0])


def test_quantile_is_zero_beyond_one():
    d = SkillDistribution.uniform(0.5, 2.0)
    assert d.quantile(1.5) == 0.0
    assert quantile_skill(d, 1.0) == 0.5


def test_negative_quantile_rejected():
    with pytest.raises(DomainError):
        SkillDistribution.uniform().quantile(-0.1)


def test_exponential_quantile_and_cdf_are_inverse():
    d = SkillDistribution.exponential(2.0)
    q = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(1.0 - d.cdf(d.quantile(q)), q, atol=1e-14)
    assert np.isinf(d.quantile(0.0))


def test_power_family():
    d = SkillDistribution.power(2.0, 3.0)
    # F(v) = (v/3)^2, so v(q) = 3 sqrt(1 - q)
    np.testing.assert_allclose(d.quantile(0.75), 1.5)


def test_piecewise_linear_and_kinks():
    d = SkillDistribution.piecewise_linear([(0, 2.0), (0.5, 1.0), (1, 0.0)])
    assert d.quantile(0.25) == pytest.approx(1.5)
    np.testing.assert_array_equal(d.kinks(), [0.5])
    assert d.quantile_slope(0.75) == pytest.approx(-2.0)


@pytest.mark.parametrize("bad", [
    lambda: SkillDistribution.uniform(1.0, 1.0),
    lambda: SkillDistribution.uniform(-1.0, 1.0),
    lambda: SkillDistribution.exponential(0.0),
    lambda: SkillDistribution.power(-1.0),
    lambda: SkillDistribution.piecewise_linear([(0, 1), (1, 1)]),
    lambda: SkillDistribution.piecewise_linear([(0.1, 1), (1, 0)]),
    lambda: SkillDistribution.from_dict({"family": "lognormal"}),
])
def test_invalid_distributions(bad):
    with pytest.raises(DomainError):
        bad()


@pytest.mark.parametrize("d", [
    SkillDistribution.uniform(0.2, 1.3),
    SkillDistribution.exponential(0.7),
    SkillDistribution.power(1.5, 2.0),
    SkillDistribution.piecewise_linear([(0, 3.0), (0.2, 1.0), (1, 0.5)]),
])
def test_dict_round_trip(d):
    assert SkillDistribution.from_dict(d.to_dict()) == d


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_quantile_non_increasing(a, b):
    d = SkillDistribution.power(0.8, 1.7)
    lo, hi = min(a, b), max(a, b)
    assert d.quantile(lo) >= d.quantile(hi)


def test_quantile_slope_matches_finite_difference():
    for d in (SkillDistribution.uniform(0, 2), SkillDistribution.exponential(1.3),
              SkillDistribution.power(2.5, 1.0)):
        q = np.linspace(0.1, 0.9, 9)
        h = 1e-6
        fd = (d.quantile(q + h) - d.quantile(q - h)) / (2 * h)
        np.testing.assert_allclose(d.quantile_slope(q), fd, rtol=1e-6)


def test_sampling_is_deterministic():
    a, b = sample_quantiles(7, 100), sample_quantiles(7, 100)
    np.testing.assert_array_equal(a, b)
    assert a.min() >= 0.0 and a.max() < 1.0
    assert not np.array_equal(a, sample_quantiles(8, 100))
