import numpy as np

from rankcontest import PrizeStructure, SkillDistribution


def random_structure(rng, n, budget=None):
    budget = rng.uniform(0.5, 2.0) if budget is None else budget
    w = np.sort(rng.random(n))[::-1]
    return PrizeStructure(w / w.sum() * budget * rng.uniform(0.3, 1.0), budget)


def random_market(rng, m_max=5, n_max=10, constant_prob=0.3):
    m = int(rng.integers(1, m_max + 1))
    n = int(rng.integers(2, n_max + 1))
    structures = [random_structure(rng, n) for _ in range(m)]
    if m < m_max and rng.random() < constant_prob:
        structures.append(PrizeStructure(np.full(n, rng.uniform(0.0, 0.3))))
    return structures


def random_distribution(rng, families=("uniform", "exponential", "power", "piecewise-linear")):
    f = families[int(rng.integers(len(families)))]
    if f == "uniform":
        return SkillDistribution.uniform(0.0, rng.uniform(0.5, 2.0))
    if f == "exponential":
        return SkillDistribution.exponential(rng.uniform(0.5, 2.0))
    if f == "power":
        return SkillDistribution.power(rng.uniform(0.5, 3.0), rng.uniform(0.5, 2.0))
    knots = np.sort(rng.random(2))
    vals = np.sort(rng.uniform(0.0, 2.0, 4))[::-1]
    return SkillDistribution.piecewise_linear(list(zip([0.0, *knots, 1.0], vals)))
