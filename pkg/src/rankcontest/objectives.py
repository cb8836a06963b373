"""Designer objectives: rank-weighted effort and participation above a threshold.

A designer with rank weights ``alpha`` values the effort of its k-th ranked
entrant at ``alpha_k``. A participation designer counts entrants whose
quantile is at most ``theta``. The common-threshold subgame-perfect
equilibrium among participation designers is built from the upper envelope
``T_j max_k xi_k`` of the simple contests each designer can afford.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _numerics as nm
from .equilibrium import (
    DEFAULT_BISECT_TOL,
    DEFAULT_QUAD_TOL,
    as_curves,
    shares_against,
    solve_choice_profile,
)
from .exceptions import DomainError, UnsupportedCaseError
from .prizes import PrizeStructure, _check_phi, invert_curves, single_crossing_dominates, xi_table

WEIGHT_MONOTONE_TOL = 1e-10
WEIGHT_MONOTONE_GRID = 2049
SPE_CERT_TOL = 1e-8
DOMINANCE_TOL = 1e-7


@dataclass(frozen=True)
class EffortObjective:
    """Rank weights ``alpha_1..alpha_n`` on the efforts of ranked entrants."""

    alpha: tuple

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)):
            raise DomainError("alpha must be a non-empty vector of finite reals")
        object.__setattr__(self, "alpha", tuple(float(v) for v in a))

    kind = "effort"

    def to_dict(self):
        return {"type": "effort", "alpha": list(self.alpha)}


@dataclass(frozen=True)
class ParticipationObjective:
    """Expected number of entrants with quantile at most ``theta``."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= float(self.theta) <= 1.0:
            raise DomainError(f"theta must lie in [0, 1], got {self.theta!r}")
        object.__setattr__(self, "theta", float(self.theta))

    kind = "participation"

    def to_dict(self):
        return {"type": "participation", "theta": self.theta}


def _check_alpha(alpha, n):
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n,):
        raise DomainError(f"alpha must have length n={n}, got shape {alpha.shape}")
    if not np.all(np.isfinite(alpha)):
        raise DomainError("alpha entries must be finite")
    return alpha


def rank_density(k, n, phi):
    """``g_k(phi)``: probability that exactly ``k - 1`` of ``n - 1`` opponents outrank."""
    if not 1 <= k <= n:
        raise DomainError(f"rank must lie in [1, {n}], got {k}")
    return nm.bernstein_basis(n - 1, _check_phi(phi))[..., k - 1]


def rank_weight(alpha, n, phi):
    """``G(phi; alpha) = n sum_k alpha_k int_0^phi g_k``.

    ``n int_0^phi g_k = P(Binom(n, phi) >= k)``, so G is a tail sum of the
    degree-``n`` Bernstein basis.
    """
    alpha = _check_alpha(alpha, n)
    basis = nm.bernstein_basis(n, _check_phi(phi))
    tails = np.cumsum(basis[..., ::-1], axis=-1)[..., ::-1][..., 1:]
    return tails @ alpha


def rank_weight_density(alpha, n, phi):
    """``sum_k alpha_k g_k(phi)``, the derivative of ``G`` divided by ``n``."""
    alpha = _check_alpha(alpha, n)
    return nm.bernstein_basis(n - 1, _check_phi(phi)) @ alpha


def is_weight_monotone(alpha, n, grid=WEIGHT_MONOTONE_GRID, tol=WEIGHT_MONOTONE_TOL):
    """Whether ``sum_k alpha_k g_k`` is nonnegative and non-increasing on ``[0, 1]``."""
    alpha = _check_alpha(alpha, n)
    if np.all(alpha >= 0) and np.all(np.diff(alpha) <= 0):
        return True
    h = rank_weight_density(alpha, n, np.linspace(0.0, 1.0, grid))
    return bool(np.all(h >= -tol) and np.all(np.diff(h) <= tol))


def effort_utility(j, curves, dist, alpha, profile=None, quad_tol=DEFAULT_QUAD_TOL):
    """Designer ``j``'s expected rank-weighted effort in equilibrium.

    Evaluated in contest ``j``'s own share space as
    ``int_0^{Phi_j(1)} v(t(phi)) G(phi; alpha) (-x_j'(phi)) dphi``.
    """
    curves = as_curves(curves)
    if not 0 <= j < len(curves):
        raise DomainError(f"designer index {j} out of range for {len(curves)} contests")
    c = curves[j]
    alpha = _check_alpha(alpha, c.n)
    if c.is_constant:
        raise UnsupportedCaseError(
            f"contest {j} pays every rank the same prize; its equilibrium share is not "
            "unique, estimate this utility with the simulator instead"
        )
    if not np.any(alpha):
        return 0.0
    if profile is None:
        profile = solve_choice_profile(curves, quad_tol=quad_tol)
    n = c.n

    def weight(phi):
        phi = np.clip(phi, 0.0, 1.0)
        return rank_weight(alpha, n, phi) * -c.derivative(phi)

    return float(profile.own_space_integral(dist, j, np.array(0.0), weight))


def participation_utility(j, curves, theta, profile=None):
    """``n * Phi_j(theta)``, the expected number of entrants below the threshold."""
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    curves = as_curves(curves)
    if profile is None:
        profile = solve_choice_profile(curves)
    return float(curves[0].n * profile.share(j, np.array(float(theta))))


@dataclass
class BestResponse:
    k: int
    utility: float
    share: float
    structure: PrizeStructure
    utilities: np.ndarray
    ties: tuple
    consistent: bool


def _argmax_set(values, tol):
    values = np.asarray(values)
    return tuple(int(i) for i in np.flatnonzero(values >= values.max() - tol))


def best_response_participation(opponents, theta, budget, n, tie_tol=1e-10, xi_tol=1e-9):
    """Best simple contest against fixed opponents for a participation designer.

    Enumerates every ``k``. When several ``k`` reach the best share (up to
    ``tie_tol``), returns the smallest one that also maximizes ``xi_k`` at
    that share, falling back to the smallest tied ``k``. ``consistent``
    reports whether the returned ``k`` maximizes ``xi_k``.
    """
    if budget < 0:
        raise DomainError("budget must be nonnegative")
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    opp = as_curves(opponents) if len(opponents) else []
    if opp and opp[0].n != n:
        raise DomainError(f"opponents use n={opp[0].n}, expected {n}")
    own = np.zeros((n, n))
    for k in range(1, n + 1):
        own[k - 1, :k] = budget / k
    shares = shares_against(own, opp, theta)
    best = _argmax_set(shares, tie_tol)
    phi = float(shares[list(best)].max())
    xis = xi_table(n, np.array(min(max(phi, 0.0), 1.0)))
    preferred = sorted(set(_argmax_set(xis, xi_tol)) & set(best))
    k = (preferred or list(best))[0] + 1
    return BestResponse(
        k=k,
        utility=n * float(shares[k - 1]),
        share=float(shares[k - 1]),
        structure=PrizeStructure.simple(k, budget, n),
        utilities=n * shares,
        ties=tuple(i + 1 for i in best),
        consistent=bool(preferred),
    )


def random_feasible_structure(rng, n, budget):
    """Non-increasing prizes summing to a uniform-random fraction of ``budget``."""
    w = np.sort(rng.random(n))[::-1]
    total = w.sum()
    scale = rng.random() * budget / total if total > 0 else 0.0
    return PrizeStructure(w * scale, budget)


def _strict_proxy(structure, eps=1e-6):
    """Strictly decreasing stand-in for a constant structure (same total)."""
    if not structure.is_constant or structure.n == 1:
        return structure
    w = structure.weights.copy()
    w[0] += eps
    w[-1] = max(w[-1] - eps, 0.0)
    return PrizeStructure(w, max(structure.budget, w.sum()))


@dataclass
class DominanceReport:
    holds: bool
    worst_gap: float
    dominance_failures: int
    trials: int
    details: list = field(default_factory=list)


def wta_dominance_check(alpha, budget, n, opponents, dist, trials=100, seed=0, tol=DOMINANCE_TOL):
    """Check that winner-take-all beats random feasible structures for weight-monotone ``alpha``.

    Each trial draws ``w'`` with total at most ``budget`` and verifies both the
    utility order and the single-crossing dominance of WTA over ``w'``.
    """
    alpha = _check_alpha(alpha, n)
    if not is_weight_monotone(alpha, n):
        raise DomainError("winner-take-all dominance needs weight-monotone alpha")
    if budget <= 0:
        raise DomainError("budget must be positive")
    opp = list(as_curves(opponents)) if len(opponents) else []
    wta = PrizeStructure.winner_take_all(budget, n)
    base = effort_utility(0, [wta] + opp, dist, alpha)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    failures = 0
    details = []
    for _ in range(trials):
        w = random_feasible_structure(rng, n, budget)
        u = effort_utility(0, [_strict_proxy(w)] + opp, dist, alpha)
        gap = u - base
        worst = max(worst, gap)
        dom = single_crossing_dominates(wta.curve, w.curve)
        failures += not dom
        details.append({"weights": w.weights.tolist(), "utility": u, "dominates": dom})
    return DominanceReport(
        holds=bool(worst <= tol and failures == 0),
        worst_gap=float(worst),
        dominance_failures=failures,
        trials=trials,
        details=details,
    )


# common-threshold subgame-perfect equilibrium


def _simple_coefs(n):
    k = np.arange(1, n + 1)
    return np.where(np.arange(n)[None, :] < k[:, None], 1.0 / k[:, None], 0.0)


def envelope_inverse(budget, n, x):
    """``max{phi : T max_k xi_k(phi) >= x}``, the largest of the per-``k`` inverses."""
    x = np.asarray(x, dtype=float)
    if budget <= 0:
        return np.where(x <= 0, 1.0, 0.0)
    coefs = _simple_coefs(n)
    dcoefs = nm.bernstein_derivative_coef(coefs)
    y = x / budget
    inv = [invert_curves(coefs[k], dcoefs[k], y) for k in range(n)]
    return np.max(inv, axis=0)


def envelope_supply(budgets, n, x):
    return sum(envelope_inverse(T, n, x) for T in budgets)


@dataclass
class SpeSolution:
    """Designers' equilibrium simple contests under a common threshold."""

    theta: float
    n: int
    budgets: tuple
    k: tuple
    structures: tuple
    x_star: float
    envelope_share: tuple
    phi_star: tuple
    utilities: tuple
    case: str
    max_deviation_gain: float
    certified: bool

    def to_dict(self):
        return {
            "theta": self.theta,
            "n": self.n,
            "budgets": list(self.budgets),
            "k_star": list(self.k),
            "prizes": [s.weights.tolist() for s in self.structures],
            "X_star": self.x_star,
            "envelope_share": list(self.envelope_share),
            "phi_star": list(self.phi_star),
            "utilities": list(self.utilities),
            "case": self.case,
            "max_deviation_gain": self.max_deviation_gain,
            "certified": self.certified,
        }


def deviation_gains(structures, theta, j, candidates, bisect_tol=DEFAULT_BISECT_TOL):
    """Change in designer ``j``'s share at ``theta`` from each candidate prize vector."""
    structures = list(structures)
    current = float(solve_choice_profile(structures, bisect_tol).share(j, np.array(theta)))
    opp = structures[:j] + structures[j + 1:]
    alt = shares_against(np.atleast_2d(candidates), opp, theta, bisect_tol)
    return alt - current


def solve_common_theta_spe(budgets, theta, n, tol=1e-15, cert_tol=SPE_CERT_TOL):
    """Subgame-perfect equilibrium of participation designers sharing ``theta``.

    ``X*`` is the largest prize level at which the designers' envelope shares
    still cover ``theta``; each designer then plays the smallest ``k``
    maximizing ``xi_k`` at its envelope share. The certificate checks every
    unilateral switch to another simple contest.
    """
    budgets = tuple(float(T) for T in budgets)
    if not budgets:
        raise DomainError("at least one designer is required")
    if any(T < 0 or not np.isfinite(T) for T in budgets):
        raise DomainError("budgets must be finite and nonnegative")
    if not 0.0 <= theta <= 1.0:
        raise DomainError(f"theta must lie in [0, 1], got {theta!r}")
    if n < 1:
        raise DomainError("n must be at least 1")
    theta = float(theta)
    w_plus = max(budgets) / n
    # bisection for max{x : Qbar(x) >= theta}; Qbar(w+) >= 1 since the richest
    # designer's envelope never drops below w+
    lo, hi = w_plus, max(budgets)
    if envelope_supply(budgets, n, hi) >= theta:
        lo = hi
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if envelope_supply(budgets, n, mid) >= theta:
            lo = mid
        else:
            hi = mid
    x_star = lo
    just_above = np.nextafter(w_plus, np.inf)
    above = float(envelope_supply(budgets, n, just_above)) if n > 1 else 0.0
    case = "interior" if above >= theta else "equal-split"

    env = [float(envelope_inverse(T, n, x_star)) for T in budgets]
    ks = []
    for share in env:
        xis = xi_table(n, np.array(min(max(share, 0.0), 1.0)))
        ks.append(int(np.flatnonzero(xis >= xis.max() - 1e-15)[0]) + 1)
    structures = tuple(PrizeStructure.simple(k, T, n) for k, T in zip(ks, budgets))
    profile = solve_choice_profile(structures)
    phi = profile.shares(np.array(theta))
    gain = 0.0
    for j, T in enumerate(budgets):
        cands = np.zeros((n, n))
        for k in range(1, n + 1):
            cands[k - 1, :k] = T / k
        gain = max(gain, float(np.max(deviation_gains(structures, theta, j, cands))))
    return SpeSolution(
        theta=theta,
        n=n,
        budgets=budgets,
        k=tuple(ks),
        structures=structures,
        x_star=float(x_star),
        envelope_share=tuple(env),
        phi_star=tuple(float(p) for p in phi),
        utilities=tuple(float(n * p) for p in phi),
        case=case,
        max_deviation_gain=gain,
        certified=bool(gain <= cert_tol),
    )
