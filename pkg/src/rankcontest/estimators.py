"""Estimator-style wrappers with scikit-learn parameter handling.

``fit`` takes a prize matrix (one row per contest), ``transform`` maps
quantiles to equilibrium shares and ``predict`` maps quantiles to efforts.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .distributions import SkillDistribution
from .equilibrium import DEFAULT_BISECT_TOL, DEFAULT_QUAD_TOL, solve_choice_profile
from .exceptions import DomainError
from .objectives import best_response_participation, solve_common_theta_spe
from .prizes import PrizeStructure


def check_prize_matrix(X):
    """2-D array of non-increasing, nonnegative prize rows."""
    X = check_array(X, dtype=float, ensure_min_samples=1)
    if np.any(X < 0):
        raise DomainError("prizes must be nonnegative")
    if np.any(np.diff(X, axis=1) > 0):
        raise DomainError("each prize row must be non-increasing")
    return X


def check_quantiles(q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if not np.all(np.isfinite(q)) or np.any((q < 0) | (q > 1)):
        raise DomainError("quantiles must lie in [0, 1]")
    return q


def _check_fitted(est, attr):
    if not hasattr(est, attr):
        raise NotFittedError(f"{type(est).__name__} is not fitted yet; call fit first")


class ContestEquilibrium(BaseEstimator):
    """Contestant equilibrium for a set of parallel contests.

    Parameters
    ----------
    distribution : SkillDistribution, optional
        Skill distribution used for efforts; uniform on [0, 1] by default.
    bisect_tol, quad_tol : float
        Root-finding and quadrature tolerances.
    """

    def __init__(self, distribution=None, bisect_tol=DEFAULT_BISECT_TOL, quad_tol=DEFAULT_QUAD_TOL):
        self.distribution = distribution
        self.bisect_tol = bisect_tol
        self.quad_tol = quad_tol

    def fit(self, X, y=None):
        X = check_prize_matrix(X)
        self.structures_ = [PrizeStructure(row) for row in X]
        self.profile_ = solve_choice_profile(self.structures_, self.bisect_tol, self.quad_tol)
        self.dist_ = self.distribution or SkillDistribution.uniform()
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, q):
        """Cumulative shares ``Phi_j(q)``, shape ``(len(q), m)``."""
        _check_fitted(self, "profile_")
        return self.profile_.shares(check_quantiles(q))

    def predict(self, q):
        """Efforts ``beta_j(q)``, shape ``(len(q), m)``."""
        _check_fitted(self, "profile_")
        q = check_quantiles(q)
        return np.stack([self.profile_.effort(self.dist_, j, q) for j in range(self.profile_.m)],
                        axis=1)


class ParticipationDesigner(BaseEstimator):
    """Best simple contest for a participation designer against fixed opponents."""

    def __init__(self, theta=0.5, budget=1.0):
        self.theta = theta
        self.budget = budget

    def fit(self, X, y=None):
        """``X`` holds the opponents' prize rows; pass an ``(0, n)`` array for none."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DomainError("opponent prizes must be a 2-D array")
        n = X.shape[1]
        opponents = [PrizeStructure(row) for row in check_prize_matrix(X)] if len(X) else []
        br = best_response_participation(opponents, self.theta, self.budget, n)
        self.k_ = br.k
        self.utility_ = br.utility
        self.structure_ = br.structure
        self.result_ = br
        self.n_features_in_ = n
        return self

    def predict(self, X=None):
        _check_fitted(self, "structure_")
        return self.structure_.weights.copy()


class CommonThresholdSPE(BaseEstimator):
    """Designers' equilibrium when all count entrants below a shared ``theta``."""

    def __init__(self, theta=0.5, n=2):
        self.theta = theta
        self.n = n

    def fit(self, X, y=None):
        """``X`` is the vector of designer budgets."""
        budgets = check_array(np.asarray(X, dtype=float).reshape(1, -1)).ravel()
        self.solution_ = solve_common_theta_spe(budgets, self.theta, self.n)
        self.k_ = np.asarray(self.solution_.k)
        self.x_star_ = self.solution_.x_star
        return self

    def predict(self, X=None):
        _check_fitted(self, "solution_")
        return np.stack([s.weights for s in self.solution_.structures])
