"""Skill distributions in quantile form.

A contestant's quantile ``q ~ U[0, 1]`` maps to skill ``v(q) = F^{-1}(1 - q)``,
so lower quantiles are stronger contestants. The map is extended by
``v(q) = 0`` for ``q > 1``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

FAMILIES = ("uniform", "exponential", "power", "piecewise-linear")


@dataclass(frozen=True)
class SkillDistribution:
    """Immutable description of a continuous skill distribution.

    Prefer the named constructors (:meth:`uniform`, :meth:`exponential`,
    :meth:`power`, :meth:`piecewise_linear`) or :meth:`from_dict`.
    """

    family: str
    params: tuple

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown distribution family {self.family!r}")
        p = dict(self.params)
        if self.family == "uniform":
            low, high = p["low"], p["high"]
            if not (np.isfinite(low) and np.isfinite(high)) or low < 0 or high <= low:
                raise DomainError("uniform requires 0 <= low < high")
        elif self.family == "exponential":
            if not p["rate"] > 0:
                raise DomainError("exponential rate must be positive")
        elif self.family == "power":
            if not (p["exponent"] > 0 and p["scale"] > 0):
                raise DomainError("power exponent and scale must be positive")
        else:
            knots = np.asarray(p["knots"], dtype=float)
            if knots.ndim != 2 or knots.shape[1] != 2 or len(knots) < 2:
                raise DomainError("piecewise-linear knots must be a list of [q, v] pairs")
            qs, vs = knots[:, 0], knots[:, 1]
            if qs[0] != 0.0 or qs[-1] != 1.0 or np.any(np.diff(qs) <= 0):
                raise DomainError("knot quantiles must increase strictly from 0 to 1")
            if np.any(np.diff(vs) >= 0):
                raise DomainError("knot skills must be strictly decreasing")
            if vs[-1] < 0:
                raise DomainError("knot skills must be nonnegative")

    # constructors

    @classmethod
    def uniform(cls, low=0.0, high=1.0):
        return cls("uniform", (("low", float(low)), ("high", float(high))))

    @classmethod
    def exponential(cls, rate=1.0):
        return cls("exponential", (("rate", float(rate)),))

    @classmethod
    def power(cls, exponent, scale=1.0):
        """``F(v) = (v / scale)^exponent`` on ``[0, scale]``."""
        return cls("power", (("exponent", float(exponent)), ("scale", float(scale))))

    @classmethod
    def piecewise_linear(cls, knots):
        """Quantile map interpolating ``[(q_0=0, v_0), ..., (q_K=1, v_K)]``."""
        knots = tuple((float(q), float(v)) for q, v in knots)
        return cls("piecewise-linear", (("knots", knots),))

    @classmethod
    def from_dict(cls, spec):
        family = spec.get("family")
        params = dict(spec.get("params", {}))
        if family == "uniform":
            return cls.uniform(params.get("low", 0.0), params.get("high", 1.0))
        if family == "exponential":
            return cls.exponential(params.get("rate", 1.0))
        if family == "power":
            return cls.power(params["exponent"], params.get("scale", 1.0))
        if family == "piecewise-linear":
            return cls.piecewise_linear(params["knots"])
        raise DomainError(f"unknown distribution family {family!r}")

    def to_dict(self):
        params = dict(self.params)
        if self.family == "piecewise-linear":
            params["knots"] = [list(k) for k in params["knots"]]
        return {"family": self.family, "params": params}

    # maps

    def quantile(self, q):
        """Skill ``v(q)``; zero beyond ``q = 1``. Vectorized."""
        q = np.asarray(q, dtype=float)
        if np.any(q < 0):
            raise DomainError("quantiles must be nonnegative")
        inside = np.minimum(q, 1.0)
        p = dict(self.params)
        if self.family == "uniform":
            v = p["high"] - (p["high"] - p["low"]) * inside
        elif self.family == "exponential":
            with np.errstate(divide="ignore"):
                v = -np.log(inside) / p["rate"]
        elif self.family == "power":
            v = p["scale"] * (1.0 - inside) ** (1.0 / p["exponent"])
        else:
            knots = np.asarray(p["knots"])
            v = np.interp(inside, knots[:, 0], knots[:, 1])
        return np.where(q > 1.0, 0.0, v)

    __call__ = quantile

    def quantile_slope(self, q):
        """Derivative ``dv/dq`` on ``[0, 1]`` (right derivative at knots)."""
        q = np.asarray(q, dtype=float)
        p = dict(self.params)
        if self.family == "uniform":
            return np.full(q.shape, -(p["high"] - p["low"]))
        if self.family == "exponential":
            with np.errstate(divide="ignore"):
                return -1.0 / (p["rate"] * q)
        if self.family == "power":
            a = 1.0 / p["exponent"]
            with np.errstate(divide="ignore", invalid="ignore"):
                return -p["scale"] * a * (1.0 - q) ** (a - 1.0)
        knots = np.asarray(p["knots"])
        slopes = np.diff(knots[:, 1]) / np.diff(knots[:, 0])
        idx = np.clip(np.searchsorted(knots[:, 0], q, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def cdf(self, v):
        """``F(v)``, the probability that a skill is at most ``v``."""
        v = np.asarray(v, dtype=float)
        p = dict(self.params)
        if self.family == "uniform":
            return np.clip((v - p["low"]) / (p["high"] - p["low"]), 0.0, 1.0)
        if self.family == "exponential":
            return np.where(v > 0, -np.expm1(-p["rate"] * np.maximum(v, 0.0)), 0.0)
        if self.family == "power":
            return np.clip(np.maximum(v, 0.0) / p["scale"], 0.0, 1.0) ** p["exponent"]
        knots = np.asarray(p["knots"])
        # v(q) is decreasing; F(v) = 1 - v^{-1}(v)
        return 1.0 - np.interp(v, knots[::-1, 1], knots[::-1, 0])

    def kinks(self):
        """Quantiles in (0, 1) where ``v`` is not smooth."""
        if self.family == "piecewise-linear":
            knots = np.asarray(dict(self.params)["knots"])
            return knots[1:-1, 0].copy()
        return np.empty(0)


def quantile_skill(dist, q):
    return dist.quantile(q)


def sample_quantiles(seed, count):
    """``count`` i.i.d. U[0, 1] quantiles, deterministic in ``seed``."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    return np.random.default_rng(seed).random(count)
