"""Prize structures and the interim allocation curves they induce.

A prize vector ``w_1 >= ... >= w_n >= 0`` facing ``n - 1`` opponents who each
outrank a contestant with probability ``phi`` yields the expected prize

    x_w(phi) = sum_k w_k C(n-1, k-1) phi^(k-1) (1 - phi)^(n-k),

a Bernstein polynomial whose coefficients are the prizes themselves.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import _numerics as nm
from .exceptions import DomainError

DEFAULT_SC_GRID = 2049
DEFAULT_SC_TOL = 1e-9


def _check_phi(phi):
    phi = np.asarray(phi, dtype=float)
    if np.any(~((phi >= 0.0) & (phi <= 1.0))):
        raise DomainError("phi must lie in [0, 1]")
    return phi


@dataclass(frozen=True, eq=False)
class PrizeStructure:
    """Rank-order prize vector with the budget it was funded from.

    ``budget`` defaults to the prize total.
    """

    weights: np.ndarray
    budget: float = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0:
            raise DomainError("a prize structure needs at least one prize")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DomainError("prizes must be finite and nonnegative")
        if np.any(np.diff(w) > 0):
            raise DomainError("prizes must be non-increasing in rank")
        budget = float(w.sum()) if self.budget is None else float(self.budget)
        if budget < 0:
            raise DomainError("budget must be nonnegative")
        if w.sum() > budget * (1 + 1e-12) + 1e-300:
            raise DomainError(f"prizes total {w.sum()!r} exceeds budget {budget!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "budget", budget)

    @property
    def n(self):
        return self.weights.size

    @property
    def total(self):
        return float(self.weights.sum())

    @property
    def is_constant(self):
        return self.weights[0] == self.weights[-1]

    @cached_property
    def curve(self):
        return AllocationCurve(self)

    @classmethod
    def simple(cls, k, budget, n):
        """Budget split equally among the top ``k`` ranks."""
        if not 1 <= k <= n:
            raise DomainError(f"simple contest needs 1 <= k <= n, got k={k}, n={n}")
        w = np.zeros(n)
        w[:k] = budget / k
        return cls(w, budget)

    @classmethod
    def winner_take_all(cls, budget, n):
        return cls.simple(1, budget, n)

    def __eq__(self, other):
        if not isinstance(other, PrizeStructure):
            return NotImplemented
        return self.budget == other.budget and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash((self.budget, self.weights.tobytes()))

    def __repr__(self):
        return f"PrizeStructure(weights={self.weights.tolist()}, budget={self.budget})"


class AllocationCurve:
    """Interim allocation ``x_w``, its derivative and generalized inverse."""

    def __init__(self, structure):
        self.structure = structure
        self.n = structure.n
        self.coef = structure.weights
        self.dcoef = nm.bernstein_derivative_coef(self.coef)
        self.is_constant = bool(structure.is_constant)
        self.top = float(self.coef[0])
        self.bottom = float(self.coef[-1])

    def __repr__(self):
        return f"AllocationCurve({self.coef.tolist()})"

    def value(self, phi):
        return nm.bernstein_eval(self.coef, _check_phi(phi))

    __call__ = value

    def derivative(self, phi):
        if self.is_constant:
            return np.zeros(np.shape(_check_phi(phi)))
        return nm.bernstein_eval(self.dcoef, _check_phi(phi))

    def inverse(self, x, tol=1e-15):
        """``max{phi in [0, 1] : x_w(phi) >= x}``, with 0 when ``x > w_1``."""
        return invert_curves(self.coef, self.dcoef, x, tol)

    def mean(self):
        """Exact ``integral_0^1 x_w``: each Bernstein basis integrates to ``1/n``."""
        return float(self.coef.sum()) / self.n


_BRACKET_GRID = 65


@lru_cache(maxsize=None)
def _grid_basis(n):
    phi = np.linspace(0.0, 1.0, _BRACKET_GRID)
    basis = nm.bernstein_basis(n - 1, phi)
    basis.setflags(write=False)
    return phi, basis


def invert_curves(coef, dcoef, x, tol=1e-15):
    """Vectorized generalized inverse ``max{phi : x_w(phi) >= x}``.

    ``coef`` is ``(n,)`` or a batch ``(..., n)`` broadcasting against ``x``.
    The root is bracketed on a coarse grid first, then polished by
    safeguarded Newton.
    """
    coef = np.asarray(coef, dtype=float)
    x = np.asarray(x, dtype=float)
    top, bottom = coef[..., 0], coef[..., -1]
    shape = np.broadcast_shapes(x.shape, top.shape)
    x = np.broadcast_to(x, shape)
    top = np.broadcast_to(top, shape)
    bottom = np.broadcast_to(bottom, shape)
    out = np.where(x <= bottom, 1.0, 0.0)
    inner = (x > bottom) & (x < top)
    if not inner.any():
        return out
    xt = x[inner]
    grid, basis = _grid_basis(coef.shape[-1])
    if coef.ndim == 1:
        c, dc = coef, dcoef
        table = basis @ coef
        i = (table.size - np.searchsorted(table[::-1], xt, side="left")) - 1
        t_lo, t_hi = table[i], table[i + 1]
    else:
        c = np.broadcast_to(coef, shape + coef.shape[-1:])[inner]
        dc = np.broadcast_to(dcoef, shape + dcoef.shape[-1:])[inner]
        table = c @ basis.T
        i = np.sum(table >= xt[:, None], axis=1) - 1
        rows = np.arange(xt.size)
        t_lo, t_hi = table[rows, i], table[rows, i + 1]
    i = np.clip(i, 0, grid.size - 2)
    lo, hi = grid[i], grid[i + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(t_lo > t_hi, (t_lo - xt) / (t_lo - t_hi), 0.5)
    x0 = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)

    # x - w_n vanishes to order r at phi = 1 and w_1 - x to order s at phi = 0;
    # solving for the r-th (s-th) root restores fast Newton convergence there
    r = np.sum(c == c[..., -1:], axis=-1)
    s_ = np.sum(c == c[..., :1], axis=-1)
    near_bottom = x0 >= 0.5
    order = np.where(near_bottom, r, s_).astype(float)
    if c.ndim == 1:
        order_of = lambda idx: order[idx]
        cb, ct = c[-1], c[0]
        tgt = np.where(near_bottom, (xt - cb) ** (1.0 / order), -((ct - xt) ** (1.0 / order)))
    else:
        order_of = lambda idx: order[idx]
        cb, ct = c[:, -1], c[:, 0]
        tgt = np.where(near_bottom, (xt - cb) ** (1.0 / order), -((ct - xt) ** (1.0 / order)))

    def f(phi, idx):
        cc = c if c.ndim == 1 else c[idx]
        dd = dc if c.ndim == 1 else dc[idx]
        val = nm.bernstein_eval(cc, phi)
        slope = nm.bernstein_eval(dd, phi)
        o = order_of(idx)
        nb = near_bottom[idx]
        b = cb if c.ndim == 1 else cb[idx]
        t = ct if c.ndim == 1 else ct[idx]
        gap = np.where(nb, val - b, t - val)
        gap = np.maximum(gap, 0.0)
        h = gap ** (1.0 / o)
        with np.errstate(divide="ignore", invalid="ignore"):
            dh = np.where(gap > 0, h / (o * gap) * slope, -np.inf)
        return np.where(nb, h, -h), dh

    out = np.array(out)
    out[inner] = nm.solve_decreasing(f, lo, hi, tgt, xtol=tol, x0=x0)
    return out


def interim_allocation(curve, phi):
    return curve.value(phi)


def allocation_derivative(curve, phi):
    return curve.derivative(phi)


def invert_allocation(curve, x, tol=1e-15):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("prize level must be nonnegative")
    return curve.inverse(x, tol)


def simple_contest(k, budget, n):
    return PrizeStructure.simple(k, budget, n)


def xi(k, n, phi):
    """Interim allocation of the unit-budget simple contest with ``k`` prizes."""
    if not 1 <= k <= n:
        raise DomainError(f"xi needs 1 <= k <= n, got k={k}, n={n}")
    coef = np.zeros(n)
    coef[:k] = 1.0 / k
    return nm.bernstein_eval(coef, _check_phi(phi))


def xi_table(n, phi):
    """All ``xi_1..xi_n`` at ``phi``; shape ``phi.shape + (n,)``.

    ``xi_k = (1/k) * P(Binom(n-1, phi) <= k-1)``, a cumulative sum of the basis.
    """
    basis = nm.bernstein_basis(n - 1, _check_phi(phi))
    return np.cumsum(basis, axis=-1) / np.arange(1, n + 1)


def conditional_allocation(structure, k, phi):
    """Expected prize when exactly ``k`` contestants (self included) entered."""
    if not 1 <= k <= structure.n:
        raise DomainError(f"participant count must be in [1, {structure.n}], got {k}")
    return nm.bernstein_eval(structure.weights[:k], _check_phi(phi))


def conditional_allocation_slope(structure, k, phi):
    if k == 1:
        return np.zeros(np.shape(phi))
    dcoef = nm.bernstein_derivative_coef(structure.weights[:k])
    return nm.bernstein_eval(dcoef, _check_phi(phi))


def single_crossing(f, g, tol=DEFAULT_SC_TOL, closed=False):
    """Whether sampled ``f`` is single-crossing w.r.t. sampled ``g`` on a shared grid.

    True iff there is a cut with ``f >= g - tol`` before it and ``f <= g + tol``
    after it. With ``closed`` both sides include the cut, so the curves must
    meet: ``f >= g`` at the first sample and ``f <= g`` at the last.
    """
    d = np.asarray(f, dtype=float) - np.asarray(g, dtype=float)
    if closed and d.size and (d[0] < -tol or d[-1] > tol):
        return False
    below = np.flatnonzero(d < -tol)
    if below.size == 0:
        return True
    return bool(np.all(d[below[0]:] <= tol))


def single_crossing_dominates(a, b, grid=DEFAULT_SC_GRID, tol=DEFAULT_SC_TOL):
    """Single-crossing dominance of allocation curve ``a`` over ``b``.

    Needs (1) a larger mean, (2) ``a`` single-crossing w.r.t. ``b`` with the
    crossing inside ``[0, 1]``, so ``a(1) <= b(1)``, and (3) ``-a'``
    single-crossing w.r.t. ``-b'``. Without ``a(1) <= b(1)`` a curve lying
    wholly above a steeper one would count, and the utility order can fail.
    """
    if a.n != b.n:
        raise DomainError(f"curves have different field sizes ({a.n} vs {b.n})")
    if a.coef.sum() < b.coef.sum() - tol:
        return False
    phi = np.linspace(0.0, 1.0, grid)
    if not single_crossing(a.value(phi), b.value(phi), tol, closed=True):
        return False
    return single_crossing(-a.derivative(phi), -b.derivative(phi), tol)
