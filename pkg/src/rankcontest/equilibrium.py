"""Contestant-side symmetric equilibrium of parallel rank-order contests.

Contests whose allocation curve is strictly decreasing share the population
through the market-clearing prize level ``X = Q^{-1}(q)``:
``Phi_j(q) = x_j^{-1}(X)``. Constant-prize contests only absorb contestants
once the decreasing contests have dropped to the best constant prize ``x*``,
after which the top constant contests split the remainder equally.

Efforts and designer integrals are computed in each contest's own share
space: substituting ``phi = Phi_j(t)`` turns the effort integral
``int v(t) d(-x_j(Phi_j(t)))`` into ``int v(t(phi)) (-x_j'(phi)) dphi`` with
``t(phi) = phi + sum_{i != j} x_i^{-1}(x_j(phi))``, which is smooth between
the points where an opponent enters or saturates.
"""

import numpy as np

from . import _numerics as nm
from .exceptions import DomainError, UnsupportedCaseError
from .prizes import AllocationCurve, PrizeStructure, conditional_allocation, invert_curves

DEFAULT_BISECT_TOL = 1e-12
DEFAULT_QUAD_TOL = 1e-9
ACTIVITY_STEP = 1e-5
ACTIVITY_EPS = 1e-7


def as_curves(curves):
    """Coerce prize structures / curves into a list of :class:`AllocationCurve`."""
    out = []
    for c in curves:
        if isinstance(c, PrizeStructure):
            c = c.curve
        elif not isinstance(c, AllocationCurve):
            c = PrizeStructure(c).curve
        out.append(c)
    if not out:
        raise DomainError("at least one contest is required")
    sizes = {c.n for c in out}
    if len(sizes) > 1:
        raise DomainError(f"contests disagree on the field size n: {sorted(sizes)}")
    return out


# supply of strictly decreasing curves; coefs may be batched as (S, n)


def _supply(coefs, dcoefs, x):
    total = np.zeros(np.shape(x))
    slope = np.zeros(np.shape(x))
    for c, dc in zip(coefs, dcoefs):
        phi = invert_curves(c, dc, x)
        total = total + phi
        interior = (phi > 0) & (phi < 1)
        d = np.where(interior, nm.bernstein_eval(dc, phi), 1.0)
        with np.errstate(divide="ignore"):
            slope = slope + np.where(interior, 1.0 / d, 0.0)
    return total, slope


def _take(c, idx):
    c = np.asarray(c)
    return c[idx] if c.ndim == 2 else c


def _clearing_level(coefs, dcoefs, q, lo, hi, tol, x0=None):
    """``max{x in [lo, hi] : sum_j x_j^{-1}(x) >= q}`` for decreasing curves.

    Assumes the supply at ``lo`` is at least ``q``.
    """
    q = np.asarray(q, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), q.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), q.shape)

    def func(x, idx):
        return _supply([_take(c, idx) for c in coefs], [_take(c, idx) for c in dcoefs], x)

    X = nm.solve_decreasing(func, lo, hi, q, xtol=tol, x0=x0)
    X = np.where(q <= 0, hi, X)
    X = np.where(hi <= lo, lo, X)
    # on a flat stretch of the supply every curve is saturated; the right end
    # of the stretch is one of the curves' endpoints
    _, slope = _supply(coefs, dcoefs, X)
    flat = (slope == 0) & (q > 0)
    if flat.any():
        for c in coefs:
            for cand in (np.asarray(c)[..., 0], np.asarray(c)[..., -1]):
                cand = np.broadcast_to(cand, q.shape)
                mask = flat & (cand > X) & (cand <= hi)
                if mask.any():
                    s, _ = _supply(coefs, dcoefs, cand)
                    X = np.where(mask & (s >= q - 1e-13), np.maximum(X, cand), X)
    return X


def aggregate_supply(curves, x):
    """``Q(x) = sum_j x_j^{-1}(x)`` including unit jumps at constant prizes."""
    curves = as_curves(curves)
    x = np.asarray(x, dtype=float)
    return sum(c.inverse(x) for c in curves)


def invert_supply(curves, q, tol=DEFAULT_BISECT_TOL):
    """``Q^{-1}(q) = max{x in [0, max_j w_j1] : Q(x) >= q}``."""
    return solve_choice_profile(curves, bisect_tol=tol).clearing_level(q)


class ChoiceProfile:
    """Cumulative choice strategy ``Phi_j(q)`` over a fixed set of contests.

    Subclasses implement :meth:`shares`. Efforts and interim utilities are
    derived from the shares alone, by Riemann-Stieltjes sums on a fine grid;
    :class:`EquilibriumProfile` overrides them with exact quadrature.
    """

    stieltjes_grid = 20001

    def __init__(self, curves):
        self.curves = as_curves(curves)
        self.m = len(self.curves)
        self.n = self.curves[0].n

    def shares(self, q):
        raise NotImplementedError

    def share(self, j, q):
        return self.shares(q)[..., j]

    def prize_levels(self, q):
        """``x_j(Phi_j(q))`` for every contest; shape ``q.shape + (m,)``."""
        phi = np.clip(self.shares(q), 0.0, 1.0)
        return np.stack([c.value(phi[..., j]) for j, c in enumerate(self.curves)], axis=-1)

    def _stieltjes_table(self, dist, j):
        t = np.linspace(0.0, 1.0, self.stieltjes_grid)
        level = self.prize_levels(t)[:, j]
        mid = 0.5 * (t[1:] + t[:-1])
        inc = dist.quantile(mid) * (level[:-1] - level[1:])
        tail = np.concatenate([np.cumsum(inc[::-1])[::-1], [0.0]])
        return t, tail

    def effort(self, dist, j, q):
        if self.curves[j].is_constant:
            return np.zeros(np.shape(q))
        t, tail = self._stieltjes_table(dist, j)
        return np.interp(q, t, tail)

    def interim_utility(self, dist, j, q, route="direct"):
        q = np.asarray(q, dtype=float)
        level = self.prize_levels(q)[..., j]
        return dist.quantile(q) * level - self.effort(dist, j, q)


class CustomProfile(ChoiceProfile):
    """A user-supplied (possibly non-equilibrium) cumulative choice strategy.

    ``share_fn(q)`` must return an array of shape ``q.shape + (m,)``.
    """

    def __init__(self, curves, share_fn):
        super().__init__(curves)
        self._share_fn = share_fn

    def shares(self, q):
        q = np.asarray(q, dtype=float)
        return np.asarray(self._share_fn(q), dtype=float)


class EquilibriumProfile(ChoiceProfile):
    """The equilibrium cumulative choice strategy with equal division among ties.

    Attributes
    ----------
    decreasing : tuple of int
        Contests with strictly decreasing allocation curves.
    constant : tuple of int
        Contests paying every rank the same prize.
    x_star : float or None
        Best constant prize, ``None`` when every curve is decreasing.
    top_constant : tuple of int
        Constant contests paying ``x_star``.
    q_star : float
        Population quantile after which only ``top_constant`` contests absorb
        entrants (1 when there are no constant contests).
    jumps : list of (float, int)
        Prize levels where ``Q`` jumps, with the number of contests jumping.
    """

    def __init__(self, curves, bisect_tol=DEFAULT_BISECT_TOL, quad_tol=DEFAULT_QUAD_TOL):
        super().__init__(curves)
        self.bisect_tol = bisect_tol
        self.quad_tol = quad_tol
        self.decreasing = tuple(j for j, c in enumerate(self.curves) if not c.is_constant)
        self.constant = tuple(j for j, c in enumerate(self.curves) if c.is_constant)
        self._coefs = [self.curves[j].coef for j in self.decreasing]
        self._dcoefs = [self.curves[j].dcoef for j in self.decreasing]
        values = sorted({self.curves[j].top for j in self.constant}, reverse=True)
        self.jumps = [
            (v, sum(1 for j in self.constant if self.curves[j].top == v)) for v in values
        ]
        if self.constant:
            self.x_star = values[0]
            self.top_constant = tuple(
                j for j in self.constant if self.curves[j].top == self.x_star
            )
            self.q_star = float(min(1.0, self._decreasing_supply(self.x_star)))
        else:
            self.x_star = None
            self.top_constant = ()
            self.q_star = 1.0
        tops = [self.curves[j].top for j in self.decreasing]
        self.x_max = max(tops + ([self.x_star] if self.constant else []))
        self._lo = 0.0 if self.x_star is None else self.x_star
        self._hi = max([self._lo] + tops)
        self._total_share = None

    def _decreasing_supply(self, x):
        if not self.decreasing:
            return np.zeros(np.shape(x))
        return _supply(self._coefs, self._dcoefs, x)[0]

    _TABLE_SIZE = 257

    def _supply_table(self):
        if getattr(self, "_table", None) is None:
            xs = np.linspace(self._lo, self._hi, self._TABLE_SIZE)
            ends = [c for j in self.decreasing for c in (self.curves[j].top, self.curves[j].bottom)]
            ends = np.asarray([e for e in ends if self._lo < e < self._hi])
            xs = np.unique(np.concatenate([xs, ends]))
            self._table = (xs, self._decreasing_supply(xs))
        return self._table

    def _clear(self, q):
        # bracket each query between tabulated supply values, then polish
        q = np.asarray(q, dtype=float)
        xs, qs = self._supply_table()
        i = np.sum(qs[None, :] >= q.reshape(-1, 1), axis=1).reshape(q.shape) - 1
        i = np.clip(i, 0, xs.size - 1)
        j = np.minimum(i + 1, xs.size - 1)
        lo, hi = xs[i], xs[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(qs[i] > qs[j], (qs[i] - q) / (qs[i] - qs[j]), 0.5)
        x0 = lo + np.clip(frac, 0.0, 1.0) * (hi - lo)
        X = _clearing_level(self._coefs, self._dcoefs, q, lo, hi, self.bisect_tol, x0=x0)
        return np.where(q <= 0, self._hi, X)

    def clearing_level(self, q):
        """Market-clearing prize ``Q^{-1}(q)``."""
        q = np.asarray(q, dtype=float)
        if not self.decreasing:
            return np.full(q.shape, self.x_star)
        X = self._clear(np.minimum(q, self.q_star))
        if self.x_star is not None:
            X = np.where(q > self.q_star, self.x_star, X)
        return X

    def shares(self, q):
        q = np.asarray(q, dtype=float)
        if np.any(~((q >= 0) & (q <= 1))):
            raise DomainError("quantiles must lie in [0, 1]")
        out = np.zeros(q.shape + (self.m,))
        if self.decreasing:
            X = self._clear(np.minimum(q, self.q_star))
            for j in self.decreasing:
                out[..., j] = self.curves[j].inverse(X)
        if self.top_constant:
            out[..., list(self.top_constant)] = (
                np.maximum(q - self.q_star, 0.0)[..., None] / len(self.top_constant)
            )
        return out

    def total_shares(self):
        """``Phi_j(1)`` for every contest."""
        if self._total_share is None:
            self._total_share = self.shares(np.array(1.0))
        return self._total_share

    def entry_quantile(self, j):
        """Smallest quantile at which contest ``j`` starts attracting entrants."""
        c = self.curves[j]
        if c.is_constant:
            return self.q_star if j in self.top_constant and self.q_star < 1 else 1.0
        if self.x_star is not None and c.top <= self.x_star:
            return 1.0
        e = float(self._decreasing_supply(c.top))
        return min(e, self.q_star, 1.0)

    def kink_quantiles(self):
        """Quantiles where some ``Phi_j`` may fail to be smooth."""
        pts = [self.q_star]
        for j in self.decreasing:
            c = self.curves[j]
            pts += [float(self._decreasing_supply(c.top)), float(self._decreasing_supply(c.bottom))]
        pts = np.asarray(pts)
        return np.unique(pts[(pts > 0) & (pts < 1)])

    # own-share-space integrals

    def _own_map(self, j):
        """``phi -> t(phi)``, the population quantile at which contest ``j``'s share is ``phi``."""
        c = self.curves[j]
        others = [(self.curves[i].coef, self.curves[i].dcoef) for i in self.decreasing if i != j]

        def t_of(phi):
            t = np.array(phi, dtype=float)
            if others:
                x = c.value(np.clip(phi, 0.0, 1.0))
                for oc, od in others:
                    t = t + invert_curves(oc, od, x)
            return t

        return t_of

    def _own_breakpoints(self, j, dist, upper):
        c = self.curves[j]
        pts = []
        for i in self.decreasing:
            if i != j:
                pts += [self.curves[i].top, self.curves[i].bottom]
        phis = list(c.inverse(np.asarray(pts))) if pts else []
        knots = dist.kinks()
        if knots.size:
            phis += list(self.shares(knots)[..., j])
        phis = np.asarray(phis, dtype=float)
        return phis[(phis > 0) & (phis < upper)]

    def own_space_integral(self, dist, j, lower, weight):
        """``int_{lower}^{Phi_j(1)} v(t(phi)) weight(phi) dphi`` for each entry of ``lower``.

        ``lower`` holds own-share values in ``[0, Phi_j(1)]``.
        """
        lower = np.asarray(lower, dtype=float)
        upper = float(self.total_shares()[j])
        lower = np.clip(lower, 0.0, upper)
        if upper <= 0:
            return np.zeros(lower.shape)
        t_of = self._own_map(j)

        def integrand(phi):
            val = dist.quantile(np.maximum(t_of(phi), 0.0)) * weight(phi)
            return np.where(np.isfinite(val), val, 0.0)

        edges = np.unique(np.concatenate([
            lower.reshape(-1), self._own_breakpoints(j, dist, upper), [upper]
        ]))
        pieces = nm.integrate_pieces(integrand, edges, atol=self.quad_tol * 1e-3, rtol=1e-13)
        tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        return tail[np.searchsorted(edges, lower)]

    def effort(self, dist, j, q):
        """Equilibrium effort ``beta_j(q)`` (vectorized over ``q``)."""
        q = np.asarray(q, dtype=float)
        c = self.curves[j]
        if c.is_constant:
            return np.zeros(q.shape)
        lower = self.shares(q)[..., j]
        return self.own_space_integral(dist, j, lower, lambda phi: -c.derivative(np.clip(phi, 0, 1)))

    def interim_utility(self, dist, j, q, route="direct"):
        """Expected utility ``v(q) x_j(Phi_j(q)) - beta_j(q)`` of entering contest ``j``.

        ``route="parts"`` evaluates the integration-by-parts form
        ``v(1) x_j(Phi_j(1)) - int_q^1 x_j(Phi_j(t)) dv(t)`` instead.
        """
        q = np.asarray(q, dtype=float)
        if route == "direct":
            level = self.prize_levels(q)[..., j]
            return dist.quantile(q) * level - self.effort(dist, j, q)
        if route != "parts":
            raise ValueError(f"unknown route {route!r}")
        c = self.curves[j]
        end = float(c.value(self.total_shares()[j]))

        def integrand(t):
            lvl = c.value(np.clip(self.shares(np.clip(t, 0, 1))[..., j], 0, 1))
            val = -lvl * dist.quantile_slope(t)
            return np.where(np.isfinite(val), val, 0.0)

        extra = np.concatenate([self.kink_quantiles(), dist.kinks()])
        flat = q.reshape(-1)
        edges = np.unique(np.concatenate([flat, extra, [1.0]]))
        pieces = nm.integrate_pieces(integrand, edges, atol=self.quad_tol * 1e-3, rtol=1e-13)
        tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        out = float(dist.quantile(1.0)) * end + tail[np.searchsorted(edges, flat)]
        return out.reshape(q.shape)


def solve_choice_profile(curves, bisect_tol=DEFAULT_BISECT_TOL, quad_tol=DEFAULT_QUAD_TOL):
    """Equilibrium cumulative choice strategy for the given prize structures."""
    return EquilibriumProfile(curves, bisect_tol=bisect_tol, quad_tol=quad_tol)


def effort(profile, dist, j, q):
    return profile.effort(dist, j, q)


def interim_utility(profile, dist, j, q, route="direct"):
    return profile.interim_utility(dist, j, q, route=route)


def verify_equilibrium(profile, grid_size=1001, step=ACTIVITY_STEP, activity_eps=ACTIVITY_EPS):
    """Largest gap between the best prize level and an active contest's level.

    A contest counts as active at ``q`` when its share grows by more than
    ``activity_eps`` per unit on both sides of ``q`` (one side at the ends of
    ``[0, 1]``). A result of (numerically) zero certifies that entrants only
    go where the expected remaining prize is maximal.
    """
    q = np.linspace(0.0, 1.0, grid_size)
    here = profile.shares(q)
    ahead = profile.shares(np.minimum(q + step, 1.0))
    behind = profile.shares(np.maximum(q - step, 0.0))
    fwd = (ahead - here) / step
    bwd = (here - behind) / step
    active = np.where(
        (q == 0)[:, None], fwd > activity_eps,
        np.where((q == 1)[:, None], bwd > activity_eps, (fwd > activity_eps) & (bwd > activity_eps)),
    )
    levels = profile.prize_levels(q)
    best = levels.max(axis=1)
    worst_active = np.where(active, levels, np.inf).min(axis=1)
    gap = np.where(np.isfinite(worst_active), best - worst_active, 0.0)
    return float(max(gap.max(), 0.0))


def disclosed_effort(profile, dist, j, k, q):
    """Effort ``beta_{j,k}(q)`` when entrants learn that ``k`` contestants chose ``j``."""
    if not 1 <= k <= profile.n:
        raise DomainError(f"participant count must be in [1, {profile.n}], got {k}")
    q = np.asarray(q, dtype=float)
    p = float(profile.total_shares()[j])
    if p <= 0:
        raise UnsupportedCaseError(f"contest {j} attracts nobody; its disclosed effort is undefined")
    c = profile.curves[j]
    if k == 1 or c.is_constant:
        return np.zeros(q.shape)
    dcoef = nm.bernstein_derivative_coef(c.coef[:k])
    lower = profile.shares(q)[..., j]

    def weight(phi):
        return -nm.bernstein_eval(dcoef, np.clip(phi / p, 0.0, 1.0)) / p

    return profile.own_space_integral(dist, j, lower, weight)


def participation_pmf(n, p):
    """``P(k participants) = Binom(n-1, p)`` at ``k - 1`` for ``k = 1..n``."""
    return nm.bernstein_basis(n - 1, np.asarray(p, dtype=float))


def expected_prize_identity_check(structure, p, phi_level):
    """Residual of ``E_k[x^(k)(phi/p)] = x(phi)`` with ``k - 1 ~ Binom(n-1, p)``."""
    if not isinstance(structure, PrizeStructure):
        structure = PrizeStructure(structure)
    if not 0 < p <= 1:
        raise DomainError("participation probability must lie in (0, 1]")
    if not 0 <= phi_level <= p:
        raise DomainError("cumulative level must lie in [0, p]")
    n = structure.n
    pmf = participation_pmf(n, p)
    ratio = phi_level / p
    lhs = sum(pmf[k - 1] * conditional_allocation(structure, k, ratio) for k in range(1, n + 1))
    rhs = structure.curve.value(phi_level)
    return float(abs(lhs - rhs))


def shares_against(own_weights, opponents, q, bisect_tol=DEFAULT_BISECT_TOL):
    """Equilibrium share ``Phi_own(q)`` for a batch of candidate own structures.

    ``own_weights`` is ``(S, n)``; ``opponents`` are the other contests, held
    fixed. Rows with a constant own structure are solved one at a time.
    """
    own = np.atleast_2d(np.asarray(own_weights, dtype=float))
    opp = as_curves(opponents) if len(opponents) else []
    out = np.zeros(own.shape[0])
    const_rows = own[:, 0] == own[:, -1]
    for s in np.flatnonzero(const_rows):
        prof = solve_choice_profile([PrizeStructure(own[s])] + list(opp), bisect_tol=bisect_tol)
        out[s] = prof.share(0, np.asarray(q, dtype=float))
    rows = ~const_rows
    if not rows.any():
        return out
    c = own[rows]
    dc = nm.bernstein_derivative_coef(c)
    dec = [o for o in opp if not o.is_constant]
    consts = [o.top for o in opp if o.is_constant]
    coefs = [o.coef for o in dec] + [c]
    dcoefs = [o.dcoef for o in dec] + [dc]
    qv = np.full(c.shape[0], float(q))
    if consts:
        x_star = max(consts)
        lo = np.full(qv.shape, x_star)
        q_star = np.minimum(1.0, _supply(coefs, dcoefs, lo)[0])
    else:
        lo = np.zeros(qv.shape)
        q_star = np.ones(qv.shape)
    hi = np.maximum(lo, np.maximum(c[:, 0], max([o.top for o in dec], default=0.0)))
    X = _clearing_level(coefs, dcoefs, np.minimum(qv, q_star), lo, hi, bisect_tol)
    X = np.where(qv > q_star, lo, X)
    out[rows] = invert_curves(c, dc, X)
    return out
