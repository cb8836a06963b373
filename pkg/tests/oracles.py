"""Independent scalar reference implementations used as test oracles.

These use direct binomial sums and plain bisection, sharing no code with the
package's vectorized kernels.
"""

from math import comb

import numpy as np
from scipy import integrate


def x_of(w, phi):
    n = len(w)
    return sum(w[k] * comb(n - 1, k) * phi**k * (1 - phi) ** (n - 1 - k) for k in range(n))


def x_inv(w, x, iters=64):
    """max{phi in [0, 1] : x_w(phi) >= x}."""
    if x > w[0]:
        return 0.0
    if x <= w[-1]:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if x_of(w, mid) >= x:
            lo = mid
        else:
            hi = mid
    return lo


def supply(ws, x):
    return sum(x_inv(w, x) for w in ws)


def supply_inv(ws, q, iters=64):
    """max{x : Q(x) >= q} on [0, max w_1]."""
    hi = max(w[0] for w in ws)
    if supply(ws, hi) >= q:
        return hi
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if supply(ws, mid) >= q:
            lo = mid
        else:
            hi = mid
    return lo


def shares(ws, q):
    """Equilibrium cumulative shares with equal division among top constant contests."""
    const = [j for j, w in enumerate(ws) if w[0] == w[-1]]
    dec = [j for j, w in enumerate(ws) if w[0] != w[-1]]
    out = [0.0] * len(ws)
    if not const:
        X = supply_inv([ws[j] for j in dec], q)
        for j in dec:
            out[j] = x_inv(ws[j], X)
        return out
    x_star = max(ws[j][0] for j in const)
    top = [j for j in const if ws[j][0] == x_star]
    q_star = min(1.0, sum(x_inv(ws[j], x_star) for j in dec))
    if dec:
        if q <= q_star:
            X = supply_inv([ws[j] for j in dec], q)
            X = max(X, x_star)
        else:
            X = x_star
        for j in dec:
            out[j] = x_inv(ws[j], X) if q > 0 else 0.0
    for j in top:
        out[j] = max(q - q_star, 0.0) / len(top)
    return out


def effort_parts(ws, v, dv, j, q):
    """beta_j(q) = v(q) x_j(Phi_j(q)) - v(1) x_j(Phi_j(1)) + int_q^1 x_j(Phi_j(t)) v'(t) dt."""
    w = ws[j]
    if w[0] == w[-1]:
        return 0.0
    level = lambda t: x_of(w, shares(ws, t)[j])
    # Phi_j only kinks where the clearing level crosses a curve end
    ends = {u[0] for u in ws} | {u[-1] for u in ws}
    kinks = sorted({min(supply(ws, c), 1.0) for c in ends} - {0.0, 1.0})
    pts = [t for t in kinks if q < t < 1.0]
    val, _ = integrate.quad(lambda t: level(t) * dv(t), q, 1.0, points=pts or None,
                            limit=100, epsabs=1e-11)
    return v(q) * level(q) - v(1.0) * level(1.0) + val


def binom_tail(n, k, phi):
    return sum(comb(n, i) * phi**i * (1 - phi) ** (n - i) for i in range(k, n + 1))


def rank_weight(alpha, phi):
    n = len(alpha)
    return sum(alpha[k - 1] * binom_tail(n, k, phi) for k in range(1, n + 1))
