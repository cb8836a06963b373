"""Low-level numerical kernels shared by the solver modules.

Everything here is vectorized over leading array axes and free of any game
semantics: Bernstein (binomial mixture) evaluation, a bracketed monotone root
solver, and piecewise quadrature.
"""

import numpy as np
from scipy.integrate import tanhsinh


def bernstein_basis(degree, phi):
    """Binomial pmf ``C(d, k) phi^k (1 - phi)^(d - k)`` for ``k = 0..d``.

    Terms are generated by the ratio recurrence starting from the heavier end
    (``phi <= 1/2`` forward from ``(1 - phi)^d``, otherwise backward from
    ``phi^d``), so no raw binomial coefficient is ever formed. Returns an array
    of shape ``phi.shape + (degree + 1,)``.
    """
    phi = np.asarray(phi, dtype=float)
    flip = phi > 0.5
    s = np.where(flip, 1.0 - phi, phi)
    if degree == 0:
        return np.ones(phi.shape + (1,))
    k = np.arange(degree, dtype=float)
    ratio = ((degree - k) / (k + 1.0)) * (s / (1.0 - s))[..., None]
    head = ((1.0 - s) ** degree)[..., None]
    terms = np.concatenate([head, head * np.cumprod(ratio, axis=-1)], axis=-1)
    return np.where(flip[..., None], terms[..., ::-1], terms)


def bernstein_eval(coef, phi):
    """Evaluate ``sum_k coef[..., k] * B_k(phi)`` with broadcasting over leading axes."""
    coef = np.asarray(coef, dtype=float)
    basis = bernstein_basis(coef.shape[-1] - 1, phi)
    return np.sum(coef * basis, axis=-1)


def bernstein_derivative_coef(coef):
    """Coefficients of the derivative polynomial (one degree lower)."""
    coef = np.asarray(coef, dtype=float)
    degree = coef.shape[-1] - 1
    if degree == 0:
        return np.zeros(coef.shape[:-1] + (1,))
    return degree * np.diff(coef, axis=-1)


FINAL_STEP = 1e-9


def solve_decreasing(func, lo, hi, target, xtol=1e-15, maxiter=400, x0=None):
    """Find ``x`` in ``[lo, hi]`` with ``func(x, idx) = target`` for non-increasing ``func``.

    Works on flattened copies; ``func`` receives the current iterates of the
    still-unconverged elements together with their flat indices and returns
    ``(value, slope)``. The bracket invariant ``func(lo) >= target >= func(hi)``
    is assumed on entry and maintained. Newton steps are taken when they stay
    inside the bracket and at least halve the previous step, otherwise the
    bracket is bisected.
    """
    target = np.asarray(target, dtype=float)
    shape = target.shape
    tgt = target.reshape(-1)
    lo = np.array(np.broadcast_to(lo, shape), dtype=float).reshape(-1)
    hi = np.array(np.broadcast_to(hi, shape), dtype=float).reshape(-1)
    if x0 is None:
        x = 0.5 * (lo + hi)
    else:
        x = np.clip(np.array(np.broadcast_to(x0, shape), dtype=float).reshape(-1), lo, hi)
    step_old = hi - lo
    idx = np.arange(tgt.size)
    for _ in range(maxiter):
        if idx.size == 0:
            break
        xa, la, ha = x[idx], lo[idx], hi[idx]
        f, df = func(xa, idx)
        r = f - tgt[idx]
        hit = r == 0
        la = np.where(r > 0, xa, la)
        ha = np.where(r < 0, xa, ha)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - r / df
        use_newton = (
            np.isfinite(newton)
            & np.isfinite(df)
            & (df < 0)
            & (newton > la)
            & (newton < ha)
            & (np.abs(newton - xa) <= 0.5 * np.abs(step_old[idx]))
        )
        x_new = np.where(use_newton, newton, 0.5 * (la + ha))
        step = x_new - xa
        # once the Newton correction is this small its quadratic error is far
        # below round-off, so take it (clipped into the bracket) and stop
        with np.errstate(invalid="ignore"):
            final = (
                np.isfinite(newton) & np.isfinite(df) & (df < 0)
                & (np.abs(newton - xa) <= FINAL_STEP * (1.0 + np.abs(xa)))
            )
        x_new = np.where(final, np.clip(newton, la, ha), x_new)
        done = hit | (ha - la <= xtol) | final
        # bracket collapsed to adjacent floats
        done |= ~final & ((x_new == la) | (x_new == ha))
        x[idx] = np.where(hit, xa, x_new)
        lo[idx], hi[idx] = la, ha
        step_old[idx] = step
        idx = idx[~done]
    return x.reshape(shape)


def integrate_pieces(func, edges, atol=1e-12, rtol=1e-12):
    """Integrate ``func`` over consecutive intervals ``[edges[i], edges[i+1]]``.

    All intervals are handed to a single vectorized tanh-sinh call, which
    tolerates integrable endpoint singularities, so callers should place
    every kink of the integrand on an edge. Returns one value per interval.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    out = np.zeros(a.shape)
    live = b > a
    if not live.any():
        return out
    res = tanhsinh(func, a[live], b[live], atol=atol, rtol=rtol, maxlevel=12)
    out[live] = res.integral
    return out
