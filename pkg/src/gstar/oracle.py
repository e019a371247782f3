"""Reference evaluations by direct summation.

Nothing here uses the product structure of the kernel, the pruning window or
the compiled kernels: Theta is the full kappa-fold sum over atom tuples and the
y- and t-integrals are written out term by term. Meant for small instances.
"""
import itertools

import numpy as np

from .measure import AtomicMeasure, SampledFunction


def _kernel_tuple_tensor(spec, y, slot_points):
    """s_t(y, z_1..z_k) for every tuple (z_1 in slot 1, ..., z_k in slot k)."""
    y = np.asarray(y, dtype=float)
    k = len(slot_points)
    grids = np.meshgrid(*[np.arange(P.shape[0]) for P in slot_points], indexing="ij")
    value = None
    for i in range(k):
        z = slot_points[i][grids[i]]
        d = np.sqrt(((z - y) ** 2).sum(axis=-1))
        value = d[..., None] if value is None else np.concatenate([value, d[..., None]], axis=-1)
    return value  # distances per slot, shape (N_1, ..., N_k, k)


def _factor_values(spec, d, t):
    m, a = spec.m, spec.alpha
    if spec.family == "product_poisson":
        return t ** a / (t + d) ** (m + a)
    return spec.gauss_c * t ** (-m) * np.exp(-(d / t) ** 2)


def _kernel_values(spec, dists, t):
    return spec.amplitude * np.prod(_factor_values(spec, dists, t), axis=-1)


def _slot(arg):
    if isinstance(arg, SampledFunction):
        return arg.base.points, arg.values * arg.base.weights
    if isinstance(arg, AtomicMeasure):
        return arg.points, arg.weights
    raise TypeError(type(arg).__name__)


def naive_theta(spec, args, y, t):
    """Full tuple sum of s_t(y, z) prod_i c_i(z_i)."""
    pts, coeffs = zip(*[_slot(a) for a in args])
    if any(P.shape[0] == 0 for P in pts):
        return 0.0
    S = _kernel_values(spec, _kernel_tuple_tensor(spec, y, pts), t)
    C = coeffs[0]
    for c in coeffs[1:]:
        C = np.multiply.outer(C, c)
    return float((S * C).sum())


def naive_theta_loop(spec, args, y, t):
    """Same sum as ``naive_theta`` but with a Python loop over tuples."""
    from .kernel import eval_kernel
    pts, coeffs = zip(*[_slot(a) for a in args])
    total = 0.0
    for idx in itertools.product(*[range(P.shape[0]) for P in pts]):
        zs = np.array([pts[i][j] for i, j in enumerate(idx)])
        c = 1.0
        for i, j in enumerate(idx):
            c *= coeffs[i][j]
        total += eval_kernel(spec, y, zs, t) * c
    return total


def _theta_all(spec, args, Y, t, block=8):
    """Full tuple sums at every row of ``Y``, a block of points at a time."""
    pts, coeffs = zip(*[_slot(a) for a in args])
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    out = np.zeros(Y.shape[0])
    if any(P.shape[0] == 0 for P in pts):
        return out
    C = coeffs[0]
    for c in coeffs[1:]:
        C = np.multiply.outer(C, c)
    k = len(pts)
    for s in range(0, Y.shape[0], block):
        Yb = Y[s:s + block]
        S = np.full((Yb.shape[0],) + C.shape, spec.amplitude)
        for i, P in enumerate(pts):
            d = np.sqrt(((Yb[:, None, :] - P[None, :, :]) ** 2).sum(axis=-1))
            shape = [Yb.shape[0]] + [1] * k
            shape[i + 1] = P.shape[0]
            S = S * _factor_values(spec, d, t).reshape(shape)
        out[s:s + block] = (S * C).reshape(Yb.shape[0], -1).sum(axis=1)
    return out


def _vartheta(x, Y, t, mlam):
    d = np.sqrt(((np.atleast_2d(Y) - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
    return (t / (t + d)) ** mlam


def naive_u_t(spec, lp, mu, args, x, t):
    th = _theta_all(spec, args, mu.points, t)
    terms = _vartheta(x, mu.points, t, lp.mlam) * th * th * mu.weights / t ** spec.m
    return float(np.sqrt(terms.sum()))


def naive_l_t(spec, mu, f, x, t):
    a4 = spec.alpha / 4.0
    total = 0.0
    for z, w, v in zip(mu.points, mu.weights, f.values):
        d = np.sqrt(((np.asarray(x) - z) ** 2).sum())
        total += t ** a4 / (t + d) ** (spec.m + a4) * abs(v) * w
    return total


def naive_g_star(spec, lp, mu, args, x, quad, t_lo=None, t_hi=None, cone=False):
    """Node-by-node sum; ``t_lo <= node < t_hi`` selects a sub-window."""
    total = 0.0
    d = np.sqrt(((mu.points - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
    for t, dw in zip(quad.nodes(), quad.weights()):
        if t_lo is not None and t < t_lo:
            continue
        if t_hi is not None and t >= t_hi:
            continue
        th = _theta_all(spec, args, mu.points, t)
        wt = (d <= t).astype(float) if cone else _vartheta(x, mu.points, t, lp.mlam)
        total += (wt * th * th * mu.weights / t ** spec.m).sum() * dw
    return float(np.sqrt(total))


def naive_tail_T(spec, lp, mu, fs, splits, x, xp, Q, c0, quad):
    Q2 = Q.dilate(2.0)
    pieces = []
    for f, r in zip(fs, splits):
        inside = Q2.contains(f.base.points)
        keep = inside if r == 0 else ~inside
        pieces.append(SampledFunction(f.base, np.where(keep, f.values, 0.0)))
    half = lp.mlam / 2.0
    total = 0.0
    for t, dw in zip(quad.nodes(), quad.weights()):
        if t < c0 * Q.side:
            continue
        th = _theta_all(spec, pieces, mu.points, t)
        V = _vartheta(x, mu.points, t, half) - _vartheta(xp, mu.points, t, half)
        total += (V * V * th * th * mu.weights / t ** spec.m).sum() * dw
    return float(np.sqrt(total))
