"""Inner loops shared by the operators and the random-grid estimates.

Each kernel exists twice: a numba version (explicit loops, ``prange`` over
independent outputs) and a vectorised numpy version. ``GSTAR_DISABLE_NUMBA``
picks which one the public names resolve to; both stay importable for the
benchmark and the cross-check tests.

Pruning (compiled path only): atoms are sorted by first coordinate and visited
outward from the evaluation point. Because the first-coordinate gap bounds the
distance from below and every weight decays in distance, the walk stops as
soon as ``weight(gap) * max|c| * remaining <= tol * sum|terms so far|``; the
skipped mass is then at most ``tol`` times the absolute sum kept. The test is
tried every 16th atom since it costs one extra weight evaluation. ``tol = 0``
visits everything in storage order. The numpy path always sums exactly.
"""
import math

import numpy as np

from ._accel import HAS_NUMBA, njit, prange

POISSON = 0
GAUSSIAN = 1

WEIGHT_THETA = 0
WEIGHT_CONE = 1


# --------------------------------------------------------------------------
# numba versions
# --------------------------------------------------------------------------

def int_exponent(p):
    """Small nonnegative integer exponents get the multiply-only power."""
    return int(p) if float(p).is_integer() and 0 <= p <= 64 else -1


@njit(cache=True, inline="always")
def _pow(b, p, ip):
    if ip >= 0:
        r = 1.0
        e = ip
        x = b
        while e:
            if e & 1:
                r *= x
            x *= x
            e >>= 1
        return r
    return b ** p


@njit(cache=True, inline="always")
def _factor(d, t, scale, p, ip, family):
    # poisson: scale / (t + d)^p with scale = t^a, p = m + a
    # gaussian: scale * exp(-(d/t)^2) with scale = c t^-m
    if family == POISSON:
        return scale / _pow(t + d, p, ip)
    u = d / t
    return scale * math.exp(-u * u)


@njit(cache=True)
def _dist(a, i, b, j):
    s = 0.0
    for k in range(a.shape[1]):
        diff = a[i, k] - b[j, k]
        s += diff * diff
    return math.sqrt(s)


@njit(cache=True)
def _next_index(z0, y0, lo, hi):
    """Pick the nearer (in first coordinate) of the two frontier atoms."""
    if lo < 0:
        return hi, False
    if hi >= z0.shape[0]:
        return lo, True
    if y0 - z0[lo] <= z0[hi] - y0:
        return lo, True
    return hi, False


@njit(cache=True, parallel=True)
def _slot_sum_nb(Y, Zs, cs, t, scale, p, ip, family, tol):
    NP = Y.shape[0]
    N = Zs.shape[0]
    out = np.zeros(NP)
    z0 = Zs[:, 0]
    cmax = 0.0
    for j in range(N):
        cmax = max(cmax, abs(cs[j]))
    if tol == 0.0:
        for q in prange(NP):
            acc = 0.0
            for j in range(N):
                if cs[j] != 0.0:
                    acc += _factor(_dist(Y, q, Zs, j), t, scale, p, ip, family) * cs[j]
            out[q] = acc
        return out
    for q in prange(NP):
        y0 = Y[q, 0]
        hi = np.searchsorted(z0, y0)
        lo = hi - 1
        acc = 0.0
        accabs = 0.0
        remaining = N
        while remaining > 0:
            j, left = _next_index(z0, y0, lo, hi)
            if left:
                lo -= 1
            else:
                hi += 1
            if tol > 0.0 and (N - remaining) & 15 == 0:
                gap = abs(z0[j] - y0)
                if _factor(gap, t, scale, p, ip, family) * cmax * remaining <= tol * accabs:
                    break
            remaining -= 1
            if cs[j] == 0.0:
                continue
            term = _factor(_dist(Y, q, Zs, j), t, scale, p, ip, family) * cs[j]
            acc += term
            accabs += abs(term)
        out[q] = acc
    return out


@njit(cache=True, parallel=True)
def _weighted_sum_nb(X, Ys, a, t, mlam, ip, mode, tol):
    P = X.shape[0]
    N = Ys.shape[0]
    out = np.zeros(P)
    y0s = Ys[:, 0]
    amax = 0.0
    for j in range(N):
        amax = max(amax, abs(a[j]))
    for p in prange(P):
        x0 = X[p, 0]
        hi = np.searchsorted(y0s, x0)
        lo = hi - 1
        acc = 0.0
        accabs = 0.0
        remaining = N
        while remaining > 0:
            j, left = _next_index(y0s, x0, lo, hi)
            if left:
                lo -= 1
            else:
                hi += 1
            gap = abs(y0s[j] - x0)
            if mode == WEIGHT_CONE:
                if gap > t:
                    break
            elif tol > 0.0 and (N - remaining) & 15 == 0 and _pow(t / (t + gap), mlam, ip) * amax * remaining <= tol * accabs:
                break
            remaining -= 1
            if a[j] == 0.0:
                continue
            d = _dist(X, p, Ys, j)
            if mode == WEIGHT_THETA:
                term = _pow(t / (t + d), mlam, ip) * a[j]
            elif d <= t:
                term = a[j]
            else:
                term = 0.0
            acc += term
            accabs += abs(term)
        out[p] = acc
    return out


@njit(cache=True, parallel=True)
def _diff_weighted_sum_nb(X, Xp, Y, a, t, half_mlam, ip):
    P = X.shape[0]
    out = np.zeros(P)
    for p in prange(P):
        acc = 0.0
        for j in range(Y.shape[0]):
            if a[j] == 0.0:
                continue
            d1 = _dist(X, p, Y, j)
            d2 = _dist(Xp, p, Y, j)
            v = _pow(t / (t + d1), half_mlam, ip) - _pow(t / (t + d2), half_mlam, ip)
            acc += v * v * a[j]
        out[p] = acc
    return out


@njit(cache=True, parallel=True)
def _bad_flags_nb(lo, anc_off, side_i, sides, thresholds):
    T = lo.shape[0]
    D = sides.shape[0]
    n = lo.shape[1]
    bad = np.zeros(T, dtype=np.bool_)
    for s in prange(T):
        for d in range(D):
            L = sides[d]
            dist = np.inf
            for k in range(n):
                off = anc_off[s, d, k]
                jlo = math.floor((lo[s, k] - off) / L) * L + off
                g = min(lo[s, k] - jlo, jlo + L - (lo[s, k] + side_i))
                if g < dist:
                    dist = g
            if dist <= thresholds[d]:
                bad[s] = True
                break
    return bad


# --------------------------------------------------------------------------
# numpy versions
# --------------------------------------------------------------------------

def _pairwise(A, B):
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _slot_sum_np(Y, Zs, cs, t, scale, p, ip, family, tol):
    d = _pairwise(Y, Zs)
    if family == POISSON:
        F = scale / (t + d) ** p
    else:
        F = scale * np.exp(-(d / t) ** 2)
    return F @ cs


def _weighted_sum_np(X, Ys, a, t, mlam, ip, mode, tol):
    d = _pairwise(X, Ys)
    if mode == WEIGHT_THETA:
        W = (t / (t + d)) ** mlam
    else:
        W = (d <= t).astype(float)
    return W @ a


def _diff_weighted_sum_np(X, Xp, Y, a, t, half_mlam, ip):
    V = (t / (t + _pairwise(X, Y))) ** half_mlam - (t / (t + _pairwise(Xp, Y))) ** half_mlam
    return (V * V) @ a


def _bad_flags_np(lo, anc_off, side_i, sides, thresholds):
    L = sides[None, :, None]
    jlo = np.floor((lo[:, None, :] - anc_off) / L) * L + anc_off
    gap = np.minimum(lo[:, None, :] - jlo, jlo + L - (lo[:, None, :] + side_i))
    dist = gap.min(axis=2)
    return (dist <= thresholds[None, :]).any(axis=1)


numba_impl = {
    "slot_sum": _slot_sum_nb,
    "weighted_sum": _weighted_sum_nb,
    "diff_weighted_sum": _diff_weighted_sum_nb,
    "bad_flags": _bad_flags_nb,
}
numpy_impl = {
    "slot_sum": _slot_sum_np,
    "weighted_sum": _weighted_sum_np,
    "diff_weighted_sum": _diff_weighted_sum_np,
    "bad_flags": _bad_flags_np,
}

_active = numba_impl if HAS_NUMBA else numpy_impl


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sort_first(points, values):
    """Order atoms by first coordinate (required by the pruning window)."""
    order = np.argsort(points[:, 0], kind="stable")
    return _f64(points[order]), _f64(values[order])


def slot_scale(t, m, alpha, family, gauss_c):
    """(scale, exponent) so that a slot factor is scale / (t+d)^p or scale * exp(-(d/t)^2)."""
    if family == POISSON:
        return t ** alpha, m + alpha
    return gauss_c * t ** (-m), 0.0


def slot_sum(Y, Z, c, t, m, alpha, family, gauss_c, tol=0.0, presorted=False):
    """``out[p] = sum_z factor_t(|Y_p - z|) c_z`` for one kernel slot."""
    if not presorted:
        Z, c = sort_first(Z, c)
    scale, p = slot_scale(float(t), float(m), float(alpha), family, float(gauss_c))
    return _active["slot_sum"](_f64(Y), Z, c, float(t), float(scale), float(p),
                               int_exponent(p), int(family), float(tol))


def weighted_sum(X, Y, a, t, mlam, mode=WEIGHT_THETA, tol=0.0, presorted=False):
    """``out[p] = sum_j w_t(X_p, Y_j) a_j`` with the off-cone or the cone weight."""
    if not presorted:
        Y, a = sort_first(Y, a)
    return _active["weighted_sum"](_f64(X), Y, a, float(t), float(mlam), int_exponent(mlam),
                                   int(mode), float(tol))


def diff_weighted_sum(X, Xp, Y, a, t, half_mlam):
    return _active["diff_weighted_sum"](_f64(X), _f64(Xp), _f64(Y), _f64(a), float(t),
                                        float(half_mlam), int_exponent(half_mlam))


def bad_flags(lo, anc_off, side_i, sides, thresholds):
    return _active["bad_flags"](_f64(lo), _f64(anc_off), float(side_i), _f64(sides), _f64(thresholds))
