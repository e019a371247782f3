"""Square-function operators over atomic measures.

Space integrals are exact weighted sums over atoms; only the scale variable t
is discretised, by a log-uniform midpoint rule for dt/t. The multilinear form
is evaluated through the product structure of the kernel,

    Theta_t(y) = amplitude * prod_i sum_z phi_t(|y - z|) c_i(z),

which costs kappa * N per point instead of N^kappa. ``gstar.oracle`` holds the
unfactored reference sums used to check every function here.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .measure import AtomicMeasure, Cube, SampledFunction, maximal_function  # noqa: F401


@dataclass(frozen=True)
class QuadratureSpec:
    t_min: float
    t_max: float
    nodes_per_decade: int = 32
    prune_tol: float = 0.0

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if int(self.nodes_per_decade) < 4:
            raise ValueError("nodes_per_decade must be >= 4")
        if self.prune_tol < 0:
            raise ValueError("prune_tol must be nonnegative")
        object.__setattr__(self, "nodes_per_decade", int(self.nodes_per_decade))

    @classmethod
    def default_for(cls, mu, nodes_per_decade=32, prune_tol=0.0):
        """t_min = separation/8, t_max = 8 (diameter + 1)."""
        sep = mu.min_separation()
        t_min = sep / 8.0 if np.isfinite(sep) and sep > 0 else 2.0 ** -6
        t_max = 8.0 * (mu.diameter() + 1.0)
        return cls(t_min, t_max, nodes_per_decade, prune_tol)

    def refined(self, factor=8, widen=8.0):
        return QuadratureSpec(self.t_min / widen, self.t_max * widen,
                              self.nodes_per_decade * factor, self.prune_tol)

    def edges(self):
        cells = max(1, math.ceil(self.nodes_per_decade * math.log10(self.t_max / self.t_min) - 1e-9))
        return np.exp(np.linspace(math.log(self.t_min), math.log(self.t_max), cells + 1))

    def nodes(self):
        e = self.edges()
        return np.sqrt(e[:-1] * e[1:])

    def weights(self):
        """Exact dt/t measure of each cell: log(t_{j+1}) - log(t_j)."""
        return np.diff(np.log(self.edges()))

    def to_json(self):
        return {"t_min": self.t_min, "t_max": self.t_max,
                "nodes_per_decade": self.nodes_per_decade, "prune_tol": self.prune_tol}

    @classmethod
    def from_json(cls, d, mu=None):
        if mu is not None and ("t_min" not in d or "t_max" not in d):
            base = cls.default_for(mu)
            d = {"t_min": base.t_min, "t_max": base.t_max, **d}
        return cls(float(d["t_min"]), float(d["t_max"]), int(d.get("nodes_per_decade", 32)),
                   float(d.get("prune_tol", 0.0)))


@dataclass(frozen=True)
class LambdaParams:
    lam: float
    m: float

    def __post_init__(self):
        if not self.lam > 1:
            raise ValueError("lambda must exceed 1")
        if not self.m > 0:
            raise ValueError("m must be positive")

    @property
    def mlam(self):
        return self.m * self.lam

    def to_json(self):
        return {"lambda": self.lam, "m": self.m}


# --------------------------------------------------------------------------
# slots: each multilinear argument becomes (points, coefficients)
# --------------------------------------------------------------------------

def _slot(arg):
    if isinstance(arg, SampledFunction):
        return arg.base.points, arg.values * arg.base.weights
    if isinstance(arg, AtomicMeasure):
        return arg.points, arg.weights
    raise TypeError(f"expected SampledFunction or AtomicMeasure, got {type(arg).__name__}")


class _Slots:
    """Pre-sorted slot data so repeated node evaluations skip the sort."""

    def __init__(self, spec, args):
        if len(args) != spec.kappa:
            raise ValueError(f"kernel is {spec.kappa}-linear, got {len(args)} arguments")
        self.spec = spec
        self.data = [K.sort_first(*_slot(a)) for a in args]
        self.zero = any(not np.any(c) for _, c in self.data)

    def theta(self, Y, t, tol=0.0):
        Y = np.atleast_2d(Y)
        if self.zero:
            return np.zeros(Y.shape[0])
        s = self.spec
        out = np.full(Y.shape[0], s.amplitude)
        for Z, c in self.data:
            out *= K.slot_sum(Y, Z, c, t, s.m, s.alpha, s.family_code, s.gauss_c,
                              tol, presorted=True)
        return out


def _as_points(x, n):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 0 or (X.ndim == 1 and X.shape[0] == n)
    return np.atleast_2d(X.reshape(-1, n)), single


def theta(spec, mu, fs, y, t, prune_tol=0.0):
    """Theta_t^mu(f_1..f_k)(y) for a point or an array of points."""
    if not t > 0:
        raise ValueError("t must be positive")
    Y, single = _as_points(y, mu.n)
    v = _Slots(spec, list(fs)).theta(Y, t, prune_tol)
    return float(v[0]) if single else v


def theta_measures(spec, nus, y, t, prune_tol=0.0):
    """Theta_t(nu_1..nu_k)(y) for signed atomic measures."""
    if not t > 0:
        raise ValueError("t must be positive")
    nus = list(nus)
    Y, single = _as_points(y, nus[0].n)
    v = _Slots(spec, nus).theta(Y, t, prune_tol)
    return float(v[0]) if single else v


def l_t(spec, mu, f, x, t):
    """int t^(a/4) / (t + |x - z|)^(m + a/4) |f(z)| dmu(z)."""
    if not t > 0:
        raise ValueError("t must be positive")
    X, single = _as_points(x, mu.n)
    vals = f.values if isinstance(f, SampledFunction) else np.asarray(f, dtype=float)
    c = np.abs(vals) * mu.weights
    v = K.slot_sum(X, mu.points, c, t, spec.m, spec.alpha / 4.0, K.POISSON, 0.0)
    return float(v[0]) if single else v


def _density(slots, mu, t, tol):
    """|Theta_t(y)|^2 mu({y}) / t^m on the atoms of mu."""
    th = slots.theta(mu.points, t, tol)
    return th * th * mu.weights / t ** slots.spec.m


def u_t(spec, lp, mu, fs, x, t, prune_tol=0.0):
    """Single-scale square function U_t at x."""
    if not t > 0:
        raise ValueError("t must be positive")
    X, single = _as_points(x, mu.n)
    slots = _Slots(spec, list(fs))
    a = _density(slots, mu, t, prune_tol)
    Ys, As = K.sort_first(mu.points, a)
    s2 = K.weighted_sum(X, Ys, As, t, lp.mlam, K.WEIGHT_THETA, prune_tol, presorted=True)
    v = np.sqrt(np.maximum(s2, 0.0))
    return float(v[0]) if single else v


def node_densities(spec, mu, args, quad, node_mask=None):
    """|Theta_t|^2 mu / t^m on the atoms at each selected node: array (nodes, atoms).

    Independent of the evaluation point, so callers evaluating many points
    against the same arguments can reuse it.
    """
    nodes = quad.nodes()
    if node_mask is None:
        node_mask = np.ones(nodes.shape[0], dtype=bool)
    slots = _Slots(spec, list(args))
    out = np.zeros((nodes.shape[0], mu.size))
    if slots.zero or mu.size == 0:
        return out
    for j in np.flatnonzero(node_mask):
        out[j] = _density(slots, mu, nodes[j], quad.prune_tol)
    return out


def profile_from_densities(lp, mu, dens, x, quad, mode=K.WEIGHT_THETA):
    X, _ = _as_points(x, mu.n)
    nodes = quad.nodes()
    out = np.zeros((X.shape[0], nodes.shape[0]))
    for j in np.flatnonzero(np.any(dens != 0.0, axis=1)):
        Ys, As = K.sort_first(mu.points, dens[j])
        out[:, j] = K.weighted_sum(X, Ys, As, nodes[j], lp.mlam, mode, quad.prune_tol, presorted=True)
    return out


def node_profile(spec, lp, mu, args, x, quad, node_mask=None, mode=K.WEIGHT_THETA):
    """u_t(x)^2 at each selected quadrature node: array (points, nodes).

    ``args`` are SampledFunctions on ``mu`` or signed measures; the y-integral
    always runs over the atoms of ``mu``.
    """
    dens = node_densities(spec, mu, args, quad, node_mask)
    return profile_from_densities(lp, mu, dens, x, quad, mode)


def _integrate(profile, quad):
    return np.sqrt(np.maximum(profile @ quad.weights(), 0.0))


def _finish(v, single):
    return float(v[0]) if single else v


def g_star(spec, lp, mu, fs, x, quad, return_nodes=False):
    """g*_{lambda,mu}(f_1..f_k)(x) over the quadrature window."""
    _, single = _as_points(x, mu.n)
    prof = node_profile(spec, lp, mu, fs, x, quad)
    v = _finish(_integrate(prof, quad), single)
    return (v, prof) if return_nodes else v


def g_star_measures(spec, lp, mu, nus, x, quad, densities=None):
    """g*_lambda(nu_1..nu_k)(x); the y-integral is against ``mu``.

    ``densities`` from ``node_densities`` skips recomputing Theta.
    """
    _, single = _as_points(x, mu.n)
    dens = node_densities(spec, mu, nus, quad) if densities is None else densities
    return _finish(_integrate(profile_from_densities(lp, mu, dens, x, quad), quad), single)


def g_star_truncated(spec, lp, mu, fs, x, t0, quad):
    """Scales t >= t0 only (nodes at or above t0)."""
    if not (quad.t_min <= t0 <= quad.t_max):
        raise ValueError("t0 must lie in the quadrature window")
    _, single = _as_points(x, mu.n)
    mask = quad.nodes() >= t0
    return _finish(_integrate(node_profile(spec, lp, mu, fs, x, quad, mask), quad), single)


def g_star_local(spec, lp, mu, fs, x, Q, quad):
    """Scales t < l(Q) only."""
    side = Q.side if isinstance(Q, Cube) else float(Q)
    _, single = _as_points(x, mu.n)
    mask = quad.nodes() < side
    return _finish(_integrate(node_profile(spec, lp, mu, fs, x, quad, mask), quad), single)


def lusin_area(spec, mu, fs, x, quad, lp=None):
    """Cone version: y restricted to |x - y| <= t."""
    lp = lp or LambdaParams(2.0, spec.m)
    _, single = _as_points(x, mu.n)
    prof = node_profile(spec, lp, mu, fs, x, quad, mode=K.WEIGHT_CONE)
    return _finish(_integrate(prof, quad), single)


def split_functions(fs, Q, splits):
    """f_i^0 = f_i 1_{2Q}, f_i^inf = f_i 1_{(2Q)^c} according to ``splits``."""
    out = []
    for f, r in zip(fs, splits):
        inside = Q.dilate(2.0).contains(f.base.points)
        out.append(f.restrict(inside if r == 0 else ~inside))
    return out


def parse_splits(splits):
    parsed = []
    for r in splits:
        if r in (0, "0"):
            parsed.append(0)
        elif r in ("inf", "∞") or (isinstance(r, float) and math.isinf(r)):
            parsed.append(math.inf)
        else:
            raise ValueError(f"split entries must be 0 or inf, got {r!r}")
    if not any(math.isinf(r) for r in parsed):
        raise ValueError("at least one slot must be the far (inf) part")
    return parsed


def tail_T(spec, lp, mu, fs, splits, x, xp, Q, c0, quad):
    """Tail operator with the difference weight V_{t,y}(x, x'), t >= c0 l(Q).

    ``fs`` are the unsplit functions; ``splits`` picks 0 (near, 1_{2Q}) or
    inf (far) per slot.
    """
    splits = parse_splits(splits)
    pieces = split_functions(fs, Q, splits)
    X, single = _as_points(x, mu.n)
    XP, _ = _as_points(xp, mu.n)
    if XP.shape[0] == 1 and X.shape[0] > 1:
        XP = np.repeat(XP, X.shape[0], axis=0)
    slots = _Slots(spec, pieces)
    nodes, w = quad.nodes(), quad.weights()
    acc = np.zeros(X.shape[0])
    if not slots.zero:
        for j in np.flatnonzero(nodes >= c0 * Q.side):
            t = nodes[j]
            a = _density(slots, mu, t, quad.prune_tol)
            acc += w[j] * K.diff_weighted_sum(X, XP, mu.points, a, t, lp.mlam / 2.0)
    return _finish(np.sqrt(np.maximum(acc, 0.0)), single)
