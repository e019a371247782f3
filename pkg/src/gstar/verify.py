"""Numerical checks for the pointwise lemmas and the hypotheses of the local T1 argument.

A "lesssim" inequality is checked by a calibration/test protocol: ratios
LHS/RHS are sampled from two disjoint seed streams of the same distribution,
the constant is fixed at twice the calibration maximum, and the check passes
when the test maximum stays under it. A ratio with LHS = RHS = 0 is skipped.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .measure import AtomicMeasure, Cube, SampledFunction, default_radius_grid, mass, maximal_function, variation
from .operator import (LambdaParams, QuadratureSpec, g_star_local, g_star_measures, g_star_truncated,
                       l_t, node_densities, tail_T, u_t)


class HypothesisError(ValueError):
    """Kernel and lambda parameters outside the range the lemmas assume."""


@dataclass
class InequalityReport:
    lemma: str
    calibration_max: float
    test_max: float
    C: float
    passed: bool
    witness: dict = field(default_factory=dict)
    samples: tuple = (0, 0)
    skipped: int = 0

    def row(self):
        return [self.lemma, self.passed, self.C, self.calibration_max, self.test_max]

    def to_json(self):
        return {"lemma": self.lemma, "pass": self.passed, "C": self.C,
                "calibration_max": self.calibration_max, "test_max": self.test_max,
                "samples": list(self.samples), "skipped": self.skipped, "witness": self.witness}


ROLLUP_HEADER = ["lemma", "pass", "C", "calibration_max", "test_max"]


def seed_streams(seed):
    """Calibration and test generators from disjoint children of one seed."""
    cal, test = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(cal), np.random.default_rng(test)


def _max_ratio(pairs):
    best, wit, skipped, used = 0.0, {}, 0, 0
    for lhs, rhs, info in pairs:
        if lhs == 0.0 and rhs == 0.0:
            skipped += 1
            continue
        used += 1
        r = math.inf if rhs == 0.0 else lhs / rhs
        if r > best:
            best, wit = r, info
    return best, wit, skipped, used


def protocol(lemma, draw, samples, seed):
    """``draw(rng, count)`` yields (lhs, rhs, info) triples."""
    cal_rng, test_rng = seed_streams(seed)
    cal, _, s1, u1 = _max_ratio(draw(cal_rng, samples))
    test, wit, s2, u2 = _max_ratio(draw(test_rng, samples))
    C = 2.0 * cal
    return InequalityReport(lemma, cal, test, C, bool(test <= C), wit, (u1, u2), s1 + s2)


# --------------------------------------------------------------------------
# suite helpers
# --------------------------------------------------------------------------

def power_bounded_measure(rng, size, n=1, m=1.0):
    """Jittered lattice in [0,1]^n with weights ~ spacing^m, so mu(B(x,r)) <~ r^m for r >= spacing."""
    per = max(1, round(size ** (1.0 / n)))
    h = 1.0 / per
    grid = np.stack(np.meshgrid(*[np.arange(per)] * n, indexing="ij"), axis=-1).reshape(-1, n)
    pts = (grid + 0.5 + rng.uniform(-0.3, 0.3, size=grid.shape)) * h
    return AtomicMeasure(pts, h ** m * rng.uniform(0.5, 1.5, size=len(pts))), h


def random_functions(rng, mu, kappa, nonnegative=True):
    """Gaussian values (absolute by default) on a random half of the atoms, never all zero.

    Nonnegative inputs are the adversarial case for bounds whose right side
    only sees |f|: nothing cancels inside Theta.
    """
    out = []
    for _ in range(kappa):
        keep = rng.random(mu.size) < 0.5
        keep[rng.integers(mu.size)] = True
        v = rng.standard_normal(mu.size)
        out.append(SampledFunction(mu, np.where(keep, np.abs(v) if nonnegative else v, 0.0)))
    return out


def _loguniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _direction(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _corrupted_l(spec, mu, f, x, t, shift):
    c = np.abs(f.values) * mu.weights
    return float(K.slot_sum(np.atleast_2d(x), mu.points, c, t, spec.m + shift, spec.alpha / 4.0,
                            K.POISSON, 0.0)[0])


def _require_hypotheses(spec, lp):
    if not spec.theorem_hypotheses(lp.lam):
        raise HypothesisError("need lambda > 2 kappa and 0 < alpha <= m (lambda - 2 kappa)")


# --------------------------------------------------------------------------
# Lemma U
# --------------------------------------------------------------------------

def _offset_ratio(rng):
    """|x - anchor| / t: log-uniform on [1e-2, 1] or Pareto(1) beyond 1, half the time each.

    The unbounded tail is what lets a bound with the wrong far-field decay
    show up as a calibration/test mismatch.
    """
    if rng.random() < 0.5:
        return _loguniform(rng, 1e-2, 1.0)
    return 1.0 / (1.0 - rng.random())


def _draw_u_point(rng, mu, t_floor):
    t = _loguniform(rng, t_floor, 10.0 * (mu.diameter() + t_floor))
    anchor = mu.points[rng.integers(mu.size)]
    x = anchor + t * _offset_ratio(rng) * _direction(rng, mu.n)
    return x, t


def check_lemma_U(spec, lp, mu, spacing, samples=200, seed=0, corrupt_shift=0.0, lipschitz=True):
    """Domination U_t <~ prod L_t and the Lipschitz bound.

    t is log-uniform from four atom spacings up, where the atoms behave like
    a power-bounded measure at scale t.

    ``corrupt_shift`` adds to the decay exponent of L_t (negative control).
    Returns (domination report, Lipschitz report or None).
    """
    _require_hypotheses(spec, lp)
    floor = 4.0 * spacing

    def L(f, x, t):
        if corrupt_shift:
            return _corrupted_l(spec, mu, f, x, t, corrupt_shift)
        return l_t(spec, mu, f, x, t)

    def L_many(f, X, t):
        if corrupt_shift:
            c = np.abs(f.values) * mu.weights
            return K.slot_sum(X, mu.points, c, t, spec.m + corrupt_shift, spec.alpha / 4.0, K.POISSON, 0.0)
        return np.atleast_1d(l_t(spec, mu, f, X, t))

    def draw_dom(rng, count):
        for _ in range(count):
            fs = random_functions(rng, mu, spec.kappa)
            x, t = _draw_u_point(rng, mu, floor)
            lhs = u_t(spec, lp, mu, fs, x, t)
            rhs = math.prod(L(f, x, t) for f in fs)
            yield lhs, rhs, {"x": list(x), "t": t}

    def draw_lip(rng, count):
        thetas = np.linspace(0.0, 1.0, 9)
        for _ in range(count):
            fs = random_functions(rng, mu, spec.kappa)
            x0, t = _draw_u_point(rng, mu, floor)
            h = t * _loguniform(rng, 1e-3, 1.0)
            x = x0 + h * _direction(rng, mu.n)
            lhs = abs(u_t(spec, lp, mu, fs, x, t) - u_t(spec, lp, mu, fs, x0, t))
            # some point on the segment: take the largest right-hand side
            seg = x0 + thetas[:, None] * (x - x0)
            rhs = float(np.prod([L_many(f, seg, t) for f in fs], axis=0).max()) * h / t
            yield lhs, rhs, {"x": list(x), "x0": list(x0), "t": t}

    tag = "" if not corrupt_shift else f"/corrupt{corrupt_shift:g}"
    dom = protocol("U-domination" + tag, draw_dom, samples, seed)
    lip = protocol("U-lipschitz" + tag, draw_lip, samples, seed + 1) if lipschitz else None
    return dom, lip


def negative_control_U(spec, lp, mu, spacing, samples=200, seed=0, shift=1.0, replicates=16):
    """Replicate seed pairs of the corrupted domination bound; detected when any replicate fails."""
    reports = [check_lemma_U(spec, lp, mu, spacing, samples, seed + 1000 * r, shift, lipschitz=False)[0]
               for r in range(replicates)]
    return any(not r.passed for r in reports), reports


# --------------------------------------------------------------------------
# Lemma T
# --------------------------------------------------------------------------

SPLIT_PATTERNS = ((math.inf, 0), (math.inf, math.inf), (0, math.inf))


def _pattern_name(p):
    return "(" + ",".join("inf" if math.isinf(r) else "0" for r in p) + ")"


def check_lemma_T(spec, lp, mu, Q, c0=1.0, samples=200, seed=0, quad=None, radius_grid=None,
                  patterns=SPLIT_PATTERNS):
    """Tail operator against prod M_mu f_i(x) for x, x' in Q; one report per split pattern."""
    if spec.kappa != 2 and patterns is SPLIT_PATTERNS:
        raise ValueError("default split patterns are bilinear")
    quad = quad or QuadratureSpec(c0 * Q.side, 8.0 * (mu.diameter() + Q.side), 16)
    radius_grid = default_radius_grid(mu) if radius_grid is None else radius_grid
    lo = Q.lower

    def draw_for(pattern):
        def draw(rng, count):
            for _ in range(count):
                fs = random_functions(rng, mu, spec.kappa)
                x = lo + Q.side * rng.random(mu.n)
                xp = lo + Q.side * rng.random(mu.n)
                lhs = tail_T(spec, lp, mu, fs, pattern, x, xp, Q, c0, quad)
                rhs = math.prod(maximal_function(mu, f, x, radius_grid) for f in fs)
                yield lhs, rhs, {"x": list(x), "xp": list(xp)}
        return draw

    return [protocol("T" + _pattern_name(p), draw_for(p), samples, seed + i)
            for i, p in enumerate(patterns)]


# --------------------------------------------------------------------------
# level sets
# --------------------------------------------------------------------------

@dataclass
class LevelSetResult:
    xi: float
    values: np.ndarray
    inside: np.ndarray
    decay: InequalityReport

    def to_json(self):
        return {"xi": self.xi, "count": int(self.inside.sum()), "decay": self.decay.to_json()}


def decay_exponent(m, p=2.0):
    """2m - eps with eps = m (1 - 1/p) / 2, inside the allowed range (0, m(1 - 1/p))."""
    return 2.0 * m - m * (1.0 - 1.0 / p) / 2.0


def level_set(spec, lp, mu, fs, t0, xi, grid, quad, ray=None, p=2.0):
    """Omega_xi on ``grid`` plus a far-field decay check along ``ray``.

    ``ray`` is a list of points; even positions calibrate C in
    g* <= C (t0 + d)^-(2m - eps), odd positions test it.
    """
    vals = np.atleast_1d(g_star_truncated(spec, lp, mu, fs, grid, t0, quad))
    inside = vals > xi
    if ray is None:
        ray = far_field_ray(mu)
    ray = np.atleast_2d(ray)
    rv = np.atleast_1d(g_star_truncated(spec, lp, mu, fs, ray, t0, quad))
    lo, hi = mu.bounding_box()
    center, radius = (lo + hi) / 2.0, float(np.linalg.norm(hi - lo)) / 2.0
    d = np.maximum(np.linalg.norm(ray - center, axis=1) - radius, 0.0)
    bound = (t0 + d) ** -decay_exponent(spec.m, p)
    ratios = rv / bound
    cal, test = float(ratios[0::2].max()), float(ratios[1::2].max())
    rep = InequalityReport("Omega-decay", cal, test, 2.0 * cal, bool(test <= 2.0 * cal),
                           {"index": int(np.argmax(ratios))}, (len(ratios[0::2]), len(ratios[1::2])))
    return LevelSetResult(float(xi), vals, inside, rep)


def far_field_ray(mu, count=20, reach=100.0):
    """Points along one axis from the support edge out to ``reach`` diameters, geometrically spaced."""
    lo, hi = mu.bounding_box()
    center = (lo + hi) / 2.0
    scale = max(mu.diameter(), 1e-3)
    steps = np.geomspace(0.5 * scale, reach * scale, count)
    e = np.zeros(mu.n)
    e[0] = 1.0
    return center + np.outer(steps + (hi[0] - lo[0]) / 2.0, e)


# --------------------------------------------------------------------------
# testing condition and big piece
# --------------------------------------------------------------------------

@dataclass
class TestingConditionResult:
    C0: float
    C0_grid: float
    passed: bool
    h_fraction: float
    values: np.ndarray       # local g* at the atoms of Q (nan off Q)
    zeta_grid: np.ndarray

    def to_json(self):
        return {"C0": self.C0, "C0_grid": self.C0_grid, "pass": self.passed,
                "h_fraction": self.h_fraction, "zeta_grid": [float(z) for z in self.zeta_grid]}


def local_gstar_on_cube(spec, lp, mu, Q, quad):
    """g*_{lambda,mu,Q}(1_Q, ..., 1_Q) at the atoms of Q."""
    inQ = Q.contains(mu.points)
    ones = SampledFunction(mu, inQ.astype(float))
    vals = np.full(mu.size, np.nan)
    if inQ.any():
        vals[inQ] = np.atleast_1d(g_star_local(spec, lp, mu, [ones] * spec.kappa, mu.points[inQ], Q, quad))
    return vals


def adversarial_h(mu, Q, values, delta0):
    """Atoms of Q with the largest local g*, up to a delta0 fraction of mu(Q)."""
    inQ = Q.contains(mu.points)
    idx = np.flatnonzero(inQ)
    order = idx[np.argsort(-values[idx], kind="stable")]
    budget = delta0 * mu.weights[inQ].sum()
    H = np.zeros(mu.size, dtype=bool)
    used = 0.0
    for i in order:
        if used + mu.weights[i] > budget:
            break
        H[i] = True
        used += mu.weights[i]
    return H


def check_testing_condition(spec, lp, mu, Q, H, p0=2.0, delta0=0.5, quad=None, values=None,
                            zeta_count=64, C0_bound=math.inf):
    """Exact sup over zeta of zeta^p0 mu({x in Q minus H: g* > zeta}) / mu(Q).

    The sup is approached from below each attained value v, so it equals
    max_v v^p0 mu({g* >= v}) / mu(Q). The geometric-grid sup is reported too.
    """
    quad = quad or QuadratureSpec.default_for(mu)
    inQ = Q.contains(mu.points)
    H = np.zeros(mu.size, dtype=bool) if H is None else np.asarray(H, dtype=bool)
    muQ = float(mu.weights[inQ].sum())
    if muQ == 0.0:
        raise ValueError("cube carries no mass")
    hfrac = float(mu.weights[inQ & H].sum()) / muQ
    if hfrac > delta0:
        raise ValueError("mu(H_Q) exceeds delta0 mu(Q)")
    vals = local_gstar_on_cube(spec, lp, mu, Q, quad) if values is None else np.asarray(values)
    keep = inQ & ~H
    v, w = vals[keep], mu.weights[keep]
    C0 = 0.0
    grid = np.zeros(0)
    C0_grid = 0.0
    if v.size:
        order = np.argsort(v)[::-1]
        tail = np.cumsum(w[order])             # mu(g >= v_k) over sorted distinct-or-not values
        vs = v[order]
        # ties: mass at or above v is the cumulative mass through the last equal value
        last = np.searchsorted(-vs, -vs, side="right") - 1
        C0 = float(np.max(vs ** p0 * tail[last]) / muQ)
        pos = v[v > 0]
        if pos.size:
            grid = np.geomspace(pos.min(), pos.max(), zeta_count) if pos.max() > pos.min() else pos[:1]
            C0_grid = float(max(z ** p0 * w[v > z].sum() for z in grid) / muQ)
    return TestingConditionResult(C0, C0_grid, bool(C0 <= C0_bound), hfrac, vals, grid)


@dataclass
class BigPieceResult:
    zeta0: float
    H: np.ndarray
    S: np.ndarray
    G: np.ndarray
    mass_Q: float
    mass_H: float
    mass_G: float
    bound: float

    @property
    def holds(self):
        return self.mass_G >= self.bound

    def to_json(self):
        return {"zeta0": self.zeta0, "mass_Q": self.mass_Q, "mass_H": self.mass_H, "mass_G": self.mass_G,
                "bound": self.bound, "holds": self.holds,
                "G_count": int(self.G.sum()), "S_count": int(self.S.sum()), "H_count": int(self.H.sum())}


def zeta0(C0, delta0, p0):
    return (2.0 * C0 / (1.0 - delta0)) ** (1.0 / p0)


def big_piece(mu, Q, H, p0, delta0, C0, values):
    """S_Q = {g* > zeta0}, G_Q = Q minus (H_Q union S_Q), with zeta0^p0 = 2 C0 / (1 - delta0)."""
    if not 0 <= delta0 < 1:
        raise ValueError("delta0 must lie in [0, 1)")
    inQ = Q.contains(mu.points)
    H = np.zeros(mu.size, dtype=bool) if H is None else np.asarray(H, dtype=bool) & inQ
    z = zeta0(C0, delta0, p0)
    vals = np.where(inQ, np.asarray(values, dtype=float), -np.inf)
    S = inQ & (vals > z)
    G = inQ & ~H & ~S
    mQ = float(mu.weights[inQ].sum())
    return BigPieceResult(z, H, S, G, mQ, float(mu.weights[H].sum()), float(mu.weights[G].sum()),
                          (1.0 - delta0) / 2.0 * mQ)


# --------------------------------------------------------------------------
# good lambda
# --------------------------------------------------------------------------

@dataclass
class GoodLambdaResult:
    delta: float
    fraction: float
    delta_star: float
    xi_grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    def to_json(self):
        return {"delta": self.delta, "fraction_holding": self.fraction, "delta_star": self.delta_star,
                "xi_grid": [float(x) for x in self.xi_grid],
                "lhs": [float(x) for x in self.lhs], "rhs": [float(x) for x in self.rhs]}


def _good_lambda_sides(g, M, w, eps, delta, xis, factor):
    lhs = np.array([w[(g > (1.0 + eps) * x) & (M <= delta * x)].sum() for x in xis])
    rhs = np.array([factor * w[g > x].sum() for x in xis])
    return lhs, rhs


def check_good_lambda(spec, lp, mu, fs, t0, eps, delta, theta, rho0, quad, xi_grid=None,
                      xi_count=40, radius_grid=None, values=None, iterations=80):
    """mu({g* > (1+eps) xi, prod M f_i <= delta xi}) <= (1 - theta/(16 rho0)) mu({g* > xi}) on the atoms."""
    g = np.atleast_1d(g_star_truncated(spec, lp, mu, fs, mu.points, t0, quad)) if values is None else values
    M = np.prod([np.atleast_1d(maximal_function(mu, f, mu.points, radius_grid)) for f in fs], axis=0)
    w = mu.weights
    if xi_grid is None:
        pos = g[g > 0]
        lo, hi = (pos.min(), pos.max()) if pos.size else (1.0, 2.0)
        xi_grid = np.geomspace(lo / 2.0, hi, xi_count) if hi > lo else np.array([lo])
    factor = 1.0 - theta / (16.0 * rho0)

    def holds(d):
        lhs, rhs = _good_lambda_sides(g, M, w, eps, d, xi_grid, factor)
        return bool(np.all(lhs <= rhs))

    lhs, rhs = _good_lambda_sides(g, M, w, eps, delta, xi_grid, factor)
    frac = float(np.mean(lhs <= rhs))
    # bisection in log(delta): holds() is monotone (smaller delta shrinks the left side)
    lo, hi = -60.0, 60.0
    if holds(math.exp(hi)):
        star = math.exp(hi)
    elif not holds(math.exp(lo)):
        star = 0.0
    else:
        for _ in range(iterations):
            mid = (lo + hi) / 2.0
            if holds(math.exp(mid)):
                lo = mid
            else:
                hi = mid
        star = math.exp(lo)
    return GoodLambdaResult(float(delta), frac, star, np.asarray(xi_grid), lhs, rhs)


# --------------------------------------------------------------------------
# pointwise bounds for the Calderón–Zygmund pieces
# --------------------------------------------------------------------------

def _piece_measures(cz, mu, i):
    """(beta_i, w_i nu, phi_i mu) as signed measures."""
    W = cz.weights[i]
    wnu = AtomicMeasure(cz.support, W * cz.nu_on_support, signed=True)
    R = cz.companions[i]
    phi_mu = AtomicMeasure(mu.points, cz.coefficients[i] * R.contains(mu.points) * mu.weights, signed=True)
    return cz.beta(i), wnu, phi_mu


def _dist_to(x, c):
    return float(np.linalg.norm(np.asarray(x) - np.asarray(c)))


POINTWISE_BOUNDS = ("b-g", "b-var", "b-b", "b-w", "w-w")


def _admissible(kind, x, Q1, R1, Q2, R2):
    x = np.asarray(x)[None]
    out4R1 = not R1.dilate(4.0).contains(x)[0]
    if kind in ("b-g", "b-var"):
        return out4R1
    if kind == "b-b":
        return out4R1 and not R2.dilate(4.0).contains(x)[0]
    if kind == "b-w":
        return bool(R2.dilate(4.0).contains(x)[0]) and out4R1 and not Q2.dilate(4.0).contains(x)[0]
    return not Q1.dilate(2.0).contains(x)[0] and not Q2.dilate(2.0).contains(x)[0]


def check_pointwise_beta(cz1, cz2, nu1, nu2, spec, lp, mu, quad, samples=200, seed=0, kinds=POINTWISE_BOUNDS,
                         reach=4.0, max_tries=50):
    """The five pointwise bounds for beta, phi, w nu pieces, with the calibration/test protocol.

    x is drawn around the relevant companion cube at distance up to
    ``reach`` times the support diameter, rejecting points in the excluded
    region; pieces are redrawn until ``samples`` points are accepted or
    ``max_tries * samples`` attempts are spent. Bounds with an empty
    admissible set are vacuous.
    """
    a = spec.alpha
    m = spec.m
    nu1_abs, nu2_abs = nu1.abs(), nu2.abs()
    g2mu = AtomicMeasure(mu.points, cz2.g * mu.weights, signed=True)
    scale = reach * max(mu.diameter(), 1e-3)

    cache, pcache = {}, {}

    def piece(which, i):
        if (which, i) not in pcache:
            pcache[which, i] = _piece_measures(cz1 if which == 1 else cz2, mu, i)
        return pcache[which, i]

    def gstar(key, args, x):
        # Theta depends on the pieces and t only, not on x
        if key not in cache:
            cache[key] = node_densities(spec, mu, args, quad)
        return g_star_measures(spec, lp, mu, args, x, quad, densities=cache[key])

    def pieces(rng):
        i = int(rng.integers(len(cz1.cubes)))
        j = int(rng.integers(len(cz2.cubes)))
        return i, j

    def draw_for(kind):
        def draw(rng, count):
            if not cz1.cubes or (kind != "b-g" and not cz2.cubes):
                return
            accepted = 0
            for _ in range(max_tries * count):
                if accepted == count:
                    break
                i, j = pieces(rng) if cz2.cubes else (int(rng.integers(len(cz1.cubes))), None)
                Q1, R1 = cz1.cubes[i], cz1.companions[i]
                Q2, R2 = (cz2.cubes[j], cz2.companions[j]) if j is not None else (Q1, R1)
                anchor = R2 if kind == "b-w" else R1
                x = None
                for _ in range(max_tries):
                    if kind == "b-w":
                        cand = np.asarray(R2.center) + 2.0 * R2.side * rng.uniform(-1, 1, mu.n)
                    else:
                        cand = np.asarray(anchor.center) + _loguniform(rng, anchor.side / 4, scale) * _direction(rng, mu.n)
                    if _admissible(kind, cand, Q1, R1, Q2, R2):
                        x = cand
                        break
                if x is None:
                    continue
                accepted += 1
                b1, w1, _ = piece(1, i)
                d1 = _dist_to(x, R1.center)
                nQ1 = variation(nu1_abs, Q1)
                if kind == "b-g":
                    lhs = gstar((kind, i), [b1, g2mu], x)
                    rhs = cz2.xi * R1.side ** (a / 2) / d1 ** (m + a / 2) * b1.total_variation
                elif kind == "b-var":
                    _, _, phi2 = piece(2, j)
                    lhs = gstar((kind, i, j), [b1, phi2], x)
                    rhs = abs(cz2.coefficients[j]) * R1.side ** (a / 2) / d1 ** (m + a / 2) * nQ1
                else:
                    b2, w2, _ = piece(2, j)
                    d2 = _dist_to(x, R2.center)
                    nQ2 = variation(nu2_abs, Q2)
                    f1 = R1.side ** (a / 4) * nQ1 / d1 ** (m + a / 4)
                    if kind == "b-b":
                        lhs = gstar((kind, i, j), [b1, b2], x)
                        rhs = f1 * R2.side ** (a / 4) * nQ2 / d2 ** (m + a / 4)
                    elif kind == "b-w":
                        lhs = gstar((kind, i, j), [b1, w2], x)
                        rhs = f1 * nQ2 / d2 ** m
                    else:
                        lhs = gstar((kind, i, j), [w1, w2], x)
                        rhs = nQ1 / d1 ** m * nQ2 / d2 ** m
                yield float(lhs), float(rhs), {"x": list(map(float, x)), "i": i, "j": j}
        return draw

    return [protocol("pointwise-" + k, draw_for(k), samples, seed + n) for n, k in enumerate(kinds)]
