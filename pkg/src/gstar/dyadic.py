"""Dyadic grids, randomly shifted grids and the martingale machinery on them.

A shifted grid moves the level-k lattice ``2^k (Z^n + [0,1)^n)`` by
``sum_{j_min <= j < k} 2^j w_j`` with bits ``w_j in {0,1}^n``. Levels outside
``[j_min, j_max]`` contribute nothing. With the shift truncated this way every
corner is a dyadic rational, so realized cubes are exact in floating point.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .measure import AtomicMeasure, Cube, SampledFunction


class ShiftSequence:
    """Bits ``w_j`` for ``j_min <= j <= j_max``; row ``j - j_min`` of ``bits``."""

    def __init__(self, j_min, j_max, bits, seed=None):
        j_min, j_max = int(j_min), int(j_max)
        if j_min > j_max:
            raise ValueError("need j_min <= j_max")
        bits = np.asarray(bits, dtype=np.int64)
        if bits.ndim != 2 or bits.shape[0] != j_max - j_min + 1:
            raise ValueError("bits must have one row per level in [j_min, j_max]")
        if np.any((bits != 0) & (bits != 1)):
            raise ValueError("bits must be 0 or 1")
        bits.setflags(write=False)
        self.j_min, self.j_max, self.bits, self.seed = j_min, j_max, bits, seed
        # cum[i] = sum of 2^j w_j for j_min <= j < j_min + i
        scale = np.ldexp(1.0, np.arange(j_min, j_max + 1))[:, None]
        self._cum = np.vstack([np.zeros((1, self.n)), np.cumsum(scale * bits, axis=0)])

    @property
    def n(self):
        return self.bits.shape[1]

    @classmethod
    def zero(cls, n, j_min=0, j_max=0):
        return cls(j_min, j_max, np.zeros((j_max - j_min + 1, n), dtype=np.int64))

    def bit(self, k):
        if self.j_min <= k <= self.j_max:
            return self.bits[k - self.j_min]
        return np.zeros(self.n, dtype=np.int64)

    def offset(self, k):
        """``sum_{j_min <= j < k, j <= j_max} 2^j w_j``."""
        i = min(max(int(k) - self.j_min, 0), self.j_max - self.j_min + 1)
        return self._cum[i].copy()

    def __eq__(self, other):
        return (isinstance(other, ShiftSequence) and self.j_min == other.j_min
                and self.j_max == other.j_max and np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.j_min, self.j_max, self.bits.tobytes()))

    def __repr__(self):
        return f"ShiftSequence(j_min={self.j_min}, j_max={self.j_max}, n={self.n}, seed={self.seed})"

    def to_json(self):
        return {"seed": self.seed, "j_min": self.j_min, "j_max": self.j_max,
                "bits": [[int(b) for b in row] for row in self.bits]}

    @classmethod
    def from_json(cls, d):
        return cls(d["j_min"], d["j_max"], d["bits"], d.get("seed"))


def sample_shift(seed, j_min, j_max, n):
    """I.i.d. fair bits from ``numpy.random.default_rng(seed)`` (PCG64)."""
    if j_min > j_max:
        raise ValueError("need j_min <= j_max")
    rng = np.random.default_rng(seed)
    return ShiftSequence(j_min, j_max, rng.integers(0, 2, size=(j_max - j_min + 1, n)), seed)


def _offset(grid, k, n):
    return np.zeros(n) if grid is None else grid.offset(k)


def _bit(grid, k, n):
    return np.zeros(n, dtype=np.int64) if grid is None else grid.bit(k)


@dataclass(frozen=True)
class DyadicCube:
    level: int
    index: tuple
    grid: ShiftSequence = field(default=None, compare=True)

    def __post_init__(self):
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "index", tuple(int(i) for i in np.atleast_1d(self.index)))

    @property
    def n(self):
        return len(self.index)

    @property
    def side(self):
        return math.ldexp(1.0, self.level)

    def lower(self):
        return np.ldexp(np.asarray(self.index, dtype=float), self.level) + _offset(self.grid, self.level, self.n)

    def realize(self):
        return Cube.from_corner(self.lower(), self.side)

    def parent(self):
        w = _bit(self.grid, self.level, self.n)
        p = np.floor_divide(np.asarray(self.index) - w, 2)
        return DyadicCube(self.level + 1, tuple(p), self.grid)

    def ancestor(self, level):
        c = self
        while c.level < level:
            c = c.parent()
        return c

    def children(self):
        w = _bit(self.grid, self.level - 1, self.n)
        base = 2 * np.asarray(self.index) + w
        out = []
        for corner in np.ndindex(*(2,) * self.n):
            out.append(DyadicCube(self.level - 1, tuple(base + np.asarray(corner)), self.grid))
        return out

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all(cube_index(pts, self.level, self.grid) == np.asarray(self.index), axis=1)

    def to_json(self):
        return {"level": self.level, "index": list(self.index)}


def cube_index(pts, k, grid=None):
    """Integer index of the level-k cube containing each point (exact half-open)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    off = _offset(grid, k, pts.shape[1])
    side = math.ldexp(1.0, k)
    idx = np.floor((pts - off) / side).astype(np.int64)
    # the subtraction may round; settle membership by comparing corners exactly
    lo = np.ldexp(idx.astype(float), k) + off
    idx = np.where(pts < lo, idx - 1, idx)
    lo = np.ldexp(idx.astype(float), k) + off
    idx = np.where(pts >= lo + side, idx + 1, idx)
    return idx


def cube_of(x, k, grid=None):
    return DyadicCube(k, tuple(cube_index(x, k, grid)[0]), grid)


def finest_level(mu):
    """Largest k with 2^k <= the sup-norm atom separation: level-k cubes isolate atoms."""
    sep = mu.min_separation(norm=np.inf)
    if not np.isfinite(sep):
        return 0
    return math.floor(math.log2(sep))


def top_level(mu, grid=None):
    """Smallest level at which all atoms share one cube of ``grid``."""
    k = max(finest_level(mu), math.ceil(math.log2(mu.diameter() + 1e-300)) if mu.size > 1 else 0)
    while len(np.unique(cube_index(mu.points, k, grid), axis=0)) > 1:
        k += 1
    return k


def default_j_min(mu):
    return finest_level(mu) - 2


# --------------------------------------------------------------------------
# good and bad cubes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GoodnessParams:
    r: int = 4
    gamma: float = 0.25

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError("r must be a positive integer")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")

    @classmethod
    def from_kernel(cls, spec, r=4):
        return cls(r, spec.alpha / (2.0 * (spec.m + spec.alpha)))


@dataclass
class GoodnessResult:
    """``good_in_window`` is relative to the searched ancestor levels only."""
    cube: DyadicCube
    good_in_window: bool
    witness_level: int
    distance: float
    threshold: float

    def row(self):
        return [self.cube.level, ";".join(str(i) for i in self.cube.index), self.good_in_window,
                self.witness_level, self.distance, self.threshold]


GOODNESS_HEADER = ["level", "index", "good_in_window", "witness_J_level", "distance", "threshold"]


def _boundary_gap(I, J):
    """dist(I, dJ) for I inside J: the smallest face gap."""
    lo_i, lo_j = I.lower(), J.lower()
    return float(np.min(np.minimum(lo_i - lo_j, lo_j + J.side - (lo_i + I.side))))


def is_good(c, gp, search_levels=None):
    """Good unless some ancestor J with 2^r l(I) <= l(J) <= 2^search_levels l(I)
    has dist(I, dJ) <= l(I)^gamma l(J)^(1-gamma).

    The witness is the first failing ancestor for a bad cube and the ancestor
    with the smallest distance/threshold ratio for a good one.
    """
    search = gp.r + 20 if search_levels is None else int(search_levels)
    if search < gp.r:
        raise ValueError("search_levels must be >= r")
    J = c.ancestor(c.level + gp.r)
    best = None
    for L in range(c.level + gp.r, c.level + search + 1):
        if L > J.level:
            J = J.parent()
        dist = _boundary_gap(c, J)
        thr = c.side ** gp.gamma * J.side ** (1.0 - gp.gamma)
        if dist <= thr:
            return GoodnessResult(c, False, L, dist, thr)
        if best is None or dist / thr < best[1] / best[2]:
            best = (L, dist, thr)
    return GoodnessResult(c, True, *best)


@dataclass
class BadProbability:
    estimate: float
    stderr: float
    trials: int
    r: int
    gamma: float

    def to_json(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "trials": self.trials,
                "r": self.r, "gamma": self.gamma}


def shifted_bad_flags(level, index, gp, bits, search_levels=None):
    """Badness of the shifted cube ``I + w`` for each row of ``bits``.

    ``bits[s, i]`` is the bit vector at level ``level + i``. Bits below ``level``
    move I and all its ancestors together, so they never matter.
    """
    search = gp.r + 20 if search_levels is None else int(search_levels)
    bits = np.asarray(bits, dtype=float)
    T, nlev, n = bits.shape
    if nlev < search:
        raise ValueError("need bits for every level below the top searched ancestor")
    side = math.ldexp(1.0, level)
    scale = np.ldexp(1.0, np.arange(level, level + nlev))[None, :, None]
    cum = np.concatenate([np.zeros((T, 1, n)), np.cumsum(scale * bits, axis=1)], axis=1)
    levels = np.arange(level + gp.r, level + search + 1)
    anc_off = cum[:, levels - level, :]
    lo = np.ldexp(np.asarray(index, dtype=float), level)[None, :].repeat(T, axis=0)
    sides = np.ldexp(1.0, levels).astype(float)
    thresholds = side ** gp.gamma * sides ** (1.0 - gp.gamma)
    return K.bad_flags(lo, np.ascontiguousarray(anc_off), side, sides, thresholds)


def bad_cube_probability(level, index, gp, trials, seed=0, search_levels=None, bits=None):
    """Monte Carlo fraction of shifts under which the D_0 cube 2^level([0,1)^n + index) is bad."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    index = tuple(int(i) for i in np.atleast_1d(index))
    search = gp.r + 20 if search_levels is None else int(search_levels)
    if bits is None:
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, size=(int(trials), search, len(index)))
    flags = shifted_bad_flags(level, index, gp, bits, search)
    p = float(flags.mean())
    se = math.sqrt(p * (1.0 - p) / len(flags)) if len(flags) > 1 else 0.0
    return BadProbability(p, se, len(flags), gp.r, gp.gamma)


# --------------------------------------------------------------------------
# martingale differences and averages
# --------------------------------------------------------------------------

def _values(f):
    return np.asarray(f.values, dtype=float)


def _average(f, mask):
    w = f.base.weights[mask]
    tot = w.sum()
    return float((_values(f)[mask] * w).sum() / tot) if tot > 0 else 0.0


def avg_E(f, Q, mu=None):
    """``<f>_Q 1_Q`` on the atoms."""
    inside = Q.contains(f.base.points)
    return SampledFunction(f.base, np.where(inside, _average(f, inside), 0.0))


def level_averages(f, k, grid=None):
    """Per-atom value of ``E_{2^k} f``: the average over the atom's level-k cube."""
    idx = cube_index(f.base.points, k, grid)
    _, inv = np.unique(idx, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    w = f.base.weights
    num = np.bincount(inv, weights=_values(f) * w)
    den = np.bincount(inv, weights=w)
    avg = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return avg[inv]


def avg_E_level(f, k, mu=None, grid=None):
    return SampledFunction(f.base, level_averages(f, k, grid))


def delta_Q(f, Q, mu=None):
    """``sum_{Q' child of Q} (<f>_Q' - <f>_Q) 1_Q'``; zero off Q and on empty children."""
    pts = f.base.points
    inside = Q.contains(pts)
    out = np.zeros(len(pts))
    if not inside.any():
        return SampledFunction(f.base, out)
    parent_avg = _average(f, inside)
    for ch in Q.children():
        m = ch.contains(pts) & inside
        if m.any():
            out[m] = _average(f, m) - parent_avg
    return SampledFunction(f.base, out)


def occupied_cubes(mu, k, grid=None):
    """Level-k cubes of ``grid`` holding at least one atom, in index order."""
    idx = np.unique(cube_index(mu.points, k, grid), axis=0)
    return [DyadicCube(k, tuple(row), grid) for row in idx]


def martingale_terms(f, s, finest, grid=None):
    """``[(Q, Delta_Q f)]`` over occupied Q with finest < level <= s, then ``[(Q, E_Q f)]`` at level s."""
    if finest >= s:
        raise ValueError("finest level must lie below the top level")
    deltas = []
    for k in range(s, finest, -1):
        for Q in occupied_cubes(f.base, k, grid):
            deltas.append((Q, delta_Q(f, Q)))
    tops = [(Q, avg_E(f, Q)) for Q in occupied_cubes(f.base, s, grid)]
    return deltas, tops


def reconstruct(f, s, finest=None, mu=None, grid=None):
    """``sum_{finest < l(Q) <= 2^s} Delta_Q f + sum_{l(Q) = 2^s} E_Q f`` on the atoms.

    With ``finest`` at or below the atom separation scale this returns f.
    Per level, ``Delta`` is the jump between consecutive level averages.
    """
    base = f.base
    finest = finest_level(base) if finest is None else int(finest)
    if finest > finest_level(base):
        raise ValueError("finest level must not exceed the atom separation scale")
    out = level_averages(f, s, grid)
    upper = out
    for k in range(s - 1, finest - 1, -1):
        lower = level_averages(f, k, grid)
        out = out + (lower - upper)
        upper = lower
    return SampledFunction(base, out)


# --------------------------------------------------------------------------
# interaction coefficient
# --------------------------------------------------------------------------

def _as_cube(Q):
    return Q.realize() if isinstance(Q, DyadicCube) else Q


def delta_coeff(Q, R, m, alpha):
    """l(Q)^(a/2) l(R)^(a/2) / (l(Q) + l(R) + dist(Q, R))^(m + a)."""
    Q, R = _as_cube(Q), _as_cube(R)
    D = Q.side + R.side + Q.distance_to(R)
    return (Q.side * R.side) ** (alpha / 2.0) / D ** (m + alpha)


# --------------------------------------------------------------------------
# principal cubes
# --------------------------------------------------------------------------

@dataclass
class StoppingFamily:
    """Stopping cubes by generation plus ``a(Q)`` for every occupied cube.

    ``stopping_parent`` maps each occupied cube between ``top`` and ``finest``
    to its minimal containing stopping cube. ``averages`` holds ``<|phi|>_Q``.
    """
    generations: list
    stopping_parent: dict
    averages: dict
    masses: dict
    top: int
    finest: int

    @property
    def cubes(self):
        return [F for gen in self.generations for F in gen]

    def children_of(self, F):
        """Stopping cubes whose stopping parent is F (the next generation inside F)."""
        return [G for G in self.cubes
                if G.level < self.top and G != F and self.stopping_parent[G.parent()] == F]

    def to_json(self):
        return {"top": self.top, "finest": self.finest,
                "generations": [[F.to_json() for F in gen] for gen in self.generations]}


def principal_cubes(phi, mu=None, grid=None, s=None, finest=None):
    """Top-down stopping: Q is a new stopping cube when <|phi|>_Q > 2 <|phi|>_{a(parent)}."""
    base = phi.base
    s = top_level(base, grid) if s is None else int(s)
    finest = finest_level(base) if finest is None else int(finest)
    if finest > s:
        raise ValueError("finest level must not exceed the top level")
    absphi = SampledFunction(base, np.abs(_values(phi)))
    averages, masses, a = {}, {}, {}
    gen_of = {}
    gens = [[]]
    for k in range(s, finest - 1, -1):
        idx = cube_index(base.points, k, grid)
        rows, inv = np.unique(idx, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        w = base.weights
        num = np.bincount(inv, weights=absphi.values * w)
        den = np.bincount(inv, weights=w)
        for r, row in enumerate(rows):
            Q = DyadicCube(k, tuple(row), grid)
            averages[Q] = float(num[r] / den[r])
            masses[Q] = float(den[r])
            if k == s:
                a[Q] = Q
                gen_of[Q] = 0
                gens[0].append(Q)
                continue
            F = a[Q.parent()]
            if averages[Q] > 2.0 * averages[F]:
                a[Q] = Q
                g = gen_of[F] + 1
                gen_of[Q] = g
                while len(gens) <= g:
                    gens.append([])
                gens[g].append(Q)
            else:
                a[Q] = F
    return StoppingFamily(gens, a, averages, masses, s, finest)


@dataclass
class CarlesonReport:
    worst_packing_ratio: float
    worst_cube: DyadicCube
    min_free_fraction: float
    stopping_violations: int
    rows: list

    @property
    def ok(self):
        slack = 1e-12
        return (self.worst_packing_ratio <= 2.0 + slack and self.min_free_fraction >= 0.5 - slack
                and self.stopping_violations == 0)

    def to_json(self):
        return {"worst_packing_ratio": self.worst_packing_ratio,
                "worst_cube": self.worst_cube.to_json() if self.worst_cube else None,
                "min_free_fraction": self.min_free_fraction,
                "stopping_violations": self.stopping_violations, "ok": self.ok}


def _inside(G, F):
    return G.level <= F.level and G.ancestor(F.level) == F


def carleson_check(family, mu=None):
    """Packing sum over F' inside F, the free part E(F), and the stopping rule, recomputed."""
    cubes = family.cubes
    M = family.masses
    rows = []
    worst, worst_F, min_free = 0.0, None, math.inf
    for F in cubes:
        packing = sum(M[G] for G in cubes if _inside(G, F))
        kids = sum(M[G] for G in family.children_of(F))
        ratio = packing / M[F]
        free = (M[F] - kids) / M[F]
        rows.append((F, packing, 2.0 * M[F], free))
        if ratio > worst:
            worst, worst_F = ratio, F
        min_free = min(min_free, free)
    violations = sum(1 for Q, F in family.stopping_parent.items()
                     if family.averages[Q] > 2.0 * family.averages[F] * (1 + 1e-12))
    return CarlesonReport(worst, worst_F, min_free if cubes else 1.0, violations, rows)
