"""Finitely atomic measures on R^n and the geometric predicates built on them.

Every space integral against an atomic measure is an exact finite sum, so the
functions here never approximate: cube membership is half-open, balls are
closed, and masses are plain weighted counts.
"""
from dataclasses import dataclass, field

import numpy as np


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class AtomicMeasure:
    """Weighted point masses in R^n.

    Duplicate positions are merged (weights summed) keeping first-occurrence
    order. Unsigned measures require strictly positive weights; signed ones
    accept any real weight and drop atoms whose merged weight is exactly zero.
    """

    def __init__(self, points, weights, signed=False, n=None):
        pts = np.asarray(points, dtype=np.float64)
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if pts.size == 0:
            dim = n if n is not None else (pts.shape[1] if pts.ndim == 2 else 1)
            pts = pts.reshape(0, dim)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1) if n in (None, 1) else pts.reshape(-1, n)
        if n is not None and pts.shape[1] != n:
            raise ValueError(f"points have dimension {pts.shape[1]}, expected {n}")
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights differ in length")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("atom positions and weights must be finite")
        if not signed and np.any(w <= 0):
            raise ValueError("unsigned measures need strictly positive weights")
        if pts.shape[0]:
            _, first, inv = np.unique(pts, axis=0, return_index=True, return_inverse=True)
            inv = inv.reshape(-1)
            merged = np.zeros(first.shape[0])
            np.add.at(merged, inv, w)
            order = np.argsort(first, kind="stable")
            pts = pts[first[order]]
            w = merged[order]
            if signed:
                keep = w != 0.0
                pts, w = pts[keep], w[keep]
        self.points = _frozen(pts)
        self.weights = _frozen(w)
        self.signed = bool(signed)

    @property
    def n(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    def __len__(self):
        return self.size

    def __repr__(self):
        kind = "signed" if self.signed else "positive"
        return f"AtomicMeasure(n={self.n}, atoms={self.size}, {kind})"

    @property
    def total_mass(self):
        return float(self.weights.sum())

    @property
    def total_variation(self):
        """||nu|| = |nu|(R^n)."""
        return float(np.abs(self.weights).sum())

    def abs(self):
        return AtomicMeasure(self.points, np.abs(self.weights), signed=False, n=self.n) \
            if self.size else AtomicMeasure(np.zeros((0, self.n)), [], n=self.n)

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return AtomicMeasure(self.points[mask], self.weights[mask], signed=self.signed, n=self.n)

    def translate(self, v):
        return AtomicMeasure(self.points + np.asarray(v, dtype=float), self.weights,
                             signed=self.signed, n=self.n)

    def min_separation(self, norm=2):
        """Smallest distance between two distinct atoms (inf for < 2 atoms)."""
        if self.size < 2:
            return np.inf
        from scipy.spatial import cKDTree
        p = np.inf if norm == np.inf else 2
        d, _ = cKDTree(self.points).query(self.points, k=2, p=p)
        return float(d[:, 1].min())

    def diameter(self):
        if self.size < 2:
            return 0.0
        span = self.points.max(axis=0) - self.points.min(axis=0)
        return float(np.sqrt((span ** 2).sum()))

    def bounding_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)

    def to_json(self):
        rows = [list(p) + [w] for p, w in zip(self.points.tolist(), self.weights.tolist())]
        key = "signed_atoms" if self.signed else "atoms"
        return {"n": self.n, key: rows}

    @classmethod
    def from_json(cls, d):
        n = int(d["n"])
        signed = "signed_atoms" in d
        rows = d["signed_atoms"] if signed else d.get("atoms", [])
        for r in rows:
            if len(r) != n + 1:
                raise ValueError(f"atom row {r!r} must have {n + 1} entries")
        arr = np.array(rows, dtype=float).reshape(-1, n + 1)
        return cls(arr[:, :n], arr[:, n], signed=signed, n=n)


class SampledFunction:
    """Values of a function on the atoms of a base measure."""

    def __init__(self, base, values):
        v = np.asarray(values, dtype=np.float64).reshape(-1)
        if v.shape[0] != base.size:
            raise ValueError(f"{v.shape[0]} values for {base.size} atoms")
        self.base = base
        self.values = _frozen(v)

    @classmethod
    def constant(cls, base, c):
        return cls(base, np.full(base.size, float(c)))

    @classmethod
    def indicator(cls, base, region):
        return cls(base, region.contains(base.points).astype(float))

    def __mul__(self, c):
        if isinstance(c, SampledFunction):
            return SampledFunction(self.base, self.values * c.values)
        return SampledFunction(self.base, self.values * float(c))

    __rmul__ = __mul__

    def __add__(self, other):
        return SampledFunction(self.base, self.values + other.values)

    def __sub__(self, other):
        return SampledFunction(self.base, self.values - other.values)

    def restrict(self, mask):
        return SampledFunction(self.base, np.where(mask, self.values, 0.0))

    def lp_norm(self, p=2):
        w = self.base.weights
        a = np.abs(self.values)
        if p == np.inf:
            return float(a[w > 0].max()) if a.size else 0.0
        return float((w * a ** p).sum() ** (1.0 / p))

    def integral(self):
        return float((self.values * self.base.weights).sum())

    def as_measure(self):
        """The signed measure f dmu."""
        return AtomicMeasure(self.base.points, self.values * self.base.weights, signed=True,
                             n=self.base.n)


@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube; membership is half-open ``[c - l/2, c + l/2)``."""
    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        if not self.side > 0:
            raise ValueError("cube sidelength must be positive")
        object.__setattr__(self, "side", float(self.side))

    @classmethod
    def from_corner(cls, lower, side):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        return cls(tuple(lower + side / 2.0), side)

    @property
    def n(self):
        return len(self.center)

    @property
    def lower(self):
        return np.asarray(self.center) - self.side / 2.0

    @property
    def upper(self):
        return np.asarray(self.center) + self.side / 2.0

    def dilate(self, a):
        if not a > 0:
            raise ValueError("dilation factor must be positive")
        return Cube(self.center, self.side * a)

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= self.lower) & (pts < self.upper), axis=1)

    def boundary_distance(self, pts):
        """Euclidean distance from each point to the boundary of the cube."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        e = np.abs(pts - np.asarray(self.center)) - self.side / 2.0
        inside = np.all(e <= 0, axis=1)
        outside_d = np.sqrt((np.maximum(e, 0.0) ** 2).sum(axis=1))
        return np.where(inside, -e.max(axis=1), outside_d)

    def distance_to(self, other):
        """Euclidean distance between the closures of two cubes."""
        gap = np.maximum(0.0, np.maximum(self.lower - other.upper, other.lower - self.upper))
        return float(np.sqrt((gap ** 2).sum()))

    def to_json(self):
        return {"center": list(self.center), "side": self.side}


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball."""
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = np.sqrt(((pts - np.asarray(self.center)) ** 2).sum(axis=1))
        return d <= self.radius


def mass(mu, S):
    """mu(S) for a Cube or Ball (signed sum for signed measures)."""
    if mu.size == 0:
        return 0.0
    return float(mu.weights[S.contains(mu.points)].sum())


def variation(mu, S):
    """|mu|(S)."""
    if mu.size == 0:
        return 0.0
    return float(np.abs(mu.weights[S.contains(mu.points)]).sum())


def ball_masses(mu, x, radii):
    """mu(B(x, r)) for every r, all at once."""
    radii = np.asarray(radii, dtype=float)
    if mu.size == 0:
        return np.zeros_like(radii)
    d = np.sqrt(((mu.points - np.asarray(x, dtype=float)) ** 2).sum(axis=1))
    order = np.argsort(d, kind="stable")
    csum = np.concatenate([[0.0], np.cumsum(mu.weights[order])])
    return csum[np.searchsorted(d[order], radii, side="right")]


@dataclass
class PowerBoundReport:
    exponent: float
    constant: float
    witness: tuple = field(default=(None, None))
    samples_used: int = 0

    def to_json(self):
        x, r = self.witness
        return {"m": self.exponent, "C": self.constant,
                "witness_x": None if x is None else list(x), "witness_r": r,
                "samples": self.samples_used}


def check_power_bound(mu, m, samples=256, seed=0):
    """Largest mu(B(x, r)) / r^m over sampled balls.

    ``samples`` is either an iterable of ``(x, r)`` pairs or a count; with a
    count, centres are drawn from the atoms and the bounding box, radii
    log-uniformly between a quarter of the atom separation and twice the
    diameter.
    """
    if not m > 0:
        raise ValueError("power-bound exponent m must be positive")
    if mu.size == 0:
        return PowerBoundReport(float(m), 0.0, (None, None), 0)
    if isinstance(samples, (int, np.integer)):
        rng = np.random.default_rng(seed)
        lo, hi = mu.bounding_box()
        sep = mu.min_separation()
        rmin = sep / 4 if np.isfinite(sep) else 0.25
        rmax = max(2 * mu.diameter(), 4 * rmin)
        k = int(samples)
        at_atoms = mu.points[rng.integers(0, mu.size, size=k // 2)]
        in_box = lo + (hi - lo) * rng.random((k - k // 2, mu.n))
        xs = np.vstack([at_atoms, in_box])
        rs = np.exp(rng.uniform(np.log(rmin), np.log(rmax), size=k))
        pairs = list(zip(xs, rs))
    else:
        pairs = [(np.atleast_1d(np.asarray(x, dtype=float)), float(r)) for x, r in samples]
    best, wit = 0.0, (None, None)
    for x, r in pairs:
        val = ball_masses(mu, x, [r])[0] / r ** m
        if val > best:
            best, wit = float(val), (tuple(float(v) for v in x), float(r))
    return PowerBoundReport(float(m), best, wit, len(pairs))


def is_doubling_cube(mu, Q, a, b):
    """(mu(aQ) <= b mu(Q), mu(aQ)/mu(Q))."""
    inner = mass(mu, Q)
    outer = mass(mu, Q.dilate(a))
    if inner == 0.0:
        ratio = 1.0 if outer == 0.0 else np.inf
    else:
        ratio = outer / inner
    return bool(outer <= b * inner), ratio


DEFAULT_XI = tuple(2.0 ** -j for j in range(13))


def has_small_boundary(mu, Q, C, xi_list=DEFAULT_XI):
    """Check mu({x in 2Q : dist(x, dQ) <= xi l(Q)}) <= C xi mu(2Q) on each xi."""
    xi = np.asarray(list(xi_list), dtype=float)
    if xi.size == 0:
        raise ValueError("xi_list must be nonempty")
    if mu.size == 0:
        return True
    Q2 = Q.dilate(2.0)
    inside = Q2.contains(mu.points)
    pts, w = mu.points[inside], mu.weights[inside]
    total = float(w.sum())
    d = Q.boundary_distance(pts) if pts.shape[0] else np.zeros(0)
    for x in xi:
        band = float(w[d <= x * Q.side].sum())
        if band > C * x * total:
            return False
    return True


def default_radius_grid(mu, per_octave=4, reach=None):
    """Geometric radii from half the atom separation to past the support."""
    sep = mu.min_separation()
    rmin = sep / 2 if np.isfinite(sep) and sep > 0 else 0.5
    rmax = 4.0 * (mu.diameter() + 1.0) if reach is None else float(reach)
    k = max(2, int(np.ceil(per_octave * np.log2(rmax / rmin))) + 1)
    return np.geomspace(rmin, rmax, k)


def maximal_function(mu, f, x, radius_grid=None):
    """Centred ball maximal average of |f| over ``radius_grid``.

    Radii whose ball has zero mass are skipped; 0 when all are skipped.
    ``x`` may be a single point or an array of points.
    """
    vals = f.values if isinstance(f, SampledFunction) else np.asarray(f, dtype=float)
    radii = default_radius_grid(mu) if radius_grid is None else np.asarray(radius_grid, dtype=float)
    X = np.asarray(x, dtype=float)
    single = X.ndim <= 1 and (X.ndim == 0 or X.shape[0] == mu.n)
    X = np.atleast_2d(X.reshape(-1, mu.n))
    out = np.zeros(X.shape[0])
    if mu.size:
        aw = np.abs(vals) * mu.weights
        for i, p in enumerate(X):
            d = np.sqrt(((mu.points - p) ** 2).sum(axis=1))
            order = np.argsort(d, kind="stable")
            cm = np.concatenate([[0.0], np.cumsum(mu.weights[order])])
            cf = np.concatenate([[0.0], np.cumsum(aw[order])])
            k = np.searchsorted(d[order], radii, side="right")
            ok = cm[k] > 0
            if ok.any():
                out[i] = float((cf[k][ok] / cm[k][ok]).max())
    return float(out[0]) if single else out
