"""Whitney decomposition of a union of open boxes and the Calderón–Zygmund
decomposition of a signed atomic measure.

Both constructions run inside a working box around the data. Every stated
property is re-checked after construction by code that does not share the
selection loop.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import DyadicCube, cube_index
from .measure import DEFAULT_XI, AtomicMeasure, Cube, has_small_boundary, is_doubling_cube, mass, variation


class DoublingNotFoundError(RuntimeError):
    def __init__(self, center, chain):
        super().__init__(f"doubling cube not found around {tuple(center)}; scanned sides {chain}")
        self.center, self.chain = center, chain


# --------------------------------------------------------------------------
# regions
# --------------------------------------------------------------------------

class Region:
    """Finite union of open boxes ``prod (lo_i, hi_i)``; infinite bounds allowed."""

    def __init__(self, lo, hi):
        lo = np.atleast_2d(np.asarray(lo, dtype=float))
        hi = np.atleast_2d(np.asarray(hi, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("box bounds must have matching shapes")
        keep = np.all(hi > lo, axis=1)
        self.lo, self.hi = lo[keep], hi[keep]
        self.n = lo.shape[1]

    @classmethod
    def from_json(cls, d):
        boxes = d["boxes"]
        return cls([b[0] for b in boxes], [b[1] for b in boxes])

    def to_json(self):
        return {"boxes": [[list(map(float, a)), list(map(float, b))] for a, b in zip(self.lo, self.hi)]}

    @property
    def empty(self):
        return self.lo.shape[0] == 0

    def contains(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.empty:
            return np.zeros(pts.shape[0], dtype=bool)
        inside = (pts[:, None, :] > self.lo[None]) & (pts[:, None, :] < self.hi[None])
        return np.all(inside, axis=2).any(axis=1)

    def covers_closed(self, lower, upper):
        """Is the closed box [lower, upper] inside the region?

        Box bounds cut each axis into points and open gaps; every product cell
        lies wholly inside or wholly outside each open box, so one
        representative per cell decides.
        """
        if self.empty:
            return False
        lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
        axes = []
        for i in range(self.n):
            cuts = np.concatenate([[lower[i], upper[i]], self.lo[:, i], self.hi[:, i]])
            cuts = np.unique(cuts[(cuts >= lower[i]) & (cuts <= upper[i])])
            mids = (cuts[:-1] + cuts[1:]) / 2.0
            axes.append(np.concatenate([cuts, mids]))
        reps = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        return bool(self.contains(reps).all())

    def bounding_box(self):
        return self.lo.min(axis=0), self.hi.max(axis=0)


def _closed_inside(region, Q):
    return region.covers_closed(Q.lower, Q.upper)


def _overlaps(A, B):
    return bool(np.all(A.lower < B.upper) and np.all(B.lower < A.upper))


def working_box(mu, region=None):
    """Dyadic cube of side 2^K holding 4x the bounding box of the atoms and the region."""
    los, his = [], []
    if mu.size:
        lo, hi = mu.bounding_box()
        los.append(lo), his.append(hi)
    if region is not None and not region.empty:
        lo, hi = region.bounding_box()
        if np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)):
            los.append(lo), his.append(hi)
    if not los:
        raise ValueError("nothing to bound")
    lo, hi = np.min(los, axis=0), np.max(his, axis=0)
    center = (lo + hi) / 2.0
    side = max(4.0 * float(np.max(hi - lo)), 1.0)
    K = math.ceil(math.log2(side)) + 1
    return Cube(center, 2.0 ** K), K


# --------------------------------------------------------------------------
# Whitney
# --------------------------------------------------------------------------

@dataclass
class WhitneyResult:
    cubes: list
    rho: float
    rho0: int
    subfamily: list          # (position in cubes, dilation factor, Cube)
    mass_omega: float
    mass_subfamily: float
    property1: bool
    property2: bool
    overlap_counts: list = field(default_factory=list)

    @property
    def property_c(self):
        return self.mass_subfamily >= self.mass_omega / (8.0 * self.rho0) if self.cubes else True

    def to_json(self):
        return {
            "rho": self.rho, "rho0": self.rho0,
            "cubes": [{"level": Q.level, "index": list(Q.index)} for Q in self.cubes],
            "subfamily": [{"cube": i, "dilation": a, "center": list(C.center), "side": C.side}
                          for i, a, C in self.subfamily],
            "mass_omega": self.mass_omega, "mass_subfamily": self.mass_subfamily,
            "property1": self.property1, "property2": self.property2,
            "property_c": self.property_c,
        }


def whitney(region, mu, rho=21.0, min_level=None, depth=10, doubling=(9.0, None),
            small_boundary_C=None, xi_list=DEFAULT_XI):
    """Maximal standard dyadic cubes Q with closed 10Q inside the region.

    Every cube meeting the region is refined down to ``min_level`` (default
    ``depth`` levels under the working box), and further wherever an atom
    of ``mu`` in the region is still uncovered.
    """
    if region.empty:
        return WhitneyResult([], rho, 1, [], 0.0, 0.0, True, True, [])
    n = region.n
    box, K = working_box(mu, region)
    if region.covers_closed(box.lower, box.upper):
        raise ValueError("region covers the whole working box; its complement is empty")
    min_level = K - depth if min_level is None else int(min_level)
    in_omega = region.contains(mu.points) if mu.size else np.zeros(0, dtype=bool)
    atoms = mu.points[in_omega]

    selected = []
    covered = np.zeros(atoms.shape[0], dtype=bool)
    # the working box may straddle lattice cubes: seed every level-K cube it touches
    corners = np.array(list(np.ndindex(*(2,) * n)), dtype=float)
    pts = box.lower + corners * np.nextafter(box.side, 0)
    stack = sorted({DyadicCube(K, tuple(row)) for row in cube_index(pts, K)}, key=lambda c: c.index)
    while stack:
        Q = stack.pop()
        R = Q.realize()
        if _closed_inside(region, R.dilate(10.0)):
            selected.append(Q)
            if atoms.size:
                covered |= R.contains(atoms)
            continue
        if not _meets(region, R):
            continue
        if Q.level > min_level or (atoms.size and R.contains(atoms[~covered]).any()):
            stack.extend(reversed(Q.children()))
    selected.sort(key=lambda c: (-c.level, c.index))

    realized = [Q.realize() for Q in selected]
    p1 = all(_closed_inside(region, C.dilate(10.0)) for C in realized)
    p2 = all(not _closed_inside(region, C.dilate(rho)) for C in realized)
    tens = [C.dilate(10.0) for C in realized]
    counts = [sum(_overlaps(A, B) for B in tens) for A in tens]
    rho0 = max(counts) if counts else 1

    b = 2.0 * rho0 if doubling[1] is None else doubling[1]
    C_small = 8.0 * n if small_boundary_C is None else small_boundary_C
    order = sorted(range(len(selected)), key=lambda i: (-mass(mu, realized[i]), i))
    picks = []
    for i in order:
        if mass(mu, realized[i]) <= 0.0:
            continue
        for a in (1.0, 1.05, 1.1):
            cand = realized[i] if a == 1.0 else realized[i].dilate(a)
            if any(_overlaps(cand, P) for _, _, P in picks):
                continue
            if not is_doubling_cube(mu, cand, doubling[0], b)[0]:
                continue
            if not has_small_boundary(mu, cand, C_small, xi_list):
                continue
            picks.append((i, a, cand))
            break
    m_omega = float(mu.weights[in_omega].sum()) if mu.size else 0.0
    m_sub = float(sum(mass(mu, P) for _, _, P in picks))
    return WhitneyResult(selected, rho, rho0, picks, m_omega, m_sub, p1, p2, counts)


def _meets(region, C):
    """Does the half-open cube C meet the open region?"""
    return bool(np.any(np.all((region.lo < C.upper) & (region.hi > C.lower), axis=1)))


# --------------------------------------------------------------------------
# Calderón–Zygmund
# --------------------------------------------------------------------------

ETA_GRID = (2.5, 3.0, 4.0, 6.0, 8.0, 16.0)


def _sup_dist(x, pts):
    return np.abs(pts - x).max(axis=1) if pts.shape[0] else np.zeros(0)


def _selects(nu_abs, mu, x, side, level):
    Q = Cube(x, side)
    return variation(nu_abs, Q) > level * mass(mu, Q.dilate(2.0))


def _stopping_side(nu_abs, mu, x, level):
    """A side l whose centred cube passes the selection test while every
    cube ``eta * l`` with eta > 2 fails; None when no side passes.

    Both sides of the test are step functions of l, so testing each
    breakpoint and one point per gap finds the supremum of the passing set.
    """
    bp = np.concatenate([2.0 * _sup_dist(x, nu_abs.points), _sup_dist(x, mu.points)])
    bp = np.unique(bp[bp > 0])
    if bp.size == 0:
        bp = np.array([1.0])
    samples = [(bp[0] / 2.0, 0.0, bp[0])]
    for i, b in enumerate(bp):
        samples.append((b, None, None))
        hi = bp[i + 1] if i + 1 < bp.size else 2.0 * b
        samples.append(((b + hi) / 2.0, b, hi))
    last = None
    for s in samples:
        if _selects(nu_abs, mu, x, s[0], level):
            last = s
    if last is None:
        return None
    side, a, b = last
    if a is None:
        return side
    return (max(a, b / 2.0) + b) / 2.0


@dataclass
class CZResult:
    xi: float
    threshold: float
    cubes: list
    companions: list
    coefficients: np.ndarray
    g: np.ndarray                # density on the atoms of mu
    support: np.ndarray          # merged atom positions of nu and mu
    weights: np.ndarray          # w_i on the merged positions, shape (cubes, support)
    nu_on_support: np.ndarray
    mu_on_support: np.ndarray
    report: dict

    def beta(self, i):
        """beta_i = w_i nu - phi_i mu as a signed measure on the merged positions."""
        R = self.companions[i]
        phi = self.coefficients[i] * R.contains(self.support)
        return AtomicMeasure(self.support, self.weights[i] * self.nu_on_support - phi * self.mu_on_support,
                             signed=True)

    def phi_sum(self, pts):
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[0])
        for c, R in zip(self.coefficients, self.companions):
            out += c * R.contains(pts)
        return out

    def to_json(self):
        return {
            "xi": self.xi, "threshold": self.threshold,
            "cubes": [{"center": list(Q.center), "side": Q.side} for Q in self.cubes],
            "companions": [{"center": list(R.center), "side": R.side} for R in self.companions],
            "phi": [float(c) for c in self.coefficients],
            "report": self.report,
        }


def _merge_support(nu, mu):
    pts = np.vstack([nu.points, mu.points]) if nu.size else mu.points
    uniq, inv = np.unique(pts, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    nu_w = np.zeros(uniq.shape[0])
    mu_w = np.zeros(uniq.shape[0])
    np.add.at(nu_w, inv[:nu.size], nu.weights)
    np.add.at(mu_w, inv[nu.size:], mu.weights)
    return uniq, nu_w, mu_w


def _companion(mu, Q, m, cap):
    a, b = 6.0, 6.0 ** (m + 1)
    chain = []
    side = Q.side * 6.0
    while side <= cap:
        R = Cube(Q.center, side)
        chain.append(side)
        if mass(mu, R) > 0 and is_doubling_cube(mu, R, a, b)[0]:
            return R
        side *= 6.0
    raise DoublingNotFoundError(Q.center, chain)


def cz_decompose(nu, mu, xi, m=1.0, eta_grid=ETA_GRID):
    """Calderón–Zygmund decomposition of ``nu`` against ``mu`` at level ``xi``.

    Cubes are centred at atoms of ``nu`` with the stopping side from
    ``_stopping_side`` and thinned Besicovitch-style (largest first, keep a
    cube when its centre is not yet covered). They may overlap; ``w_i``
    splits mass by the overlap count.
    """
    n = mu.n
    level = xi / 2.0 ** (n + 1)
    if not xi > 2.0 ** (n + 1) * nu.total_variation / mu.total_mass:
        raise ValueError("xi must exceed 2^(n+1) ||nu|| / ||mu||")
    nu_abs = nu.abs()
    cands = []
    for x in nu.points:
        side = _stopping_side(nu_abs, mu, x, level)
        if side is not None:
            cands.append(Cube(x, side))
    cands.sort(key=lambda C: (-C.side, C.center))
    cubes = []
    for C in cands:
        if not any(Q.contains(np.asarray(C.center)[None])[0] for Q in cubes):
            cubes.append(C)

    support, nu_w, mu_w = _merge_support(nu, mu)
    box, _ = working_box(mu.abs() if mu.size else nu_abs)
    cap = 6.0 * box.side
    inside = np.zeros((len(cubes), support.shape[0]), dtype=bool)
    for i, Q in enumerate(cubes):
        inside[i] = Q.contains(support)
    cover = inside.sum(axis=0)
    W = np.divide(inside, cover, out=np.zeros(inside.shape), where=cover > 0)
    companions = [_companion(mu, Q, m, cap) for Q in cubes]
    coeffs = np.array([float((W[i] * nu_w).sum()) / mass(mu, R) for i, R in enumerate(companions)])

    off = cover == 0
    if np.any(off & (nu_w != 0) & (mu_w == 0)):
        raise RuntimeError("a nu-atom off the cubes has no mu-mass")
    dens = np.divide(nu_w, mu_w, out=np.zeros_like(nu_w), where=off & (mu_w > 0))
    phi_all = np.zeros(support.shape[0])
    for c, R in zip(coeffs, companions):
        phi_all += c * R.contains(support)
    g_support = dens + phi_all
    mu_pos = {tuple(p): i for i, p in enumerate(support)}
    g = np.array([g_support[mu_pos[tuple(p)]] for p in mu.points])

    res = CZResult(xi, level, cubes, companions, coeffs, g, support, W, nu_w, mu_w, {})
    res.report = verify_cz(res, nu, mu, eta_grid)
    return res


def verify_cz(res, nu, mu, eta_grid=ETA_GRID):
    """Independent pass over (C-Z-1..3), the mass identity, beta masses and realized constants."""
    nu_abs = nu.abs()
    level = res.threshold
    cz1 = all(variation(nu_abs, Q) > level * mass(mu, Q.dilate(2.0)) for Q in res.cubes)
    box, _ = working_box(mu.abs() if mu.size else nu_abs)
    cz2 = True
    for Q in res.cubes:
        etas = list(eta_grid) + [max(2.5, box.side / Q.side)]
        for eta in etas:
            E = Q.dilate(eta)
            if variation(nu_abs, E) > level * mass(mu, E.dilate(2.0)):
                cz2 = False
    covered = np.zeros(res.support.shape[0], dtype=bool)
    for Q in res.cubes:
        covered |= Q.contains(res.support)
    off = ~covered & (res.nu_on_support != 0)
    cz3 = bool(np.all(np.abs(res.nu_on_support[off]) <= res.xi * res.mu_on_support[off]))

    # nu = g mu + sum beta_i on the merged support
    g_support = np.zeros(res.support.shape[0])
    idx = {tuple(p): i for i, p in enumerate(res.support)}
    for p, v in zip(mu.points, res.g):
        g_support[idx[tuple(p)]] = v
    total = g_support * res.mu_on_support
    beta_mass = []
    for i in range(len(res.cubes)):
        b = res.beta(i)
        bw = np.zeros(res.support.shape[0])
        for p, v in zip(b.points, b.weights):
            bw[idx[tuple(p)]] += v
        total += bw
        beta_mass.append(abs(float(bw.sum())) / variation(nu_abs, res.cubes[i]))
    scale = nu.total_variation if nu.total_variation > 0 else 1.0
    identity_err = float(np.abs(total - res.nu_on_support).max() / scale) if total.size else 0.0

    phi_abs = np.zeros(mu.size)
    for c, R in zip(res.coefficients, res.companions):
        phi_abs += abs(c) * R.contains(mu.points)
    cz5 = float(phi_abs.max() / res.xi) if mu.size else 0.0
    cz6 = [mass(mu, R) * abs(c) / variation(nu_abs, Q)
           for Q, R, c in zip(res.cubes, res.companions, res.coefficients)]
    return {
        "cz1": cz1, "cz2": cz2, "cz3": cz3,
        "identity_error": identity_err,
        "beta_mass_max": max(beta_mass) if beta_mass else 0.0,
        "cz5_constant": cz5,
        "cz6_constant": max(cz6) if cz6 else 0.0,
        "companion_ratio_min": min((R.side / Q.side for Q, R in zip(res.cubes, res.companions)),
                                   default=math.inf),
        "cube_count": len(res.cubes),
    }
