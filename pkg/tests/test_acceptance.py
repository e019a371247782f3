"""Acceptance suite: one test per criterion, each printed as a PASS/FAIL line
in the terminal summary. Thresholds are the stated ones; nothing is loosened."""
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gstar import _kernels as K
from gstar import oracle
from gstar.decomp import Region, cz_decompose, whitney
from gstar.dyadic import (GoodnessParams, bad_cube_probability, finest_level, martingale_terms, reconstruct,
                          sample_shift, top_level)
from gstar.kernel import KernelSpec
from gstar.measure import AtomicMeasure, Cube, SampledFunction
from gstar.operator import (LambdaParams, QuadratureSpec, g_star, node_profile, tail_T, theta, u_t)
from gstar.verify import (adversarial_h, big_piece, check_good_lambda, check_lemma_T, check_lemma_U,
                          check_pointwise_beta, check_testing_condition, local_gstar_on_cube, negative_control_U,
                          power_bounded_measure, random_functions, zeta0)

ROOT = Path(__file__).resolve().parent.parent
PRUNE = 1e-13


def _rel(a, b):
    a, b = np.atleast_1d(a), np.atleast_1d(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def operator_instance(i):
    """Suite-1 instance i: 3..200 atoms (log-uniform), n in {1, 2}, both kernel families."""
    rng = np.random.default_rng(1000 + i)
    n = 1 + i % 2
    size = int(round(math.exp(rng.uniform(math.log(3), math.log(200)))))
    family = "product_gaussian" if i % 3 == 0 else "product_poisson"
    spec = KernelSpec(1.0, float(rng.choice([1.0, 0.5])), 2, family)
    lp = LambdaParams(float(rng.uniform(5.0, 12.0)), 1.0)
    mu = AtomicMeasure(rng.uniform(0, 1, (size, n)), rng.uniform(0.2, 1.0, size))
    fs = [SampledFunction(mu, rng.standard_normal(size)) for _ in range(2)]
    quad = QuadratureSpec(0.01, 10.0, 4, prune_tol=PRUNE)
    return rng, spec, lp, mu, fs, quad


SUITE1 = range(100)


# --------------------------------------------------------------------------
# 1
# --------------------------------------------------------------------------

@pytest.mark.criterion(1, "oracle equivalence of theta, u_t, g_star, tail_T (rel 1e-9, 100 instances)")
def test_oracle_equivalence(detail):
    worst = {"theta": 0.0, "u_t": 0.0, "g_star": 0.0, "tail_T": 0.0}
    sizes = []
    for i in SUITE1:
        rng, spec, lp, mu, fs, quad = operator_instance(i)
        sizes.append(mu.size)
        n = mu.n
        x = rng.uniform(-0.2, 1.2, (2, n))
        t = math.exp(rng.uniform(math.log(0.01), math.log(10.0)))
        errs = {
            "theta": _rel(theta(spec, mu, fs, x, t, prune_tol=PRUNE),
                          [oracle.naive_theta(spec, fs, y, t) for y in x]),
            "u_t": _rel(u_t(spec, lp, mu, fs, x, t, prune_tol=PRUNE),
                        [oracle.naive_u_t(spec, lp, mu, fs, y, t) for y in x]),
            "g_star": _rel(g_star(spec, lp, mu, fs, x[0], quad), oracle.naive_g_star(spec, lp, mu, fs, x[0], quad)),
        }
        Q = Cube(tuple(mu.points[0]), 0.1)
        xs = np.asarray(Q.lower) + Q.side * rng.random((2, n))
        splits = [(math.inf, 0), (math.inf, math.inf), (0, math.inf)][i % 3]
        errs["tail_T"] = _rel(tail_T(spec, lp, mu, fs, splits, xs[0], xs[1], Q, 1.0, quad),
                              oracle.naive_tail_T(spec, lp, mu, fs, splits, xs[0], xs[1], Q, 1.0, quad))
        for k, v in errs.items():
            worst[k] = max(worst[k], v)
    detail("max rel err " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f"; atoms<={max(sizes)}")
    assert max(sizes) <= 200
    assert all(v <= 1e-9 for v in worst.values()), worst


# --------------------------------------------------------------------------
# 2
# --------------------------------------------------------------------------

@pytest.mark.criterion(2, "martingale reconstruction, Pythagoras, orthogonality (50 triples)")
def test_martingale(detail):
    worst_rec = worst_pyth = worst_orth = 0.0
    for i in range(50):
        rng = np.random.default_rng(2000 + i)
        n = 1 + i % 2
        size = int(rng.integers(5, 60))
        mu = AtomicMeasure(rng.uniform(0, 1, (size, n)), rng.uniform(0.1, 1.0, size))
        f = SampledFunction(mu, rng.standard_normal(size))
        fin = finest_level(mu)
        grid = sample_shift(int(rng.integers(2 ** 31)), fin - 2, fin + 40, n)
        s = top_level(mu, grid)
        rec = reconstruct(f, s, grid=grid)
        worst_rec = max(worst_rec, float(np.max(np.abs(rec.values - f.values))))

        deltas, tops = martingale_terms(f, s, fin, grid)
        D = np.array([d.values for _, d in deltas] + [e.values for _, e in tops])
        w = mu.weights
        gram = (D * w) @ D.T
        norm2 = float((f.values ** 2 * w).sum())
        worst_pyth = max(worst_pyth, abs(np.trace(gram) - norm2) / norm2)
        off = gram - np.diag(np.diag(gram))
        worst_orth = max(worst_orth, float(np.abs(off).max()) / norm2)
    detail(f"rec={worst_rec:.1e} pyth={worst_pyth:.1e} orth={worst_orth:.1e}")
    assert worst_rec <= 1e-10
    assert worst_pyth <= 1e-10
    assert worst_orth <= 1e-12


# --------------------------------------------------------------------------
# 3
# --------------------------------------------------------------------------

def _components(lo, hi):
    """Connected components of a union of open intervals."""
    order = np.argsort(lo)
    comps = []
    for a, b in zip(lo[order], hi[order]):
        if comps and a < comps[-1][1]:
            comps[-1][1] = max(comps[-1][1], b)
        else:
            comps.append([a, b])
    return comps


def _closed_in_open_union(comps, a, b):
    return any(c < a and b < d for c, d in comps)


@pytest.mark.criterion(3, "Whitney properties (1), (2) and subfamily mass bound (20 open sets, n=1)")
def test_whitney(detail):
    ratios = []
    for i in range(20):
        rng = np.random.default_rng(3000 + i)
        k = int(rng.integers(1, 5))
        lo = rng.uniform(0, 0.8, k)
        hi = lo + rng.uniform(0.05, 0.4, k)
        region = Region(lo[:, None], hi[:, None])
        size = int(rng.integers(20, 120))
        mu = AtomicMeasure(rng.uniform(-0.2, 1.4, (size, 1)), rng.uniform(0.2, 1.0, size))
        res = whitney(region, mu, rho=21.0)
        comps = _components(lo, hi)
        for Q in res.cubes:
            C = Q.realize()
            c, h = C.center[0], C.side / 2
            assert _closed_in_open_union(comps, c - 10 * h, c + 10 * h), ("property 1", i, Q)
            assert not _closed_in_open_union(comps, c - 21 * h, c + 21 * h), ("property 2", i, Q)
        assert res.property1 and res.property2
        bound = res.mass_omega / (8.0 * res.rho0)
        assert res.mass_subfamily >= bound, (i, res.mass_subfamily, bound)
        ratios.append(res.mass_subfamily / bound if bound else math.inf)
    detail(f"min mass_sub/(mu(Omega)/8rho0)={min(ratios):.2f}")


# --------------------------------------------------------------------------
# 4
# --------------------------------------------------------------------------

@pytest.mark.criterion(4, "Calderon-Zygmund (C-Z-1..3), mass identity, beta masses, stable constants (50)")
def test_cz(detail):
    cz5, cz6 = [], []
    for i in range(50):
        rng = np.random.default_rng(4000 + i)
        n = 1 + i % 2
        mu, _ = power_bounded_measure(rng, int(rng.integers(30, 120)), n, 1.0)
        k = int(rng.integers(1, 10))
        pts = mu.points[rng.choice(mu.size, k, replace=False)]
        pts = pts + rng.normal(0, 0.01, pts.shape) * (i % 3 == 0)
        nu = AtomicMeasure(pts, rng.standard_normal(k), signed=True)
        xi = float(rng.uniform(1.5, 20.0)) * 2 ** (n + 1) * nu.total_variation / mu.total_mass
        res = cz_decompose(nu, mu, xi, m=1.0)
        rep = res.report
        assert rep["cz1"] and rep["cz2"] and rep["cz3"], (i, rep)
        assert rep["identity_error"] <= 1e-12, (i, rep)
        assert rep["beta_mass_max"] <= 1e-12, (i, rep)
        if rep["cube_count"]:
            cz5.append(rep["cz5_constant"])
            cz6.append(rep["cz6_constant"])
    m5, m6 = float(np.median(cz5)), float(np.median(cz6))
    detail(f"{len(cz5)} with cubes; cz5 max/median={max(cz5) / m5:.2f}, cz6 max/median={max(cz6) / m6:.2f}")
    assert len(cz5) >= 25
    assert max(cz5) <= 10 * m5
    assert max(cz6) <= 10 * m6


# --------------------------------------------------------------------------
# 5
# --------------------------------------------------------------------------

@pytest.mark.criterion(5, "bad-cube probability decreases in r (gamma=1/4, 1e4 shifts)")
def test_bad_probability(detail):
    gp = lambda r: GoodnessParams(r, 0.25)   # noqa: E731
    assert GoodnessParams.from_kernel(KernelSpec(1.0, 1.0)).gamma == 0.25
    est = {r: bad_cube_probability(0, (0,), gp(r), 10_000, seed=5) for r in (2, 4, 6, 8)}
    detail(" ".join(f"c({r})={e.estimate:.4f}" for r, e in est.items()))
    for r in (2, 4, 6):
        assert est[r + 2].estimate <= est[r].estimate + 2 * est[r].stderr
    assert est[8].estimate < est[2].estimate


# --------------------------------------------------------------------------
# 6
# --------------------------------------------------------------------------

@pytest.mark.criterion(6, "pointwise lemma suites pass the protocol; negative control fails")
def test_pointwise_lemmas(detail):
    spec, lp = KernelSpec(1.0, 1.0, 2), LambdaParams(6.0, 1.0)
    rng = np.random.default_rng(6)
    mu, h = power_bounded_measure(rng, 50, 1, 1.0)

    reports = list(check_lemma_U(spec, lp, mu, h, samples=200, seed=60))
    reports += check_lemma_T(spec, lp, mu, Cube((0.5,), 0.2), c0=1.0, samples=200, seed=61)

    nu1 = AtomicMeasure(mu.points[::5], rng.standard_normal(len(mu.points[::5])), signed=True)
    nu2 = AtomicMeasure(mu.points[2::7], rng.standard_normal(len(mu.points[2::7])), signed=True)
    c1 = cz_decompose(nu1, mu, 8 * nu1.total_variation / mu.total_mass)
    c2 = cz_decompose(nu2, mu, 8 * nu2.total_variation / mu.total_mass)
    quad = QuadratureSpec.default_for(mu, nodes_per_decade=8)
    reports += check_pointwise_beta(c1, c2, nu1, nu2, spec, lp, mu, quad, samples=200, seed=62)

    detected, ctrl = negative_control_U(spec, lp, mu, h, samples=200, seed=63, shift=1.0)
    failed = [r.lemma for r in reports if not r.passed]
    vacuous = [r.lemma for r in reports if r.samples == (0, 0)]
    detail(f"{len(reports) - len(failed)}/{len(reports)} pass; control failed in "
           f"{sum(not r.passed for r in ctrl)}/{len(ctrl)} replicates")
    assert not failed, failed
    assert not vacuous, vacuous
    assert all(r.samples == (200, 200) for r in reports), [(r.lemma, r.samples) for r in reports]
    assert detected


# --------------------------------------------------------------------------
# 7
# --------------------------------------------------------------------------

@pytest.mark.criterion(7, "cone domination at shared nodes and lambda monotonicity (suite 1)")
def test_cone_and_lambda(detail):
    checked = 0
    for i in SUITE1:
        rng, spec, lp, mu, fs, quad = operator_instance(i)
        exact = QuadratureSpec(quad.t_min, quad.t_max, quad.nodes_per_decade)
        x = rng.uniform(-0.2, 1.2, (3, mu.n))
        off = node_profile(spec, lp, mu, fs, x, exact)
        cone = node_profile(spec, lp, mu, fs, x, exact, mode=K.WEIGHT_CONE)
        # squared profiles: S_t^2 <= 2^(m lambda) g_t^2 node by node, no tolerance
        assert np.all(cone <= 2.0 ** lp.mlam * off), i
        ladder = [lp.lam, lp.lam + 1.5, lp.lam + 4.0]
        vals = [g_star(spec, LambdaParams(l, lp.m), mu, fs, x, exact) for l in ladder]
        assert np.all(vals[0] >= vals[1]) and np.all(vals[1] >= vals[2]), i
        checked += 1
    detail(f"{checked} instances x 3 points")


# --------------------------------------------------------------------------
# 8
# --------------------------------------------------------------------------

@pytest.mark.criterion(8, "big piece mu(G_Q) >= (1-delta0)/2 mu(Q) at realized C0 (10 instances)")
def test_big_piece(detail):
    assert zeta0(1.0, 0.5, 2.0) == 2.0
    spec = KernelSpec(1.0, 1.0, 2)
    lp = LambdaParams(6.0, 1.0)
    p0, delta0 = 2.0, 0.5
    margins = []
    for i in range(10):
        rng = np.random.default_rng(8000 + i)
        n = 1 + i % 2
        mu, _ = power_bounded_measure(rng, int(rng.integers(30, 90)), n, 1.0)
        Q = Cube(tuple(rng.uniform(0.3, 0.7, n)), float(rng.uniform(0.3, 0.8)))
        quad = QuadratureSpec.default_for(mu, nodes_per_decade=8)
        vals = local_gstar_on_cube(spec, lp, mu, Q, quad)
        H = adversarial_h(mu, Q, vals, delta0 / 2) if i % 2 else None
        tc = check_testing_condition(spec, lp, mu, Q, H, p0, delta0, quad, vals)
        assert tc.passed
        res = big_piece(mu, Q, H, p0, delta0, tc.C0, vals)
        assert res.zeta0 == (2 * tc.C0 / (1 - delta0)) ** (1 / p0)
        assert res.mass_G >= (1 - delta0) / 2 * res.mass_Q, (i, res.to_json())
        margins.append(res.mass_G / res.mass_Q)
    detail(f"min mu(G)/mu(Q)={min(margins):.3f} (bound 0.25)")


# --------------------------------------------------------------------------
# 9
# --------------------------------------------------------------------------

@pytest.mark.criterion(9, "good-lambda: bisection finds delta* > 0 on a 40-point xi grid (5 instances)")
def test_good_lambda(detail):
    spec = KernelSpec(1.0, 1.0, 2)
    lp = LambdaParams(6.0, 1.0)
    stars = []
    for i, (theta_, rho0) in enumerate([(1.0, 1), (0.5, 2), (1.0, 4), (0.25, 1), (0.8, 3)]):
        rng = np.random.default_rng(9000 + i)
        n = 1 + i % 2
        mu, _ = power_bounded_measure(rng, int(rng.integers(30, 80)), n, 1.0)
        fs = random_functions(rng, mu, 2, nonnegative=bool(i % 2))
        quad = QuadratureSpec.default_for(mu, nodes_per_decade=8)
        t0 = 4 * quad.t_min
        res = check_good_lambda(spec, lp, mu, fs, t0, 0.1, 1e-3, theta_, rho0, quad, xi_count=40)
        assert len(res.xi_grid) == 40
        assert res.delta_star > 0, i
        at = check_good_lambda(spec, lp, mu, fs, t0, 0.1, res.delta_star, theta_, rho0, quad, xi_count=40)
        assert at.fraction == 1.0 and np.all(at.lhs <= at.rhs), i
        stars.append(res.delta_star)
    detail("delta* in [" + f"{min(stars):.2e}, {max(stars):.2e}]")


# --------------------------------------------------------------------------
# 10
# --------------------------------------------------------------------------

COMMAND_FOR = {"two_atom": "eval", "lusin_random": "lusin"}


def _run_all(outdir, threads):
    """All bundled configs in one fresh interpreter."""
    code = (
        "import sys, glob, os\n"
        "from gstar import cli\n"
        f"special = {COMMAND_FOR!r}\n"
        "for c in sorted(glob.glob(os.path.join(sys.argv[1], '*.json'))):\n"
        "    b = os.path.basename(c)[:-5]\n"
        "    cmd = special.get(b, 'verify-lemma' if b.startswith('verify_') else b.replace('_', '-'))\n"
        "    rc = cli.main([cmd, '--config', c, '--out', os.path.join(sys.argv[2], b + '.out'),"
        " '--threads', sys.argv[3]])\n"
        "    assert rc == 0, (b, rc)\n"
    )
    subprocess.run([sys.executable, "-c", code, str(ROOT / "configs"), str(outdir), str(threads)],
                   check=True, capture_output=True)
    return {p.name: p.read_bytes() for p in sorted(outdir.iterdir())}


@pytest.mark.criterion(10, "CLI outputs byte-identical across runs and --threads 1 vs 8")
def test_cli_reproducible(tmp_path, detail):
    runs = []
    for name, threads in (("a", 1), ("b", 1), ("c", 8)):
        d = tmp_path / name
        d.mkdir()
        runs.append(_run_all(d, threads))
    a, b, c = runs
    n_configs = len(list((ROOT / "configs").glob("*.json")))
    detail(f"{n_configs} configs, {len(a)} files")
    assert len(a) >= n_configs
    assert a == b
    assert a == c
