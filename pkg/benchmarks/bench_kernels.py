"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--atoms 2000] [--points 500] [--repeat 5]

Each row is the median of ``--repeat`` runs. The pruned rows use the compiled
path only (the numpy path always sums everything). The last block times a
full g* evaluation with each backend swapped in.
"""
import argparse
import time

import numpy as np

from gstar import _kernels as K
from gstar.kernel import KernelSpec
from gstar.measure import AtomicMeasure, SampledFunction
from gstar.operator import LambdaParams, QuadratureSpec, g_star


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def kernel_rows(args, rng):
    n = 1
    Y = rng.uniform(0, 1, (args.points, n))
    Z, c = K.sort_first(rng.uniform(0, 1, (args.atoms, n)), rng.uniform(0.1, 1, args.atoms))
    t = 1e-3
    scale, p = K.slot_scale(t, 1.0, 1.0, K.POISSON, 0.0)
    ip = K.int_exponent(p)
    mlam = 8.0
    rows = []
    for name, impl, tol in (("numpy", K.numpy_impl, 0.0), ("numba", K.numba_impl, 0.0),
                            ("numba pruned 1e-12", K.numba_impl, 1e-12)):
        if impl is K.numba_impl and not K.HAS_NUMBA:
            continue
        s = best_of(lambda: impl["slot_sum"](Y, Z, c, t, scale, p, ip, K.POISSON, tol), args.repeat)
        w = best_of(lambda: impl["weighted_sum"](Y, Z, c, t, mlam, 8, K.WEIGHT_THETA, tol), args.repeat)
        rows.append((name, s, w))
    return rows


def other_rows(args, rng):
    X = rng.uniform(0, 1, (args.points, 1))
    Xp = X + rng.uniform(-1e-3, 1e-3, X.shape)
    Y = rng.uniform(0, 1, (args.atoms, 1))
    a = rng.uniform(0.1, 1, args.atoms)
    trials, depth = 20 * args.points, 12
    lo = rng.uniform(0, 1, (trials, 2))
    sides = 2.0 ** np.arange(1, depth + 1) * 1e-3
    anc_off = rng.uniform(0, 1, (trials, depth, 2)) * sides[None, :, None]
    thresholds = sides ** 0.75 * 1e-3 ** 0.25
    rows = []
    for name, impl in (("numpy", K.numpy_impl), ("numba", K.numba_impl)):
        if impl is K.numba_impl and not K.HAS_NUMBA:
            continue
        d = best_of(lambda: impl["diff_weighted_sum"](X, Xp, Y, a, 1e-3, 4.0, 4), args.repeat)
        b = best_of(lambda: impl["bad_flags"](lo, anc_off, 1e-3, sides, thresholds), args.repeat)
        rows.append((name, d, b))
    return rows, trials


def gstar_rows(args, rng):
    mu = AtomicMeasure(rng.uniform(0, 1, (args.atoms // 4, 1)), rng.uniform(0.1, 1, args.atoms // 4))
    fs = [SampledFunction(mu, rng.standard_normal(mu.size)) for _ in range(2)]
    spec, lp = KernelSpec(1.0, 1.0, 2), LambdaParams(6.0, 1.0)
    x = rng.uniform(0, 1, (20, 1))
    rows = []
    saved = K._active
    try:
        for name, impl, tol in (("numpy", K.numpy_impl, 0.0), ("numba", K.numba_impl, 0.0),
                                ("numba pruned 1e-12", K.numba_impl, 1e-12)):
            if impl is K.numba_impl and not K.HAS_NUMBA:
                continue
            K._active = impl
            quad = QuadratureSpec(1e-3, 10.0, 8, prune_tol=tol)
            rows.append((name, best_of(lambda: g_star(spec, lp, mu, fs, x, quad), max(1, args.repeat // 2))))
    finally:
        K._active = saved
    return rows, mu.size


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--atoms", type=int, default=2000)
    ap.add_argument("--points", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    print(f"kernels: {args.points} points x {args.atoms} atoms, t = 1e-3 (numba available: {K.HAS_NUMBA})")
    print(f"{'backend':<20}{'slot_sum [ms]':>15}{'weighted_sum [ms]':>20}")
    base = None
    for name, s, w in kernel_rows(args, rng):
        base = base or (s, w)
        print(f"{name:<20}{1e3 * s:>15.2f}{1e3 * w:>20.2f}   x{base[0] / s:.1f} / x{base[1] / w:.1f}")

    rows, trials = other_rows(args, rng)
    print(f"\n{'backend':<20}{'diff_sum [ms]':>15}{'bad_flags [ms]':>20}   ({trials} grid trials)")
    base = None
    for name, d, b in rows:
        base = base or (d, b)
        print(f"{name:<20}{1e3 * d:>15.2f}{1e3 * b:>20.2f}   x{base[0] / d:.1f} / x{base[1] / b:.1f}")

    rows, size = gstar_rows(args, rng)
    print(f"\ng_star: 20 points, {size} atoms, 32 nodes")
    ref = rows[0][1]
    for name, tm in rows:
        print(f"{name:<20}{1e3 * tm:>15.2f} ms   x{ref / tm:.1f}")


if __name__ == "__main__":
    main()
