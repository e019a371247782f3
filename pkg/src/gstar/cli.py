"""Command-line experiment runner.

Every subcommand reads one JSON config and writes one CSV or JSON artifact,
plus ``<stem>.config.json`` holding every setting it used, defaults included.
Exit codes: 0 ok, 2 config or file problem, 3 a checked criterion failed,
4 a NaN reached the output.
"""
import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import _accel
from . import dyadic as dy
from . import io
from . import oracle
from .decomp import DoublingNotFoundError, Region, cz_decompose, whitney
from .kernel import KernelSpec
from .measure import AtomicMeasure, Cube, SampledFunction
from .operator import LambdaParams, QuadratureSpec, g_star, lusin_area
from .verify import (ROLLUP_HEADER, adversarial_h, big_piece, check_good_lambda, check_lemma_T,
                     check_lemma_U, check_pointwise_beta, check_testing_condition, local_gstar_on_cube,
                     negative_control_U, power_bounded_measure)

EXIT_OK, EXIT_CONFIG, EXIT_CRITERION, EXIT_NAN = 0, 2, 3, 4


class ConfigError(Exception):
    def __init__(self, where, msg):
        super().__init__(f"{where}: {msg}")


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------

def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(str(path), f"cannot read config ({e.strerror})")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}", e.msg)
    if not isinstance(cfg, dict):
        raise ConfigError(str(path), "top level must be an object")
    cfg["_dir"] = str(Path(path).resolve().parent)
    cfg["_resolved"] = {}
    return cfg


def _record(cfg, key, value):
    cfg.setdefault("_resolved", {})[key] = value
    return value


def _get(cfg, key, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(key, "missing required field")
        return _record(cfg, key, default)
    return _record(cfg, key, cfg[key])


def _wrap(field, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(field, str(e))


def parse_measure(cfg, key="measure", required=True):
    d = _get(cfg, key, required=required)
    if d is None:
        return None
    if isinstance(d, dict) and "file" in d:
        p = Path(cfg["_dir"]) / d["file"]
        try:
            d = json.loads(p.read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"{key}.file", f"cannot read {p} ({e.strerror})")
        except json.JSONDecodeError as e:
            raise ConfigError(f"{key}.file:{e.lineno}:{e.colno}", e.msg)
    if isinstance(d, dict) and "random" in d:
        r = d["random"]
        return _wrap(f"{key}.random", lambda: power_bounded_measure(
            np.random.default_rng(int(r.get("seed", 0))), int(r["size"]), int(r.get("n", 1)),
            float(r.get("m", 1.0)))[0])
    return _wrap(key, AtomicMeasure.from_json, d)


def parse_functions(cfg, mu, kappa):
    d = _get(cfg, "functions", "ones")
    if d == "ones":
        return [SampledFunction(mu, np.ones(mu.size)) for _ in range(kappa)]
    if not isinstance(d, list) or len(d) != kappa:
        raise ConfigError("functions", f"need a list of {kappa} value lists or \"ones\"")
    out = []
    for i, vals in enumerate(d):
        v = np.asarray(vals, dtype=float)
        if v.shape != (mu.size,):
            raise ConfigError(f"functions[{i}]", f"need {mu.size} values, one per atom")
        out.append(SampledFunction(mu, v))
    return out


def parse_kernel(cfg):
    spec = _wrap("kernel", KernelSpec.from_json, _get(cfg, "kernel", {"m": 1.0, "alpha": 1.0}))
    _record(cfg, "kernel", spec.to_json())
    return spec


def parse_lambda(cfg, spec):
    return _wrap("lambda", LambdaParams, float(_get(cfg, "lambda", 2 * spec.kappa + 2.0)), spec.m)


def parse_quadrature(cfg, mu, oracle_mode=False):
    d = dict(_get(cfg, "quadrature", {}))
    if oracle_mode:
        d["prune_tol"] = 0.0
    quad = _wrap("quadrature", QuadratureSpec.from_json, d, mu)
    _record(cfg, "quadrature", quad.to_json())
    return quad


def parse_points(cfg, n, key="points"):
    pts = np.asarray(_get(cfg, key, required=True), dtype=float)
    try:
        return pts.reshape(-1, n)
    except ValueError:
        raise ConfigError(key, f"points must have {n} coordinates each")


def parse_cube(cfg, key="cube"):
    d = _get(cfg, key, required=True)
    return _wrap(key, lambda: Cube(tuple(d["center"]), float(d["side"])))


def parse_goodness(cfg, spec=None):
    d = _get(cfg, "goodness", {})
    r = int(d.get("r", 4))
    if "gamma" in d:
        gp = _wrap("goodness", dy.GoodnessParams, r, float(d["gamma"]))
    elif spec is not None:
        gp = _wrap("goodness", dy.GoodnessParams.from_kernel, spec, r)
    else:
        gp = _wrap("goodness", dy.GoodnessParams, r)
    _record(cfg, "goodness", {"r": gp.r, "gamma": gp.gamma})
    return gp


def parse_grid(cfg, mu, seed):
    d = _get(cfg, "grid")
    if d is None:
        return None
    if "bits" in d:
        return _wrap("grid", dy.ShiftSequence.from_json, d)
    j_min = int(d.get("j_min", dy.default_j_min(mu) if mu is not None else 0))
    j_max = int(d.get("j_max", j_min + 32))
    grid_seed = int(d.get("seed", seed))
    _record(cfg, "grid", {**d, "j_min": j_min, "j_max": j_max, "seed": grid_seed})
    return _wrap("grid", dy.sample_shift, grid_seed, j_min, j_max, mu.n if mu else int(d["n"]))


# --------------------------------------------------------------------------
# subcommands: each returns (payload, kind, failed)
# --------------------------------------------------------------------------

def _coord_header(n):
    return [f"x{i}" for i in range(n)]


def cmd_eval(cfg, args):
    mu = parse_measure(cfg)
    spec = parse_kernel(cfg)
    lp = parse_lambda(cfg, spec)
    quad = parse_quadrature(cfg, mu, args.oracle)
    fs = parse_functions(cfg, mu, spec.kappa)
    X = parse_points(cfg, mu.n)
    if args.oracle:
        vals = [oracle.naive_g_star(spec, lp, mu, fs, x, quad) for x in X]
    else:
        vals = np.atleast_1d(g_star(spec, lp, mu, fs, X, quad))
    rows = [list(x) + [v] for x, v in zip(X, vals)]
    return (_coord_header(mu.n) + ["g_star"], rows), "csv", False


def cmd_lusin(cfg, args):
    mu = parse_measure(cfg)
    spec = parse_kernel(cfg)
    lp = parse_lambda(cfg, spec)
    quad = parse_quadrature(cfg, mu, args.oracle)
    fs = parse_functions(cfg, mu, spec.kappa)
    X = parse_points(cfg, mu.n)
    if args.oracle:
        S = [oracle.naive_g_star(spec, lp, mu, fs, x, quad, cone=True) for x in X]
        G = [oracle.naive_g_star(spec, lp, mu, fs, x, quad) for x in X]
    else:
        S = np.atleast_1d(lusin_area(spec, mu, fs, X, quad, lp))
        G = np.atleast_1d(g_star(spec, lp, mu, fs, X, quad))
    rows = [list(x) + [s, g] for x, s, g in zip(X, S, G)]
    return (_coord_header(mu.n) + ["lusin", "g_star"], rows), "csv", False


def cmd_grid_sample(cfg, args):
    j_min = int(_get(cfg, "j_min", required=True))
    j_max = int(_get(cfg, "j_max", required=True))
    n = int(_get(cfg, "n", 1))
    return _wrap("grid", dy.sample_shift, args.seed, j_min, j_max, n), "json", False


def cmd_goodness(cfg, args):
    mu = parse_measure(cfg, required=False)
    gp = parse_goodness(cfg, parse_kernel(cfg) if "kernel" in cfg else None)
    search = _get(cfg, "search_levels")
    grid = parse_grid(cfg, mu, args.seed)
    if "cubes" in cfg:
        cubes = [dy.DyadicCube(int(c["level"]), tuple(c["index"]), grid) for c in _get(cfg, "cubes")]
    else:
        if mu is None:
            raise ConfigError("cubes", "give a cube list or a measure")
        level = int(_get(cfg, "level", dy.finest_level(mu)))
        cubes = dy.occupied_cubes(mu, level, grid)
    rows = [dy.is_good(c, gp, search).row() for c in cubes]
    return (dy.GOODNESS_HEADER, rows), "csv", False


def cmd_bad_prob(cfg, args):
    gamma = float(_get(cfg, "gamma", 0.25))
    rs = [int(r) for r in _get(cfg, "r_values", [2, 4, 6, 8])]
    trials = int(_get(cfg, "trials", 10000))
    level = int(_get(cfg, "level", 0))
    index = tuple(_get(cfg, "index", [0]))
    est = [_wrap("r_values", dy.bad_cube_probability, level, index, dy.GoodnessParams(r, gamma), trials,
                 args.seed + i) for i, r in enumerate(rs)]
    mono = all(b.estimate <= a.estimate + 2 * a.stderr for a, b in zip(est, est[1:]))
    payload = {"level": level, "index": list(index), "gamma": gamma, "trials": trials, "seed": args.seed,
               "estimates": est, "monotone_within_2_stderr": mono}
    return payload, "json", False


def cmd_martingale(cfg, args):
    mu = parse_measure(cfg)
    f = parse_functions({"functions": [_get(cfg, "function", [1.0] * mu.size)]}, mu, 1)[0]
    grid = parse_grid(cfg, mu, args.seed)
    s = int(_get(cfg, "top_level", dy.top_level(mu, grid)))
    finest = int(_get(cfg, "finest_level", dy.finest_level(mu)))
    rec = _wrap("finest_level", dy.reconstruct, f, s, finest, mu, grid)
    err = float(np.abs(rec.values - f.values).max())
    deltas, tops = dy.martingale_terms(f, s, finest, grid)
    w = mu.weights
    norm2 = float((f.values ** 2 * w).sum())
    energy = sum(float((D.values ** 2 * w).sum()) for _, D in deltas + tops)
    worst_inner = 0.0
    for i, (_, A) in enumerate(deltas):
        for _, B in deltas[i + 1:]:
            worst_inner = max(worst_inner, abs(float((A.values * B.values * w).sum())))
    pyth = abs(energy - norm2) / norm2 if norm2 > 0 else 0.0
    payload = {"top_level": s, "finest_level": finest, "grid": grid,
               "reconstruction_max_error": err, "pythagoras_relative_error": pyth,
               "orthogonality_max": worst_inner / norm2 if norm2 > 0 else 0.0,
               "terms": len(deltas) + len(tops)}
    failed = err > 1e-10 or pyth > 1e-10 or payload["orthogonality_max"] > 1e-12
    return payload, "json", failed


def cmd_whitney(cfg, args):
    mu = parse_measure(cfg)
    region = _wrap("region", Region.from_json, _get(cfg, "region", required=True))
    res = _wrap("region", whitney, region, mu, float(_get(cfg, "rho", 21.0)), _get(cfg, "min_level"),
                int(_get(cfg, "depth", 10)))
    return res, "json", not (res.property1 and res.property2 and res.property_c)


def cmd_czdecomp(cfg, args):
    mu = parse_measure(cfg)
    nu = parse_measure(cfg, "nu")
    xi = float(_get(cfg, "xi", required=True))
    spec = parse_kernel(cfg)
    try:
        res = _wrap("xi", cz_decompose, nu, mu, xi, spec.m)
    except DoublingNotFoundError as e:
        raise ConfigError("measure", str(e))
    r = res.report
    print(f"cubes={r['cube_count']} cz5={io.fmt(r['cz5_constant'])} cz6={io.fmt(r['cz6_constant'])}")
    failed = not (r["cz1"] and r["cz2"] and r["cz3"])
    return res, "json", failed


def cmd_verify_lemma(cfg, args):
    lemma = (args.lemma or _get(cfg, "lemma", "U")).upper()
    spec = parse_kernel(cfg)
    lp = parse_lambda(cfg, spec)
    samples = int(_get(cfg, "samples", 200))
    rng = np.random.default_rng(args.seed)
    size = int(_get(cfg, "size", 50))
    mu, spacing = power_bounded_measure(rng, size, int(_get(cfg, "n", 1)), spec.m)
    reports = []
    if lemma == "U":
        reports.extend(_wrap("lemma", check_lemma_U, spec, lp, mu, spacing, samples, args.seed))
        if _get(cfg, "negative_control", True):
            detected, ctrl = negative_control_U(spec, lp, mu, spacing, samples, args.seed,
                                                float(_get(cfg, "corrupt_shift", 1.0)),
                                                int(_get(cfg, "replicates", 16)))
            payload_ctrl = {"detected": detected, "replicates": ctrl}
        else:
            payload_ctrl = None
    elif lemma == "T":
        Q = Cube(tuple(_get(cfg, "cube_center", [0.5] * mu.n)), float(_get(cfg, "cube_side", 0.2)))
        reports.extend(check_lemma_T(spec, lp, mu, Q, float(_get(cfg, "c0", 1.0)), samples, args.seed))
        payload_ctrl = None
    elif lemma in ("BETA", "W", "POINTWISE"):
        nu1 = AtomicMeasure(mu.points[::5], rng.standard_normal(len(mu.points[::5])), signed=True)
        nu2 = AtomicMeasure(mu.points[2::7], rng.standard_normal(len(mu.points[2::7])), signed=True)
        factor = 2.0 ** (mu.n + 1)
        c1 = cz_decompose(nu1, mu, 2 * factor * nu1.total_variation / mu.total_mass, spec.m)
        c2 = cz_decompose(nu2, mu, 2 * factor * nu2.total_variation / mu.total_mass, spec.m)
        quad = QuadratureSpec.default_for(mu, nodes_per_decade=int(_get(cfg, "nodes_per_decade", 8)))
        reports.extend(check_pointwise_beta(c1, c2, nu1, nu2, spec, lp, mu, quad, samples, args.seed))
        payload_ctrl = None
    else:
        raise ConfigError("lemma", f"unknown lemma id {lemma!r}; use U, T or beta")
    failed = not all(r.passed for r in reports)
    if payload_ctrl is not None and not payload_ctrl["detected"]:
        failed = True
    payload = {"lemma": lemma, "seed": args.seed, "reports": reports, "negative_control": payload_ctrl}
    rollup = (ROLLUP_HEADER, [r.row() for r in reports])
    return (payload, rollup), "json+csv", failed


def _testing_setup(cfg, args):
    mu = parse_measure(cfg)
    spec = parse_kernel(cfg)
    lp = parse_lambda(cfg, spec)
    quad = parse_quadrature(cfg, mu, args.oracle)
    Q = parse_cube(cfg)
    p0 = float(_get(cfg, "p0", 2.0))
    delta0 = float(_get(cfg, "delta0", 0.5))
    vals = local_gstar_on_cube(spec, lp, mu, Q, quad)
    hmode = _get(cfg, "H", "empty")
    if hmode == "adversarial":
        H = adversarial_h(mu, Q, vals, float(_get(cfg, "h_fraction", delta0 / 2)))
    elif hmode == "empty":
        H = np.zeros(mu.size, dtype=bool)
    else:
        raise ConfigError("H", "use \"empty\" or \"adversarial\"")
    return mu, spec, lp, quad, Q, p0, delta0, vals, H


def cmd_testing_condition(cfg, args):
    mu, spec, lp, quad, Q, p0, delta0, vals, H = _testing_setup(cfg, args)
    bound = float(_get(cfg, "C0_bound", math.inf))
    res = _wrap("H", check_testing_condition, spec, lp, mu, Q, H, p0, delta0, quad, vals, 64, bound)
    return {"p0": p0, "delta0": delta0, "result": res}, "json", not res.passed


def cmd_big_piece(cfg, args):
    mu, spec, lp, quad, Q, p0, delta0, vals, H = _testing_setup(cfg, args)
    tc = _wrap("H", check_testing_condition, spec, lp, mu, Q, H, p0, delta0, quad, vals)
    C0 = float(_get(cfg, "C0", tc.C0))
    res = big_piece(mu, Q, H, p0, delta0, C0, vals)
    return {"p0": p0, "delta0": delta0, "C0": C0, "testing": tc, "big_piece": res}, "json", not res.holds


def cmd_good_lambda(cfg, args):
    mu = parse_measure(cfg)
    spec = parse_kernel(cfg)
    lp = parse_lambda(cfg, spec)
    quad = parse_quadrature(cfg, mu, args.oracle)
    fs = parse_functions(cfg, mu, spec.kappa)
    t0 = float(_get(cfg, "t0", quad.t_min * 4))
    res = _wrap("good_lambda", check_good_lambda, spec, lp, mu, fs, t0, float(_get(cfg, "epsilon", 0.1)),
                float(_get(cfg, "delta", 1e-3)), float(_get(cfg, "theta", 1.0)), float(_get(cfg, "rho0", 1.0)),
                quad, None, int(_get(cfg, "xi_count", 40)))
    return {"t0": t0, "result": res}, "json", not res.delta_star > 0


COMMANDS = {
    "eval": cmd_eval, "lusin": cmd_lusin, "grid-sample": cmd_grid_sample, "goodness": cmd_goodness,
    "bad-prob": cmd_bad_prob, "martingale": cmd_martingale, "whitney": cmd_whitney,
    "czdecomp": cmd_czdecomp, "verify-lemma": cmd_verify_lemma,
    "testing-condition": cmd_testing_condition, "good-lambda": cmd_good_lambda, "big-piece": cmd_big_piece,
}


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _write(path, text):
    try:
        Path(path).write_bytes(text.encode("utf-8"))
    except OSError as e:
        raise ConfigError(str(path), f"cannot write output ({e.strerror})")


def render(payload, kind, out):
    if kind == "csv":
        header, rows = payload
        _write(out, io.csv_text(header, rows))
    elif kind == "json":
        _write(out, io.dumps(payload))
    else:
        data, (header, rows) = payload
        _write(out, io.dumps(data))
        _write(Path(out).with_suffix(".csv"), io.csv_text(header, rows))


def build_parser():
    p = argparse.ArgumentParser(prog="gstar", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", required=True, help="output path (CSV or JSON by command)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--oracle", action="store_true", help="naive unpruned evaluation")
    p.add_argument("--lemma", default=None, help="lemma id for verify-lemma: U, T or beta")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    _accel.set_threads(args.threads)
    try:
        cfg = load_config(args.config)
        if args.seed is None:
            args.seed = int(_get(cfg, "seed", 0))
        payload, kind, failed = COMMANDS[args.command](cfg, args)
        render(payload, kind, args.out)
        # threads are left out: results do not depend on them
        flags = {"command": args.command, "seed": args.seed,
                 "oracle": args.oracle, "lemma": args.lemma}
        out = Path(args.out)
        _write(out.with_name(out.stem + ".config.json"), io.dumps({**flags, **cfg["_resolved"]}))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except io.NonFiniteError:
        print(f"NaN encountered in {args.command}", file=sys.stderr)
        return EXIT_NAN
    if failed:
        print(f"{args.command}: criterion failed", file=sys.stderr)
        return EXIT_CRITERION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
