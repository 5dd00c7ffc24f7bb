"""Command-line entry point: ``rieszkit <command> [options]``.

Exit codes: 0 success, 1 a checked inequality failed, 2 usage error,
3 falsification alarm (a certified ratio above the proven ceiling 2).
Tabular output is CSV, structured output JSON lines; both start with the
resolved configuration and the toolkit version so any artifact can be replayed.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .blaschke import NotFactorizableError, ZeroOnCircleError, blaschke_eval, BlaschkeProduct, find_zeros, \
    trace_inequality_chain
from .circle import DEFAULT_POINTS, format_coefficients, read_coefficients
from .extremal import MODES, SearchConfig, maximize, objective
from .lemma import TOL_ABS, TOL_REL, batch_row, check_main_lemma, run_batch, write_batch_csv
from .measures import (CircleMeasure, PolydiscPoint, chain_increment_l1, chain_increment_mc,
                       polydisc_diagnostics, fm_riesz_demo, fourier_coefficient, is_analytic,
                       poisson_chain, poisson_extension)
from .torus import (TorusSampler, TrigPoly, abschnitt, abschnitt_substitution,
                    check_abschnitt_monotone, check_h1_abschnitt_lemma, check_lp_density_convergence,
                    chain_reconstruct, is_nondecreasing, norm_lp, random_trig_poly, variable)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_ALARM = 0, 1, 2, 3
TORUS_CHECKS = ("monotone", "substitution", "h1", "chain", "density")


class UsageError(Exception):
    pass


# -- artifacts --------------------------------------------------------------------

def resolved_config(args: argparse.Namespace) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        # neither the artifact location nor the pool size changes any result
        if k in ("func", "out", "workers") or callable(v):
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def header_lines(args) -> list:
    return [f"rieszkit {__version__}", "config " + json.dumps(resolved_config(args), sort_keys=True)]


@contextlib.contextmanager
def artifact(args, default_stream=None):
    """Open ``--out`` for writing, or yield ``default_stream`` (possibly None)."""
    if args.out is None:
        yield default_stream
        return
    with open(args.out, "w", newline="") as fh:
        yield fh


def write_jsonl(stream, args, records) -> None:
    if stream is None:
        return
    stream.write(json.dumps({"version": __version__, "config": resolved_config(args)}, sort_keys=True) + "\n")
    for rec in records:
        stream.write(json.dumps(rec, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) if isinstance(v, complex) else float(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def tolerances(args) -> dict:
    return {"tol_abs": args.tol_abs, "tol_rel": args.tol_rel}


# -- self tests -------------------------------------------------------------------

def _close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def _selftests_verify_lemma():
    mono = check_main_lemma([0, 1], 0.2, 0.5, 64)
    const = check_main_lemma([2.5], 0.3, 0.8, 64)
    lin = check_main_lemma([1, 1e-4], 0.0, 0.99, DEFAULT_POINTS)
    return [
        ("monomial z, r=0.2, rho=0.5: lhs 0.3, rhs 2 sqrt(0.21)",
         _close(mono.lhs, 0.3) and _close(mono.rhs_main, 2 * math.sqrt(0.21))),
        ("constant: lhs = rhs = 0", const.lhs == 0 and const.rhs_main == 0),
        ("1 + 1e-4 z, r=0, rho=0.99: ratio in [1.40, 1.4143]", 1.40 <= lin.ratio <= 1.4143),
    ]


def _selftests_search_constant():
    return [
        ("constant f: objective 0", objective([3.0], 0.2, 0.7) == 0.0),
        ("1 + 1e-4 z at r=0, rho=0.99: within 1e-2 of sqrt 2",
         abs(objective([1, 1e-4], 0.0, 0.99, DEFAULT_POINTS) - math.sqrt(2)) <= 1e-2),
        ("monomial z at (0.2, 0.5): 0.3/sqrt(0.21)", _close(objective([0, 1], 0.2, 0.5), 0.3 / math.sqrt(0.21))),
    ]


def _selftests_trace():
    zs = find_zeros([-1 / 16, 0, 1], 0.5)
    const = trace_inequality_chain([2.0], 0.3, 0.7, 256)
    lin = trace_inequality_chain([1, 0.1], 0.0, 0.9)
    e = lin.step("e_endpoint_g")
    return [
        ("zeros of z^2 - 1/16 inside |z| < 0.5 are +-1/4",
         len(zs) == 2 and _close(sorted(z.real for z in zs)[0], -0.25, 1e-12)
         and _close(sorted(z.real for z in zs)[1], 0.25, 1e-12)),
        ("Blaschke factor with zero 1/4 at z = 1/2 equals -1",
         _close(blaschke_eval(BlaschkeProduct([0.25], 0.5), 0.5), -1.0, 1e-12)),
        ("constant f: every step is an equality; 1 + 0.1 z: ||g_rho||_2^2 = ||f_rho||_1",
         all(abs(s.lhs - s.rhs) <= 1e-12 for s in const.steps)
         and _close(e.lhs, e.rhs, 1e-9)),
    ]


def _selftests_torus():
    T = TrigPoly({(): 3, (1, 1): 2, (0, 0, 1): 5})
    grid = TorusSampler(2, "grid", 256)
    rep = check_h1_abschnitt_lemma(TrigPoly({(): 1, (0, 1): 1}), 1, 2, grid)
    n = 4 / math.pi
    return [
        ("A_2(3 + 2 x1 x2 + 5 x3) = 3 + 2 x1 x2", abschnitt(T, 2) == TrigPoly({(): 3, (1, 1): 2})),
        ("||x1 + x2||_2 = sqrt 2", _close(norm_lp(variable(1) + variable(2), 2.0, grid), math.sqrt(2), 1e-12)),
        ("P = 1 + x2, d1=1, d2=2: lhs 1 <= 2 sqrt2 sqrt(4/pi) sqrt(4/pi - 1)",
         _close(rep.lhs, 1.0, 1e-12) and rep.lhs <= 2 * math.sqrt(2) * math.sqrt(n * (n - 1))),
    ]


def _selftests_measures():
    delta = CircleMeasure.point_mass(0.0)
    mu = CircleMeasure.from_density({0: 1, 1: 1})
    return [
        ("point mass at 0: every Fourier coefficient is 1",
         all(_close(fourier_coefficient(delta, k), 1.0, 1e-15) for k in (-3, 0, 5))),
        ("density 1 + x: analytic, extension 1 + z",
         is_analytic(mu) and _close(poisson_extension(mu, 0.3 - 0.4j), 1.3 - 0.4j, 1e-15)),
        ("z_{d+1} = 0: chain increment 0", chain_increment_l1(PolydiscPoint.finite([0.5]), 1) <= 1e-15),
    ]


SELFTESTS = {
    "verify-lemma": _selftests_verify_lemma,
    "search-constant": _selftests_search_constant,
    "trace": _selftests_trace,
    "torus": _selftests_torus,
    "measures": _selftests_measures,
}


def run_selftest(name: str) -> int:
    results = SELFTESTS[name]()
    for label, ok in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {label}")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_VIOLATION


# -- commands ---------------------------------------------------------------------

def _batch_chunk(task):
    n, seed, degree, M, radii, start, tol = task
    return [(inst, rep) for inst, rep in run_batch(n, seed, degree, M, radii, start, **tol)]


def cmd_verify_lemma(args) -> int:
    radii = tuple(args.radii) if args.radii else None
    if radii is not None and not 0.0 <= radii[0] <= radii[1] < 1.0:
        raise UsageError(f"--radii needs 0 <= r <= rho < 1, got {radii[0]} {radii[1]}")
    tol = tolerances(args)
    if args.workers > 1:
        step = math.ceil(args.n / args.workers)
        tasks = [(min(step, args.n - s), args.seed, args.degree, args.quad_points, radii, s, tol)
                 for s in range(0, args.n, step)]
        with ProcessPoolExecutor(args.workers) as pool:
            pairs = [p for chunk in pool.map(_batch_chunk, tasks) for p in chunk]
    else:
        pairs = run_batch(args.n, args.seed, args.degree, args.quad_points, radii, **tol)

    bad = [(inst, rep) for inst, rep in pairs if not rep.ok]
    with artifact(args) as fh:
        if fh is not None:
            write_batch_csv((batch_row(i, r) for i, r in pairs), fh, header_lines(args))
    ratios = [r.ratio for _, r in pairs if not r.degenerate]
    degenerate = len(pairs) - len(ratios)
    print(f"instances = {len(pairs)}")
    print(f"degenerate = {degenerate}")
    print(f"violations = {len(bad)}")
    if ratios:
        print(f"max_ratio = {max(ratios)!r}")
    for inst, rep in bad[:5]:
        print(f"violation seed={inst.seed} r={inst.r!r} rho={inst.rho!r} lhs={rep.lhs!r} "
              f"rhs_main={rep.rhs_main!r}", file=sys.stderr)
        print(format_coefficients(inst.f), file=sys.stderr, end="")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_search_constant(args) -> int:
    config = SearchConfig(degree=args.degree, restarts=args.restarts, iterations=args.iterations,
                          seed=args.seed, mode=args.mode, p=args.p, M=args.search_points,
                          certify_M=args.quad_points)
    result = maximize(config, workers=args.workers)
    print(result.report(), end="")
    with artifact(args) as fh:
        if fh is not None:
            for line in header_lines(args):
                fh.write(f"# {line}\n")
            fh.write(result.history_csv())
    if result.ceiling_breached:
        print(f"ALARM: certified ratio {result.certified_ratio!r} exceeds 2", file=sys.stderr)
        return EXIT_ALARM
    return EXIT_OK


def cmd_trace(args) -> int:
    if not 0.0 <= args.r <= args.rho < 1.0:
        raise UsageError(f"need 0 <= r <= rho < 1, got r={args.r}, rho={args.rho}")
    if args.coefficients is None:
        raise UsageError("trace needs a coefficient file")
    f = read_coefficients(args.coefficients)
    try:
        trace = trace_inequality_chain(f, args.r, args.rho, args.quad_points, strict=False, **tolerances(args))
    except (NotFactorizableError, ZeroOnCircleError) as exc:
        print(f"factorization failed: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    text = trace.to_text()
    print(text, end="")
    with artifact(args) as fh:
        if fh is not None:
            for line in header_lines(args):
                fh.write(f"# {line}\n")
            fh.write(text)
    for name in trace.violations:
        print(f"violated step: {name}", file=sys.stderr)
    return EXIT_OK if trace.ok else EXIT_VIOLATION


def _torus_records(args):
    rng = np.random.default_rng(args.seed)
    mc = args.mc_samples
    for check in args.checks:
        if check == "monotone":
            for i in range(args.n):
                T = random_trig_poly(rng, 3, args.max_degree)
                for p in (1.0, 2.0):
                    norms = check_abschnitt_monotone(T, p, TorusSampler.auto(3, p, T.max_abs_degree(), N=mc))
                    ok = is_nondecreasing(norms, 1e-8)
                    yield ok, {"check": check, "instance": i, "p": p, "norms": [float(x) for x in norms], "ok": ok}
        elif check == "substitution":
            for i in range(args.n):
                P = random_trig_poly(rng, 4, args.max_degree, analytic=True)
                ok = all(abschnitt(P, d) == abschnitt_substitution(P, d) for d in range(1, 5))
                yield ok, {"check": check, "instance": i, "ok": ok}
        elif check == "h1":
            for i in range(args.n):
                P = random_trig_poly(rng, 3, args.max_degree, analytic=True)
                rep = check_h1_abschnitt_lemma(P, 1, 3, seed=args.seed + i)
                ok = rep.holds and rep.routes_agree
                yield ok, {"check": check, "instance": i, "lhs": float(rep.lhs), "rhs": rep.rhs,
                           "tolerance": rep.tolerance, "slice_lhs": float(rep.slice_lhs),
                           "slice_rhs": rep.slice_rhs, "routes_agree": rep.routes_agree, "ok": ok}
        elif check == "chain":
            P = TrigPoly({(): 1}) * (1 + 0.5 * variable(1)) * (1 + 0.5 * variable(2)) * (1 + 0.5 * variable(3))
            rec = chain_reconstruct([abschnitt(P, d) for d in (1, 2, 3)])
            ok = rec.ok and rec.f == P and rec.increments_within_bound
            yield ok, {"check": check, "recovered": rec.ok and rec.f == P,
                       "increments": [[d, float(a), b] for d, a, b, _ in rec.increments], "ok": ok}
        elif check == "density":
            for i in range(args.n):
                T = random_trig_poly(rng, 3, args.max_degree)
                dist = check_lp_density_convergence(T, 2.0, TorusSampler.auto(3, 2.0, T.max_abs_degree()))
                ok = dist[-1] <= 1e-12
                yield ok, {"check": check, "instance": i, "distances": [float(x) for x in dist], "ok": ok}


def cmd_torus(args) -> int:
    args.checks = list(args.checks) or list(TORUS_CHECKS)
    unknown = sorted(set(args.checks) - set(TORUS_CHECKS))
    if unknown:
        raise UsageError(f"unknown torus checks {unknown}; choose from {', '.join(TORUS_CHECKS)}")
    records, failed = [], 0
    for ok, rec in _torus_records(args):
        records.append(rec)
        failed += not ok
    with artifact(args, sys.stdout if args.jsonl else None) as fh:
        write_jsonl(fh, args, records)
    counts = {c: sum(1 for r in records if r["check"] == c) for c in args.checks}
    for c in args.checks:
        bad = sum(1 for r in records if r["check"] == c and not r["ok"])
        print(f"{c}: {counts[c]} records, {bad} failures", file=sys.stderr if args.jsonl else sys.stdout)
    return EXIT_VIOLATION if failed else EXIT_OK


def parse_point(spec: str) -> PolydiscPoint:
    """``finite:z1,z2,...``, ``geometric:c,q`` or ``power:c,a,shift``."""
    rule, _, rest = spec.partition(":")
    vals = [complex(v) for v in rest.split(",") if v.strip()] if rest else []
    try:
        if rule == "finite":
            return PolydiscPoint.finite(vals)
        if rule == "geometric":
            return PolydiscPoint.geometric(*[v.real for v in vals])
        if rule == "power":
            return PolydiscPoint.power(*[v.real for v in vals])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad --point {spec!r}: {exc}") from None
    raise UsageError(f"unknown point rule {rule!r}")


def cmd_measures(args) -> int:
    mu = CircleMeasure.read(args.measure) if args.measure else CircleMeasure.from_density({0: 1, 1: 0.5})
    radii = np.asarray(args.radii, float) if args.radii else None
    if radii is not None and (np.any(np.diff(radii) <= 0) or radii[0] < 0 or radii[-1] >= 1):
        raise UsageError("--radii must be strictly increasing in [0, 1)")
    point = parse_point(args.point)
    demo = fm_riesz_demo(mu, radii, args.quad_points, contrast=args.contrast or None)
    failures = []
    if demo.analytic:
        if not demo.bounds_hold.all():
            failures.append("increment bound")
        if demo.recovered_error > 1e-6:
            failures.append("coefficient recovery")
    if not demo.fubini_ok:
        failures.append("norms exceed total variation")

    chain = poisson_chain(point, args.depth)
    residuals = [chain.chain_residual(d, 100, args.quad_points, args.seed) for d in range(1, args.depth)]
    if max(residuals, default=0.0) > 1e-10:
        failures.append("chain residual")
    incs = []
    for d in range(1, args.depth):
        q = chain_increment_l1(point, d, args.quad_points)
        est = chain_increment_mc(point, d, args.mc_samples, args.seed + d)
        agree = abs(q - est) <= 3 * est.stderr + 1e-12
        failures += [] if agree else [f"increment cross-check d={d}"]
        incs.append({"d": d, "quadrature": q, "mc": float(est), "stderr": est.stderr, "agree": agree})
    diag = polydisc_diagnostics(point, args.depth, args.quad_points)

    records = [
        {"report": "fm_riesz", "analytic": demo.analytic, "radii": demo.radii, "norms": demo.norms,
         "total_variation": demo.total_variation, "increments": demo.increments, "bounds": demo.bounds,
         "recovered_error": demo.recovered_error, "min_increment": demo.min_increment},
        {"report": "poisson_chain", "point": args.point, "depth": args.depth, "residuals": residuals,
         "increments": incs},
        {"report": "polydisc", "classification": diag.classification, "l1_partial": diag.l1_partial,
         "l2_partial": diag.l2_partial, "increments": diag.increments,
         "log_sup_products": diag.log_sup_products},
    ]
    with artifact(args, sys.stdout if args.jsonl else None) as fh:
        write_jsonl(fh, args, records)
    out = sys.stderr if args.jsonl else sys.stdout
    print(f"measure analytic = {demo.analytic}", file=out)
    print(f"norms = {' '.join(f'{x:.10g}' for x in demo.norms)}", file=out)
    print(f"increments = {' '.join(f'{x:.10g}' for x in demo.increments)}", file=out)
    if demo.analytic:
        print(f"recovered_error = {demo.recovered_error:.3e}", file=out)
    print(f"point {args.point}: {diag.classification}, max chain residual {max(residuals, default=0.0):.3e}",
          file=out)
    for name in failures:
        print(f"failed: {name}", file=sys.stderr)
    return EXIT_VIOLATION if failures else EXIT_OK


# -- parser -------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=42, help="base seed (default 42)")
    p.add_argument("--quad-points", type=int, default=DEFAULT_POINTS, help="circle quadrature nodes M")
    p.add_argument("--mc-samples", type=int, default=2 ** 20, help="Monte Carlo budget N")
    p.add_argument("--out", type=Path, default=None, help="artifact path (CSV or JSON lines)")
    p.add_argument("--tol-abs", type=float, default=TOL_ABS)
    p.add_argument("--tol-rel", type=float, default=TOL_REL)
    p.add_argument("--workers", type=int, default=1, help="process pool size")
    p.add_argument("--selftest", action="store_true", help="replay the built-in examples and exit")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="rieszkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rieszkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-lemma", parents=[common], help="random-instance suite for the dilation bound")
    p.add_argument("--n", type=int, default=10_000, help="number of instances")
    p.add_argument("--degree", type=int, default=16, help="maximum degree (0 gives constants)")
    p.add_argument("--radii", type=float, nargs=2, metavar=("R", "RHO"), help="fix r and rho")
    p.set_defaults(func=cmd_verify_lemma)

    p = sub.add_parser("search-constant", parents=[common], help="maximize the inequality ratio")
    p.add_argument("--mode", choices=MODES, default="r-free")
    p.add_argument("--degree", type=int, default=8)
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--iterations", type=int, default=2000, help="objective evaluations per restart")
    p.add_argument("--p", type=float, default=1.0, help="exponent in p-variant mode")
    p.add_argument("--search-points", type=int, default=1024, help="quadrature nodes during the search")
    p.set_defaults(func=cmd_search_constant)

    p = sub.add_parser("trace", parents=[common], help="print the factorization chain for one polynomial")
    p.add_argument("coefficients", type=Path, nargs="?", help="file with one 're im' coefficient per line")
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--rho", type=float, default=0.9)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("torus", parents=[common], help="checks on trigonometric polynomials of the torus")
    p.add_argument("checks", nargs="*", metavar="CHECK",
                   help=f"subset of {', '.join(TORUS_CHECKS)} (default: all)")
    p.add_argument("--n", type=int, default=50, help="random instances per check")
    p.add_argument("--max-degree", type=int, default=3)
    p.add_argument("--jsonl", action="store_true", help="write JSON lines to stdout when --out is absent")
    p.set_defaults(func=cmd_torus)

    p = sub.add_parser("measures", parents=[common], help="Poisson extensions and Poisson-product chains")
    p.add_argument("measure", nargs="?", type=Path, help="measure file (default: density 1 + x/2)")
    p.add_argument("--radii", type=float, nargs="+", help="increasing radii in [0, 1)")
    p.add_argument("--contrast", action="store_true", help="skip limit recovery (non-analytic measure)")
    p.add_argument("--point", default="power:1,1,1", help="polydisc point: finite:..., geometric:c,q, power:c,a,shift")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--jsonl", action="store_true", help="write JSON lines to stdout when --out is absent")
    p.set_defaults(func=cmd_measures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.selftest:
        return run_selftest(args.command)
    if args.quad_points < 2 or args.quad_points % 2:
        parser.error("--quad-points must be an even integer >= 2")
    if args.mc_samples < 2:
        parser.error("--mc-samples must be at least 2")
    if args.workers < 1:
        parser.error("--workers must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ValueError, OSError) as exc:
        print(f"rieszkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
