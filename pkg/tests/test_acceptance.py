"""Acceptance criteria, one test and one PASS/FAIL line each.

Tolerances are pinned constants below; a failing criterion is reported as
such and never loosened.
"""
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rieszkit import cli
from rieszkit.blaschke import trace_inequality_chain
from rieszkit.circle import random_poly
from rieszkit.extremal import SearchConfig, epsilon_sweep, maximize
from rieszkit.lemma import negative_control_poisson, radial_mean_profile, random_instance, run_batch
from rieszkit.measures import (CircleMeasure, PolydiscPoint, chain_increment_l1, chain_increment_mc,
                               fm_riesz_demo, poisson_chain)
from rieszkit.torus import (TorusSampler, TrigPoly, abschnitt, abschnitt_substitution, chain_reconstruct,
                            check_abschnitt_monotone, check_h1_abschnitt_lemma, is_nondecreasing,
                            random_trig_poly, variable)

SQRT2 = math.sqrt(2)

LEMMA_INSTANCES = 10_000
LEMMA_TOL = 1e-8
LEMMA_SECONDS = 60.0
SQRT2_SWEEP_TOL = 1e-2
R_ZERO_CEILING = SQRT2 + 1e-3
CEILING = 2 + 1e-6
FACTOR_INSTANCES = 500
BOUNDARY_DEFECT = 1e-12
FACTOR_RESIDUAL = 1e-9
STEP_SLACK = -1e-8
RADIAL_POLYS = 1000
RADIAL_POINTS = 32
MONOTONE_TOL = 1e-10
LOG_CONVEX_TOL = -1e-8
NEG_RHS = 1e-9
NEG_LHS = 0.1
TORUS_INSTANCES = 200
GRID_TOL = 1e-8
CHAIN_RESIDUAL = 1e-10
CHAIN_MC_INSTANCES = 20
FM_COEFF_TOL = 1e-6
FM_K = 64
DELTA_MIN_INCREMENT = 0.05


def report(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_lemma_suite():
    t0 = time.perf_counter()
    pairs = run_batch(LEMMA_INSTANCES, seed=42, max_degree=16, M=4096, tol_abs=LEMMA_TOL, tol_rel=LEMMA_TOL)
    elapsed = time.perf_counter() - t0
    bad = sum(not rep.holds_main for _, rep in pairs)
    ok = len(pairs) == LEMMA_INSTANCES and bad == 0 and elapsed <= LEMMA_SECONDS
    report(1, ok, f"{len(pairs)} instances, {bad} violations, {elapsed:.1f} s")
    assert ok


def test_criterion_02_constant_anchors():
    sweep = epsilon_sweep([1e-1, 1e-2, 1e-3, 1e-4])
    ratios = [r for _, r in sweep]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    near = abs(ratios[-1] - SQRT2) <= SQRT2_SWEEP_TOL

    r_zero = maximize(SearchConfig(degree=8, restarts=32, iterations=2000, seed=1, mode="r-zero"))
    r_free = maximize(SearchConfig(degree=8, restarts=8, iterations=2000, seed=1, mode="r-free"))
    p_two = maximize(SearchConfig(degree=8, restarts=4, iterations=1000, seed=1, mode="p-variant", p=2.0))
    batch_max = max(rep.ratio for _, rep in run_batch(2000, seed=7) if not rep.degenerate)
    top = max(r_zero.max_evaluated, r_free.max_evaluated, p_two.max_evaluated, batch_max)
    ok = (increasing and near and r_zero.max_evaluated <= R_ZERO_CEILING
          and r_zero.certified_ratio <= R_ZERO_CEILING and top <= CEILING)
    report(2, ok, f"sweep {ratios[-1]:.8f} (increasing={increasing}); r-zero max {r_zero.max_evaluated:.7f}; "
                  f"r-free max {r_free.max_evaluated:.7f}; L2 max {p_two.max_evaluated:.10f}; overall {top:.7f}")
    assert ok


def test_criterion_03_factorization():
    worst_defect = worst_residual = 0.0
    worst_slack = math.inf
    winding = 0
    for i in range(FACTOR_INSTANCES):
        inst = random_instance(10_000 + i)
        trace = trace_inequality_chain(inst.f, inst.r, inst.rho, strict=False)
        worst_defect = max(worst_defect, trace.boundary_defect)
        worst_residual = max(worst_residual, trace.residual)
        worst_slack = min(worst_slack, min(s.slack for s in trace.steps))
        winding = max(winding, trace.winding_check)
    ok = (worst_defect <= BOUNDARY_DEFECT and worst_residual <= FACTOR_RESIDUAL
          and worst_slack >= STEP_SLACK and winding == 0)
    report(3, ok, f"max |B|-1 {worst_defect:.2e}, max residual {worst_residual:.2e}, "
                  f"min step slack {worst_slack:.2e}")
    assert ok


def test_criterion_04_radial_means():
    rng = np.random.default_rng(4)
    radii = np.linspace(0.03, 0.97, RADIAL_POINTS)
    worst_mono, worst_convex = -math.inf, math.inf
    violations = 0
    for _ in range(RADIAL_POLYS):
        prof = radial_mean_profile(random_poly(rng, int(rng.integers(1, 17))), radii)
        worst_mono = max(worst_mono, prof.monotone_defect)
        worst_convex = min(worst_convex, prof.min_log_convexity)
        violations += prof.monotone_defect > MONOTONE_TOL
    ok = violations == 0 and worst_convex >= LOG_CONVEX_TOL
    report(4, ok, f"{violations} monotonicity violations, largest decrease {worst_mono:.2e}, "
                  f"min log-convexity difference {worst_convex:.2e}")
    assert ok


def test_criterion_05_negative_control():
    rep = negative_control_poisson(0.5, 0.3, 0.9)
    ok = rep.rhs_main <= NEG_RHS and rep.lhs >= NEG_LHS
    report(5, ok, f"lhs {rep.lhs:.6f}, rhs_main {rep.rhs_main:.2e}")
    assert ok


def test_criterion_06_abschnitte():
    rng = np.random.default_rng(6)
    mono_bad = 0
    for _ in range(TORUS_INSTANCES):
        T = random_trig_poly(rng, 3)
        for p in (1.0, 2.0):
            sampler = TorusSampler.auto(3, p, T.max_abs_degree())
            mono_bad += not is_nondecreasing(check_abschnitt_monotone(T, p, sampler), GRID_TOL)
    subst_bad = 0
    for _ in range(TORUS_INSTANCES):
        P = random_trig_poly(rng, 4, analytic=True)
        subst_bad += any(abschnitt(P, d) != abschnitt_substitution(P, d) for d in range(1, 5))
    ok = mono_bad == 0 and subst_bad == 0
    report(6, ok, f"{mono_bad} monotonicity failures over {2 * TORUS_INSTANCES} runs, "
                  f"{subst_bad} substitution mismatches")
    assert ok


def test_criterion_07_h1_abschnitt():
    rng = np.random.default_rng(7)
    violations = disagreements = 0
    for i in range(TORUS_INSTANCES):
        P = random_trig_poly(rng, 3, analytic=True)
        rep = check_h1_abschnitt_lemma(P, 1, 3, seed=i)
        violations += not rep.holds
        disagreements += not rep.routes_agree
    ok = violations == 0 and disagreements == 0
    report(7, ok, f"{violations} violations, {disagreements} route disagreements")
    assert ok


def test_criterion_08_chain_machinery():
    chain = poisson_chain(PolydiscPoint.power(1, 1, 1), 6)
    residual = max(chain.chain_residual(d, 100, seed=d) for d in range(1, 6))
    rng = np.random.default_rng(8)
    mismatches, worst = 0, 0.0
    for i in range(CHAIN_MC_INSTANCES):
        d = int(rng.integers(1, 4))
        z = PolydiscPoint.finite(rng.uniform(-0.9, 0.9, d + 1) * np.exp(2j * np.pi * rng.random(d + 1)))
        q = chain_increment_l1(z, d)
        est = chain_increment_mc(z, d, 2 ** 18, seed=i)
        worst = max(worst, abs(q - est) / est.stderr)
        mismatches += abs(q - est) > 3 * est.stderr
    one = TrigPoly({(): 1})
    P = (one + 0.5 * variable(1)) * (one - 0.25j * variable(2)) * (one + variable(1) * variable(3))
    rec = chain_reconstruct([abschnitt(P, d) for d in (1, 2, 3)])
    ok = residual <= CHAIN_RESIDUAL and mismatches == 0 and rec.ok and rec.f == P
    report(8, ok, f"chain residual {residual:.2e}, {mismatches} MC mismatches "
                  f"(max {worst:.2f} standard errors), planted P recovered={rec.ok and rec.f == P}")
    assert ok


def test_criterion_09_fm_riesz_demo():
    mu = CircleMeasure.from_density({0: 1, 1: 0.5})
    analytic = fm_riesz_demo(mu, K=FM_K)
    delta = fm_riesz_demo(CircleMeasure.point_mass(0.0))
    ok = (analytic.recovered_error <= FM_COEFF_TOL and not delta.analytic
          and delta.min_increment >= DELTA_MIN_INCREMENT)
    report(9, ok, f"coefficient error {analytic.recovered_error:.2e} for |k| <= {FM_K}, "
                  f"point-mass min increment {delta.min_increment:.4f}")
    assert ok


def test_criterion_10_reproducibility(tmp_path, capsys):
    coeff = tmp_path / "f.txt"
    coeff.write_text("1 0\n0.4 0.3\n-0.2 0\n")
    commands = {
        "verify-lemma": ["verify-lemma", "--n", "300"],
        "search-constant": ["search-constant", "--degree", "3", "--restarts", "3", "--iterations", "300"],
        "trace": ["trace", str(coeff), "--r", "0.3", "--rho", "0.85"],
        "torus": ["torus", "--n", "5"],
        "measures": ["measures", "--depth", "4", "--mc-samples", "65536"],
    }
    differing = []
    for name, argv in commands.items():
        outs = []
        for k in range(2):
            path = tmp_path / f"{name}-{k}.out"
            assert cli.main(argv + ["--seed", "5", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1] or not outs[0]:
            differing.append(name)
    capsys.readouterr()
    ok = not differing
    report(10, ok, f"{len(commands)} commands run twice, byte-identical artifacts"
                   + (f"; differing: {differing}" if differing else ""))
    assert ok
