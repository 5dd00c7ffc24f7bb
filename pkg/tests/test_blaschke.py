import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from rieszkit.blaschke import (STEP_GROUPS, BlaschkeProduct, ChainViolation, FactorizationTrace,
                               NotFactorizableError, Step, ZeroOnCircleError, blaschke_eval, factorize,
                               find_zeros, orthogonality_coefficient_check, polynomial_roots, sqrt_branch,
                               trace_inequality_chain, winding_number)
from rieszkit.circle import AnalyticPoly, CircleGrid, evaluate, random_poly

# ||1 + 0.09 e^{it}||_1 by mpmath quadrature at 30 digits
NORM_ONE_PLUS_009 = 1.002026027238786


def _sorted(z):
    return sorted(np.round(np.asarray(z), 12), key=lambda x: (x.real, x.imag))


class TestZeros:
    def test_two_real_zeros(self):
        z = find_zeros(AnalyticPoly([-1 / 16, 0, 1]), 0.5)
        assert np.allclose(_sorted(z), [-0.25, 0.25], atol=1e-14)

    def test_zero_outside(self):
        assert find_zeros(AnalyticPoly([1, 1]), 0.5).size == 0

    def test_double_zero_at_origin(self):
        z = find_zeros(AnalyticPoly([0, 0, 1]), 0.5)
        assert z.size == 2 and np.all(z == 0)

    def test_zero_on_circle_asks_for_nudge(self):
        with pytest.raises(ZeroOnCircleError) as exc:
            find_zeros(AnalyticPoly([-0.5, 1]), 0.5)
        assert exc.value.suggested_rho == pytest.approx(0.5001)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 24))
    def test_roots_reproduce_polynomial(self, seed, degree):
        f = random_poly(np.random.default_rng(seed), degree)
        roots = polynomial_roots(f)
        assert roots.size == degree
        rebuilt = f.coeffs[-1] * np.poly(roots)[::-1]
        assert np.allclose(rebuilt, f.coeffs, atol=1e-8 * np.abs(f.coeffs).max())


class TestBlaschke:
    def test_single_zero_at_origin(self):
        assert blaschke_eval(BlaschkeProduct([0], 0.5), 0.5) == pytest.approx(-1, abs=1e-15)

    def test_boundary_modulus(self):
        assert blaschke_eval(BlaschkeProduct([0.25], 0.5), 0.5) == pytest.approx(-1, abs=1e-15)

    def test_empty_product(self):
        assert blaschke_eval(BlaschkeProduct([], 0.7), 0.3 + 0.1j) == 1

    def test_rejects_zero_outside(self):
        with pytest.raises(ValueError):
            BlaschkeProduct([0.6], 0.5)

    @given(st.lists(st.complex_numbers(max_magnitude=0.89, allow_nan=False), min_size=1, max_size=10),
           st.floats(0.0, 2 * math.pi))
    def test_unimodular_on_circle_and_contracting_inside(self, zeros, theta):
        B = BlaschkeProduct(zeros, 0.9)
        assert abs(abs(B(0.9 * cmath.exp(1j * theta))) - 1) <= 1e-12
        assert abs(B(0.5 * cmath.exp(1j * theta))) < 1 + 1e-15
        for a in zeros:
            assert abs(B(a)) <= 1e-12


class TestSqrtBranch:
    def test_constant(self):
        assert np.allclose(sqrt_branch(np.full(16, 4.0 + 0j)), 2)

    def test_product_of_conjugate_phases(self):
        t = CircleGrid(1.0, 32).angles
        assert np.allclose(sqrt_branch(np.exp(1j * t) * np.exp(-1j * t)), 1)

    def test_squares_reproduce_input(self):
        v = 2 + CircleGrid(1.0, 4096).unit_points
        w = sqrt_branch(v)
        assert np.max(np.abs(w ** 2 - v)) <= 1e-12
        assert np.max(np.abs(np.diff(w))) < 0.01

    def test_winding_is_refused(self):
        z = CircleGrid(1.0, 64).unit_points
        assert winding_number(z) == 1
        with pytest.raises(NotFactorizableError):
            sqrt_branch(z)

    def test_anchor_selects_sign(self):
        w = sqrt_branch(np.full(8, 4.0 + 0j), anchor=-2)
        assert np.allclose(w, -2)


class TestFactorize:
    def test_constant(self):
        fz = factorize(AnalyticPoly([1]), 0.6, 0.2, 64)
        for s in (fz.g_r, fz.g_rho, fz.h_r, fz.h_rho):
            assert np.allclose(s.values, 1)

    def test_random_degree_eight(self):
        f = random_poly(np.random.default_rng(8), 8)
        fz = factorize(f, 0.9, 0.4)
        assert fz.residual <= 1e-9
        assert fz.boundary_defect <= 1e-12
        assert fz.winding == (0, 0)

    def test_h_is_analytic_continuation_between_circles(self):
        # the Fourier coefficients of h on the two circles differ by (r/rho)^k
        f = AnalyticPoly([0.1, -0.3, 1, 0.5j])
        fz = factorize(f, 0.8, 0.5, 256)
        c_rho = np.fft.fft(fz.h_rho.values) / 256
        c_r = np.fft.fft(fz.h_r.values) / 256
        k = np.arange(40)
        assert np.allclose(c_r[k], c_rho[k] * (0.5 / 0.8) ** k, atol=1e-12)
        assert np.max(np.abs(c_rho[-40:])) <= 1e-12

    def test_zero_on_circle_is_nudged(self):
        f = AnalyticPoly([-0.5, 1])
        with pytest.raises(ZeroOnCircleError):
            trace_inequality_chain(f, 0.1, 0.5, 256, nudge=False)
        trace = trace_inequality_chain(f, 0.1, 0.5, 256)
        assert trace.rho == pytest.approx(0.5001) and trace.rho_requested == 0.5
        assert trace.ok


class TestTrace:
    def test_constant_steps_are_equalities(self):
        trace = trace_inequality_chain(AnalyticPoly([3.0]), 0.2, 0.7, 256)
        for s in trace.steps:
            assert s.lhs == pytest.approx(s.rhs, abs=1e-12)
        assert trace.step("e_conclusion").lhs == 0

    def test_endpoint_identity(self):
        trace = trace_inequality_chain(AnalyticPoly([1, 0.1]), 0.0, 0.9)
        e = trace.step("e_endpoint_g")
        assert e.lhs == pytest.approx(e.rhs, abs=1e-9)
        assert e.rhs == pytest.approx(NORM_ONE_PLUS_009, abs=1e-9)

    def test_every_group_is_traced(self):
        trace = trace_inequality_chain(AnalyticPoly([1, 2, -1j]), 0.3, 0.8, 256)
        names = {s.name for s in trace.steps}
        for group in STEP_GROUPS.values():
            assert set(group) <= names

    def test_text_roundtrip(self):
        trace = trace_inequality_chain(random_poly(np.random.default_rng(1), 5), 0.3, 0.85, 512)
        back = FactorizationTrace.from_text(trace.to_text())
        assert back.steps == trace.steps and back.norms == trace.norms
        assert back.rho == trace.rho and back.winding_check == 0

    def test_violation_names_the_step(self):
        trace = trace_inequality_chain(AnalyticPoly([1, 1]), 0.2, 0.6, 256)
        trace.steps[0] = Step("a_triangle", 2.0, 1.0)
        assert [s.name for s in trace.violations] == ["a_triangle"]
        err = ChainViolation(trace.steps[0])
        assert "a_triangle" in str(err)

    def test_invalid_radii(self):
        with pytest.raises(ValueError):
            trace_inequality_chain(AnalyticPoly([1, 1]), 0.6, 0.5)

    def test_batch_has_no_chain_violations(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            f = random_poly(rng, int(rng.integers(1, 17)))
            rho = float(rng.uniform(0.05, 0.95))
            r = rho * float(rng.uniform())
            trace = trace_inequality_chain(f, r, rho, strict=False)
            assert trace.ok, trace.violations
            assert trace.norms["norm_g_r"] ** 2 * trace.norms["norm_h_r"] ** 2 >= trace.norms["norm_f_r"] ** 2 - 1e-8

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(1, 12), st.floats(0.1, 0.95), st.floats(0, 1))
    def test_coefficient_orthogonality(self, seed, degree, rho, u):
        f = random_poly(np.random.default_rng(seed), degree)
        try:
            fz = factorize(f, rho, rho * u, 512)
        except ZeroOnCircleError:
            assume(False)
        assert orthogonality_coefficient_check(fz) <= 1e-15
