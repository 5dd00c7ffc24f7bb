import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rieszkit.circle import (AnalyticPoly, CircleGrid, DilatedSamples, GridMismatchError, dilate, evaluate,
                             format_coefficients, norm_l1, norm_l1_diff, norm_l2, norm_l2_parseval, norm_lp,
                             parse_coefficients, random_poly, read_coefficients, write_coefficients)
from rieszkit.blaschke import polynomial_roots

# int_0^{2pi} |1 + e^{it}| dt / 2pi = (1/pi) int_0^pi 2 cos(t/2) dt = 4/pi
FOUR_OVER_PI = 1.2732395447351628

# tiny magnitudes would only probe subnormal underflow in |x|^p
complex_coeff = st.one_of(st.just(0j), st.complex_numbers(min_magnitude=1e-6, max_magnitude=10,
                                                           allow_nan=False, allow_infinity=False))
polys = st.lists(complex_coeff, min_size=1, max_size=12).map(AnalyticPoly)
radii = st.floats(0.0, 1.0)


class TestEvaluate:
    def test_constant_term_at_origin(self):
        assert evaluate(AnalyticPoly([1, 1]), 0) == 1

    def test_monomial(self):
        assert evaluate(AnalyticPoly([0, 0, 1]), 0.5) == 0.25

    def test_direct_expansion(self):
        assert evaluate(AnalyticPoly([1, 2, 3]), 1j) == -2 + 2j

    @given(polys, st.complex_numbers(max_magnitude=1, allow_nan=False))
    def test_matches_power_sum(self, f, z):
        direct = sum(a * z ** k for k, a in enumerate(f.coeffs))
        assert abs(evaluate(f, z) - direct) <= 1e-12 * (1 + np.abs(f.coeffs).sum())

    @given(polys, st.integers(0, 5), st.complex_numbers(max_magnitude=1, allow_nan=False))
    def test_trailing_zeros_do_not_change_values(self, f, pad, z):
        padded = AnalyticPoly(list(f.coeffs) + [0] * pad)
        assert evaluate(padded, z) == evaluate(f, z)
        assert padded == f


class TestGrid:
    def test_points_are_scaled_roots_of_unity(self):
        g = CircleGrid(0.5, 8)
        assert np.allclose(g.points ** 8, 0.5 ** 8, atol=1e-15)
        assert g.weight == 1 / 8

    @pytest.mark.parametrize("r,M", [(-0.1, 8), (1.1, 8), (0.5, 7), (0.5, 0)])
    def test_rejects_bad_grids(self, r, M):
        with pytest.raises(ValueError):
            CircleGrid(r, M)


class TestDilate:
    def test_monomial_modulus(self):
        s = dilate(AnalyticPoly([0, 1]), 0.5, 8)
        assert np.allclose(np.abs(s.values), 0.5, atol=1e-15)

    def test_constant(self):
        s = dilate(AnalyticPoly([1]), 0.37, 4)
        assert np.all(s.values == 1)

    def test_boundary_samples(self):
        s = dilate(AnalyticPoly([1, 1]), 1.0, 4096)
        assert np.allclose(s.values, 1 + np.exp(1j * s.grid.angles), atol=1e-15)

    def test_refuses_aliasing_grids(self):
        with pytest.raises(ValueError):
            dilate(AnalyticPoly(np.ones(10)), 0.5, 16)

    def test_values_match_evaluation_bitwise(self):
        f = random_poly(np.random.default_rng(3), 9)
        s = dilate(f, 0.8, 64)
        assert np.array_equal(s.values, evaluate(f, s.grid.points))


class TestNorms:
    def test_l1_constant(self):
        assert norm_l1(dilate(AnalyticPoly([1]), 0.3, 16)) == 1.0

    @pytest.mark.parametrize("r", [0.0, 0.2, 0.9, 1.0])
    def test_l1_monomial(self, r):
        assert norm_l1(dilate(AnalyticPoly([0, 1]), r, 16)) == pytest.approx(r, abs=1e-15)

    def test_l1_one_plus_z(self):
        assert norm_l1(dilate(AnalyticPoly([1, 1]), 1.0, 4096)) == pytest.approx(FOUR_OVER_PI, abs=1e-6)

    def test_l1_one_plus_z_trapezoid_error(self):
        # the kink at theta = pi gives error (2/M) cot(pi/2M) - 4/pi ~ pi/(3 M^2)
        for M in (64, 256, 1024):
            got = norm_l1(dilate(AnalyticPoly([1, 1]), 1.0, M))
            assert got == pytest.approx(2 / M / math.tan(math.pi / (2 * M)), rel=1e-13)

    def test_l2_examples(self):
        assert norm_l2_parseval(AnalyticPoly([3]), 0.7) == 3.0
        assert norm_l2_parseval(AnalyticPoly([0, 1]), 0.5) == 0.5
        assert norm_l2_parseval(AnalyticPoly([1, 1]), 1.0) == pytest.approx(math.sqrt(2), abs=1e-15)
        assert norm_l2(dilate(AnalyticPoly([1, 1]), 1.0, 8)) == pytest.approx(math.sqrt(2), abs=1e-15)

    def test_diff_examples(self):
        f = AnalyticPoly([0, 1])
        s = dilate(f, 0.2, 16)
        assert norm_l1_diff(s, s) == 0
        assert norm_l1_diff(s, dilate(f, 0.5, 16)) == pytest.approx(0.3, abs=1e-15)
        g = AnalyticPoly([1, 1])
        assert norm_l1_diff(dilate(g, 0, 16), dilate(g, 0.9, 16)) == pytest.approx(0.9, abs=1e-15)

    def test_diff_refuses_mismatched_grids(self):
        f = AnalyticPoly([1, 1])
        with pytest.raises(GridMismatchError):
            norm_l1_diff(dilate(f, 0.2, 16), dilate(f, 0.2, 32))

    @given(polys, radii, st.integers(0, 3))
    def test_quadrature_exact_for_l2(self, f, r, extra):
        M = 2 * (f.trim().degree + 1) + 2 * extra
        exact = norm_l2_parseval(f, r)
        assert norm_l2(dilate(f, r, M)) == pytest.approx(exact, rel=1e-12, abs=1e-300)

    @given(polys, radii, radii)
    def test_l2_means_increase(self, f, a, b):
        r, rho = min(a, b), max(a, b)
        assert norm_l2_parseval(f, r) <= norm_l2_parseval(f, rho) * (1 + 1e-15)

    @given(polys, radii, st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False))
    def test_homogeneity(self, f, r, c):
        s, cs = dilate(f, r, 32), dilate(AnalyticPoly(c * f.coeffs), r, 32)
        for p in (1.0, 2.0, 3.0):
            assert norm_lp(cs, p) == pytest.approx(abs(c) * norm_lp(s, p), rel=1e-12, abs=1e-300)


def test_l1_refinement_for_zero_free_circles():
    """Doubling M moves ||f_r||_1 by < 1e-8 relative once zeros keep 1e-3 away from the circle."""
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 50:
        f = random_poly(rng, 16)
        r = float(rng.uniform(0.1, 0.95))
        if np.min(np.abs(np.abs(polynomial_roots(f)) - r)) < 1e-3:
            continue
        a, b = norm_l1(dilate(f, r, 4096)), norm_l1(dilate(f, r, 8192))
        assert abs(a - b) <= 1e-8 * b
        checked += 1


def test_coefficient_file_roundtrip(tmp_path):
    f = AnalyticPoly([1.5, 0.25 - 2j, 0, 1e-17j])
    path = tmp_path / "f.txt"
    write_coefficients(f, path)
    assert np.array_equal(read_coefficients(path).coeffs, f.coeffs)
    assert parse_coefficients("# comment\n1 0\n\n2\n") == AnalyticPoly([1, 2])
    assert format_coefficients(AnalyticPoly([1j])) == "0.0 1.0\n"


@pytest.mark.parametrize("text", ["", "1 2 3\n", "abc\n"])
def test_coefficient_file_errors(text):
    with pytest.raises(ValueError):
        parse_coefficients(text)


def test_samples_must_match_grid():
    with pytest.raises(ValueError):
        DilatedSamples(CircleGrid(0.5, 8), np.zeros(4, complex))
