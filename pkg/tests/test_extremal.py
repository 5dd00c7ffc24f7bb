import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rieszkit.extremal import (SearchConfig, epsilon_sweep, line_search_linear, maximize, normalize,
                               objective)

SQRT2 = math.sqrt(2)
# sweep ratios for f = 1 + eps z at r = 0, rho = 0.99 (mpmath, 30 digits)
SWEEP = {1e-1: 1.4129137855214882, 1e-2: 1.4142005679269954, 1e-3: 1.4142134324289624,
         1e-4: 1.4142135610736538}


def coarse_grid_oracle():
    """Independent maximum over f = 1 + b z + c z^2 (real b, c) at r = 0 by direct sampling."""
    theta = 2 * np.pi * np.arange(4096) / 4096
    z = np.exp(1j * theta)
    best = 0.0
    for rho in (0.3, 0.6, 0.9, 0.99):
        for b in (0.0, 0.01, 0.03, 0.1, 0.3, -0.01, -0.1):
            for c in (0.0, 0.01, 0.05, 0.2, -0.05):
                if b == c == 0:
                    continue
                w = rho * z
                frho = 1 + b * w + c * w * w
                lhs = np.mean(np.abs(frho - 1))
                n = np.mean(np.abs(frho))
                best = max(best, lhs / math.sqrt(n * n - 1))
    return best


class TestObjective:
    def test_constant_is_degenerate(self):
        assert objective([4.0], 0.1, 0.9) == 0.0
        assert objective([0.0, 0.0], 0.1, 0.9) == 0.0

    def test_linear_perturbation(self):
        assert abs(objective([1, 1e-4], 0.0, 0.99, 4096) - SQRT2) <= 1e-2

    def test_monomial(self):
        assert objective([0, 1], 0.2, 0.5) == pytest.approx(0.3 / math.sqrt(0.21), abs=1e-12)

    def test_refuses_bad_radii(self):
        with pytest.raises(ValueError):
            objective([1, 1], 0.8, 0.5)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False), min_size=2, max_size=9),
           st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3, allow_nan=False),
           st.floats(0.05, 0.95), st.floats(0, 1))
    def test_scale_invariance(self, coeffs, c, rho, u):
        a = objective(coeffs, rho * u, rho)
        b = objective(np.asarray(coeffs) * c, rho * u, rho)
        assert b == pytest.approx(a, abs=1e-10 * max(1.0, a)) or a == 0.0 or b == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False), min_size=1, max_size=9),
           st.floats(0.0, 0.95), st.floats(0, 1))
    def test_l2_ratio_at_most_one(self, coeffs, rho, u):
        assert objective(coeffs, rho * u, rho, 256, p=2.0) <= 1 + 1e-6


def test_normalize():
    c = normalize(np.array([0, -2j, 1]))
    assert np.linalg.norm(c) == pytest.approx(1)
    assert c[0] == 0 and c[1].imag == 0 and c[1].real > 0


def test_epsilon_sweep_increases_to_sqrt2():
    eps = sorted(SWEEP, reverse=True)
    ratios = [r for _, r in epsilon_sweep(eps)]
    assert all(b > a for a, b in zip(ratios, ratios[1:]))
    for e, r in zip(eps, ratios):
        assert r == pytest.approx(SWEEP[e], abs=1e-7)
    assert abs(ratios[-1] - SQRT2) <= 1e-2


def test_line_search_approaches_from_below():
    best, eps, rho = line_search_linear([1e-1, 1e-2, 1e-3], [0.5, 0.9, 0.99])
    assert best <= SQRT2 + 1e-6 and best >= SQRT2 - 1e-3
    assert eps == 1e-3


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(mode="bogus")
    with pytest.raises(ValueError):
        SearchConfig(restarts=0)
    with pytest.raises(ValueError):
        SearchConfig(mode="p-variant", p=0)
    with pytest.raises(ValueError):
        SearchConfig(degree=33)


class TestMaximize:
    def test_r_zero_matches_grid_oracle(self):
        oracle = coarse_grid_oracle()
        res = maximize(SearchConfig(degree=2, restarts=6, iterations=800, seed=3, mode="r-zero"))
        assert res.best_ratio >= oracle - 1e-3
        assert res.best_ratio <= SQRT2 + 1e-3
        assert abs(res.certified_ratio - res.best_ratio) <= 1e-4
        assert res.r == 0.0 and len(res.history) == 6

    def test_r_free_degree_one(self):
        res = maximize(SearchConfig(degree=1, restarts=4, iterations=600, seed=1))
        assert SQRT2 - 5e-3 <= res.best_ratio <= 2 + 1e-6
        assert not res.ceiling_breached

    def test_p2_ceiling(self):
        res = maximize(SearchConfig(degree=4, restarts=3, iterations=400, seed=0, mode="p-variant", p=2.0))
        assert res.best_ratio <= 1 + 1e-6 and res.max_evaluated <= 1 + 1e-6

    def test_reproducible_and_worker_independent(self):
        cfg = SearchConfig(degree=3, restarts=3, iterations=200, seed=11)
        a, b = maximize(cfg), maximize(cfg, workers=2)
        assert a.report() == b.report() and a.history_csv() == b.history_csv()

    def test_report_and_history(self):
        res = maximize(SearchConfig(degree=2, restarts=2, iterations=100, seed=4))
        text = res.report()
        assert "best_ratio = " in text and "a_2 = " in text and "np." not in text
        rows = res.history_csv().splitlines()
        assert rows[0] == "restart,best_ratio,evaluations" and len(rows) == 3
        f, r, rho = res.argmax
        assert 0 <= r <= rho < 1 and f.degree <= 2
