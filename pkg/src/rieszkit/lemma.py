"""Direct evaluation of the dilation inequality and its weaker square-root form.

For ``f`` analytic on the disc and ``0 <= r <= rho < 1``::

    ||f_r - f_rho||_1 <= 2 sqrt(||f_rho||_1^2 - ||f_r||_1^2)
                      <= 2 sqrt(2) sqrt(||f_rho||_1) sqrt(||f_rho||_1 - ||f_r||_1)

All norms are L1 norms on circles against ``dtheta / 2pi``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .circle import (
    DEFAULT_POINTS,
    AnalyticPoly,
    CircleGrid,
    DilatedSamples,
    as_poly,
    dilate,
    dilation_difference,
    norm_l1,
    norm_l1_diff,
    norm_l1_gap,
    random_poly,
)

TOL_ABS = 1e-8
TOL_REL = 1e-8
DEGENERATE_RHS = 1e-12
MONOTONE_TOL = 1e-10

CSV_FIELDS = ("seed", "degree", "r", "rho", "lhs", "rhs_main", "rhs_adjusted", "ratio", "slack")


def _within(lhs: float, rhs: float, tol_abs: float, tol_rel: float) -> bool:
    return lhs <= rhs + tol_abs + tol_rel * max(abs(lhs), abs(rhs))


@dataclass(frozen=True)
class LemmaReport:
    r: float
    rho: float
    lhs: float
    rhs_main: float
    rhs_adjusted: float
    norms: tuple
    tol_abs: float = TOL_ABS
    tol_rel: float = TOL_REL

    @property
    def degenerate(self) -> bool:
        return self.rhs_main < DEGENERATE_RHS

    @property
    def ratio(self) -> float:
        """The constant this instance demands; NaN when ``rhs_main`` vanishes."""
        if self.degenerate:
            return math.nan
        return self.lhs / (0.5 * self.rhs_main)

    @property
    def slack(self) -> float:
        return self.rhs_main - self.lhs

    @property
    def holds_main(self) -> bool:
        return _within(self.lhs, self.rhs_main, self.tol_abs, self.tol_rel)

    @property
    def holds_adjusted(self) -> bool:
        return _within(self.lhs, self.rhs_adjusted, self.tol_abs, self.tol_rel)

    @property
    def bounds_ordered(self) -> bool:
        return self.rhs_main <= self.rhs_adjusted + 1e-12 * max(1.0, self.rhs_adjusted)

    @property
    def monotone(self) -> bool:
        n_r, n_rho = self.norms
        return n_r <= n_rho + MONOTONE_TOL * max(1.0, n_rho)

    @property
    def ok(self) -> bool:
        return self.holds_main and self.holds_adjusted and self.monotone


def lemma_report(s_r: DilatedSamples, s_rho: DilatedSamples, *,
                 tol_abs: float = TOL_ABS, tol_rel: float = TOL_REL,
                 norms: tuple | None = None, diff: DilatedSamples | None = None) -> LemmaReport:
    """Assemble both bounds from samples of ``f`` on the two circles.

    ``diff`` holds accurately computed samples of ``f_rho - f_r``; when given
    it is used for the left side and for ``||f_rho||_1 - ||f_r||_1``.
    """
    lhs = norm_l1_diff(s_r, s_rho) if diff is None else norm_l1(diff)
    if norms is not None:
        n_r, n_rho = norms
        gap = max(n_rho - n_r, 0.0)
    else:
        n_r, n_rho = norm_l1(s_r), norm_l1(s_rho)
        gap = max(norm_l1_gap(s_r, s_rho, diff), 0.0)
    # (n_rho - n_r)(n_rho + n_r) loses less than n_rho**2 - n_r**2
    rhs_main = 2.0 * math.sqrt(gap * (n_rho + n_r))
    rhs_adj = 2.0 * math.sqrt(2.0) * math.sqrt(max(n_rho, 0.0)) * math.sqrt(gap)
    return LemmaReport(s_r.grid.radius, s_rho.grid.radius, lhs, rhs_main, rhs_adj,
                       (n_r, n_rho), tol_abs, tol_rel)


def _check_radii(r: float, rho: float) -> None:
    if r > rho:
        raise ValueError(f"need r <= rho, got r={r}, rho={rho}")
    if not 0.0 <= r <= rho < 1.0:
        raise ValueError(f"need 0 <= r <= rho < 1, got r={r}, rho={rho}")


def check_main_lemma(f, r: float, rho: float, M: int = DEFAULT_POINTS, **tol) -> LemmaReport:
    f = as_poly(f)
    _check_radii(r, rho)
    return lemma_report(dilate(f, r, M), dilate(f, rho, M), diff=dilation_difference(f, r, rho, M), **tol)


def check_adjusted_lemma(f, r: float, rho: float, M: int = DEFAULT_POINTS, **tol) -> LemmaReport:
    # same quantities; callers read ``holds_adjusted`` / ``rhs_adjusted``
    return check_main_lemma(f, r, rho, M, **tol)


@dataclass(frozen=True)
class RadialProfile:
    radii: np.ndarray
    means: np.ndarray
    log_convexity: np.ndarray = field(repr=False)

    @property
    def monotone_defect(self) -> float:
        """Largest decrease between consecutive radii (<= 0 when nondecreasing)."""
        if len(self.means) < 2:
            return 0.0
        return float(np.max(self.means[:-1] - self.means[1:]))

    def is_monotone(self, tol: float = MONOTONE_TOL) -> bool:
        return self.monotone_defect <= tol

    @property
    def min_log_convexity(self) -> float:
        return float(np.min(self.log_convexity)) if self.log_convexity.size else 0.0

    def as_pairs(self) -> list:
        return list(zip(self.radii.tolist(), self.means.tolist()))


def log_convexity_differences(radii, means) -> np.ndarray:
    """Slope increments of ``log ||f_r||_1`` against ``log r`` on consecutive triples."""
    radii, means = np.asarray(radii, float), np.asarray(means, float)
    keep = (radii > 0) & (means > 0)
    x, y = np.log(radii[keep]), np.log(means[keep])
    if x.size < 3:
        return np.zeros(0)
    slopes = np.diff(y) / np.diff(x)
    return np.diff(slopes)


def radial_mean_profile(f, radii: Sequence[float], M: int = DEFAULT_POINTS) -> RadialProfile:
    f = as_poly(f)
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    if radii.size and (radii[0] < 0 or radii[-1] >= 1):
        raise ValueError("radii must lie in [0, 1)")
    means = np.array([norm_l1(dilate(f, r, M)) for r in radii])
    return RadialProfile(radii, means, log_convexity_differences(radii, means))


def cauchy_increments(f, radii: Sequence[float], M: int = DEFAULT_POINTS) -> list:
    """For each ``r_n`` return ``(sup_{m>n} ||f_{r_n} - f_{r_m}||_1, 2 sqrt(||f_1||^2 - ||f_{r_n}||^2))``."""
    f = as_poly(f)
    samples = [dilate(f, r, M) for r in radii]
    top = norm_l1(dilate(f, 1.0, M))
    out = []
    for n, s in enumerate(samples[:-1]):
        sup = max(norm_l1_diff(s, t) for t in samples[n + 1:])
        out.append((sup, 2.0 * math.sqrt(max(top ** 2 - norm_l1(s) ** 2, 0.0))))
    return out


# -- negative control: a positive harmonic function that is not analytic -------

def poisson_samples(w: complex, radius: float, M: int) -> DilatedSamples:
    """``u(z) = (1 - |w z|^2) / |1 - conj(w) z|^2`` on the circle ``|z| = radius``.

    ``u`` is the real part of ``(1 + conj(w) z) / (1 - conj(w) z)``: harmonic,
    positive and of unit mean on every circle.
    """
    grid = CircleGrid(float(radius), M)
    z = grid.points
    w = complex(w)
    vals = (1.0 - abs(w) ** 2 * np.abs(z) ** 2) / np.abs(1.0 - np.conj(w) * z) ** 2
    return DilatedSamples(grid, vals.astype(complex))


def poisson_discrete_mean(s: float, M: int) -> float:
    """Exact value of the M-point trapezoidal mean of the Poisson kernel of radius ``s``."""
    sM = s ** M
    return (1.0 + sM) / (1.0 - sM)


def negative_control_poisson(w: complex, r: float, rho: float, M: int = DEFAULT_POINTS) -> LemmaReport:
    """Evaluate the inequality on the non-analytic Poisson kernel ``u``.

    ``||u_r||_1`` is the trapezoidal mean of a positive function, which has
    the closed form :func:`poisson_discrete_mean`; using it keeps the
    vanishing right-hand side free of cancellation noise.
    """
    if not 0.0 <= r < rho < 1.0:
        raise ValueError(f"need 0 <= r < rho < 1, got r={r}, rho={rho}")
    if abs(w) >= 1:
        raise ValueError("w must lie in the unit disc")
    s_r, s_rho = poisson_samples(w, r, M), poisson_samples(w, rho, M)
    norms = (poisson_discrete_mean(abs(w) * r, M), poisson_discrete_mean(abs(w) * rho, M))
    return lemma_report(s_r, s_rho, norms=norms)


# -- random batches -------------------------------------------------------------

@dataclass(frozen=True)
class Instance:
    seed: int
    f: AnalyticPoly
    r: float
    rho: float

    @property
    def degree(self) -> int:
        return self.f.degree


def instance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def random_instance(seed: int, max_degree: int = 16, radii: tuple | None = None) -> Instance:
    """Degree uniform in ``1..max_degree`` (0 gives constants), Gaussian coefficients,
    ``rho ~ U(0.05, 0.95)`` and ``r = rho u`` with ``u ~ U(0, 1)``."""
    rng = np.random.default_rng(seed)
    degree = int(rng.integers(1, max_degree + 1)) if max_degree > 0 else 0
    f = random_poly(rng, degree)
    rho = float(rng.uniform(0.05, 0.95))
    r = rho * float(rng.uniform(0.0, 1.0))
    if radii is not None:
        r, rho = map(float, radii)
    return Instance(seed, f, r, rho)


def instances(n: int, seed: int, max_degree: int = 16, radii: tuple | None = None,
              start: int = 0) -> Iterator[Instance]:
    for i in range(start, start + n):
        yield random_instance(instance_seed(seed, i), max_degree, radii)


def batch_row(inst: Instance, report: LemmaReport) -> dict:
    ratio = "degenerate" if report.degenerate else repr(report.ratio)
    return {
        "seed": inst.seed, "degree": inst.degree, "r": repr(inst.r), "rho": repr(inst.rho),
        "lhs": repr(report.lhs), "rhs_main": repr(report.rhs_main),
        "rhs_adjusted": repr(report.rhs_adjusted), "ratio": ratio, "slack": repr(report.slack),
    }


def run_batch(n: int, seed: int, max_degree: int = 16, M: int = DEFAULT_POINTS,
              radii: tuple | None = None, start: int = 0, **tol) -> list:
    """Evaluate ``n`` reproducible random instances; returns ``(instance, report)`` pairs."""
    out = []
    for inst in instances(n, seed, max_degree, radii, start):
        out.append((inst, check_main_lemma(inst.f, inst.r, inst.rho, M, **tol)))
    return out


def write_batch_csv(rows: Iterable[dict], stream, header_lines: Sequence[str] = ()) -> None:
    for line in header_lines:
        stream.write(f"# {line}\n")
    writer = csv.DictWriter(stream, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
