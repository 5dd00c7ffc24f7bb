"""Derivative-free search for large values of the dilation-inequality ratio.

The ratio ``||f_r - f_rho|| / sqrt(||f_rho||^2 - ||f_r||^2)`` is maximized
over polynomial coefficients and radii with a restarted Nelder-Mead simplex.
Radii are reparametrized so every point of the search space is admissible::

    rho = 0.999 * sigmoid(s),    r = rho * sigmoid(t)    (r = 0 in "r-zero" mode)

The objective is invariant under ``f -> c f``, so reported maximizers are
normalized to unit coefficient norm with a real nonnegative leading term.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .circle import AnalyticPoly, dilate, dilation_difference, norm_l1_gap, norm_lp
from .lemma import LemmaReport, check_main_lemma

MODES = ("r-zero", "r-free", "p-variant")
RHO_CAP = 0.999
# squared denominators below this fraction of ||f_rho||^2 are rounding noise
DEGENERATE_REL = 1e-10
CEILING = 2.0


@dataclass(frozen=True)
class SearchConfig:
    degree: int = 8
    restarts: int = 64
    iterations: int = 2000
    seed: int = 0
    mode: str = "r-free"
    p: float = 1.0
    M: int = 1024
    certify_M: int = 4096

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if not 0 <= self.degree <= 32:
            raise ValueError("degree must lie in 0..32")
        if self.p <= 0:
            raise ValueError("p must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")

    @property
    def exponent(self) -> float:
        return self.p if self.mode == "p-variant" else 1.0


@dataclass
class SearchResult:
    config: SearchConfig
    best_ratio: float
    coeffs: np.ndarray
    r: float
    rho: float
    history: list
    certificate: LemmaReport
    certified_ratio: float
    max_evaluated: float
    evaluations: int = 0

    @property
    def argmax(self) -> tuple:
        return AnalyticPoly(self.coeffs), self.r, self.rho

    @property
    def ceiling_breached(self) -> bool:
        return self.certified_ratio > CEILING + 1e-6

    def report(self) -> str:
        lines = [
            f"mode = {self.config.mode}",
            f"p = {self.config.exponent!r}",
            f"degree = {self.config.degree}",
            f"best_ratio = {self.best_ratio!r}",
            f"certified_ratio = {self.certified_ratio!r}",
            f"certificate_M = {self.config.certify_M}",
            f"max_evaluated = {self.max_evaluated!r}",
            f"evaluations = {self.evaluations}",
            f"r = {self.r!r}",
            f"rho = {self.rho!r}",
        ]
        lines += [f"a_{k} = {float(c.real)!r} {float(c.imag)!r}" for k, c in enumerate(self.coeffs)]
        return "\n".join(lines) + "\n"

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["restart", "best_ratio", "evaluations"])
        for row in self.history:
            w.writerow([row[0], repr(row[1]), row[2]])
        return buf.getvalue()


def objective(coeffs, r: float, rho: float, M: int = 1024, p: float = 1.0) -> float:
    """``||f_r - f_rho||_p / sqrt(||f_rho||_p^2 - ||f_r||_p^2)``, or 0 when degenerate."""
    f = coeffs if isinstance(coeffs, AnalyticPoly) else AnalyticPoly(coeffs)
    if not 0.0 <= r <= rho < 1.0:
        raise ValueError(f"need 0 <= r <= rho < 1, got r={r}, rho={rho}")
    f = f.trim()
    if f.is_zero():
        return 0.0
    s_r, s_rho = dilate(f, r, M), dilate(f, rho, M)
    diff = dilation_difference(f, r, rho, M)
    n_r, n_rho = norm_lp(s_r, p), norm_lp(s_rho, p)
    gap = norm_l1_gap(s_r, s_rho, diff) if p == 1.0 else n_rho - n_r
    den2 = max(gap, 0.0) * (n_rho + n_r)
    if n_rho == 0.0 or den2 <= DEGENERATE_REL * n_rho ** 2:
        return 0.0
    return norm_lp(diff, p) / math.sqrt(den2)


def normalize(coeffs: np.ndarray) -> np.ndarray:
    """Unit Euclidean norm and a real nonnegative first nonzero coefficient."""
    c = np.asarray(coeffs, dtype=complex)
    nrm = np.linalg.norm(c)
    if nrm == 0:
        return c
    c = c / nrm
    nz = np.flatnonzero(np.abs(c) > 0)
    c = c * np.exp(-1j * np.angle(c[nz[0]]))
    c[nz[0]] = abs(c[nz[0]])
    return c


def _decode(x: np.ndarray, degree: int, mode: str):
    n = degree + 1
    coeffs = x[:n] + 1j * x[n:2 * n]
    rho = RHO_CAP * float(expit(x[2 * n]))
    r = 0.0 if mode == "r-zero" else rho * float(expit(x[2 * n + 1]))
    return coeffs, r, rho


def _dimension(config: SearchConfig) -> int:
    return 2 * (config.degree + 1) + (1 if config.mode == "r-zero" else 2)


def _run_restart(config: SearchConfig, restart: int):
    rng = np.random.default_rng([config.seed, restart])
    dim = _dimension(config)
    n = config.degree + 1
    x = np.empty(dim)
    x[:2 * n] = rng.standard_normal(2 * n) / math.sqrt(2.0)
    x[2 * n:] = rng.uniform(-4.0, 4.0, dim - 2 * n)

    p = config.exponent
    state = {"evals": 0, "max": 0.0, "best": 0.0, "x": x.copy()}

    def neg(xv):
        coeffs, r, rho = _decode(xv, config.degree, config.mode)
        val = objective(coeffs, r, rho, config.M, p)
        state["evals"] += 1
        if val > state["max"]:
            state["max"] = val
        if val > state["best"]:
            state["best"], state["x"] = val, xv.copy()
        return -val

    budget = config.iterations
    start = x
    while state["evals"] < budget:
        before = state["best"]
        minimize(neg, start, method="Nelder-Mead",
                 options={"maxfev": budget - state["evals"], "xatol": 1e-10,
                          "fatol": 1e-13, "adaptive": dim > 6})
        start = state["x"]
        if state["best"] - before <= 1e-12:
            break
    return restart, state["best"], state["x"], state["evals"], state["max"]


def maximize(config: SearchConfig, workers: int = 1) -> SearchResult:
    """Best ratio over ``config.restarts`` independent restarts.

    Restart ``i`` draws its start from a generator seeded with
    ``(seed, i)``, so the outcome does not depend on ``workers``.
    """
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(_run_restart, [config] * config.restarts, range(config.restarts)))
    else:
        runs = [_run_restart(config, i) for i in range(config.restarts)]
    runs.sort(key=lambda t: t[0])

    history = [(i, best, evals) for i, best, _, evals, _ in runs]
    i_best = max(range(len(runs)), key=lambda k: (runs[k][1], -k))
    _, best, xbest, _, _ = runs[i_best]
    coeffs, r, rho = _decode(xbest, config.degree, config.mode)
    coeffs = normalize(coeffs)
    certificate = check_main_lemma(coeffs, r, rho, config.certify_M)
    certified = objective(coeffs, r, rho, config.certify_M, config.exponent)
    return SearchResult(
        config=config, best_ratio=float(best), coeffs=coeffs, r=r, rho=rho,
        history=history, certificate=certificate, certified_ratio=certified,
        max_evaluated=max(t[4] for t in runs), evaluations=sum(t[3] for t in runs),
    )


def epsilon_sweep(epsilons, rho: float = 0.99, M: int = 4096) -> list:
    """Ratios for ``f = 1 + eps z`` at ``r = 0``; they increase to sqrt 2 as eps -> 0."""
    return [(float(e), check_main_lemma([1.0, e], 0.0, rho, M).ratio) for e in epsilons]


def line_search_linear(epsilons, rhos, M: int = 1024) -> tuple:
    """Grid maximum of the r-free objective restricted to ``f = 1 + eps z``."""
    best = (0.0, None, None)
    for e in epsilons:
        for rho in rhos:
            v = objective([1.0, e], 0.0, rho, M)
            if v > best[0]:
                best = (v, e, rho)
    return best
