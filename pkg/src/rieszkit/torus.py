"""Trigonometric polynomials on the infinite torus and the Abschnitt operators.

A character of the infinite torus is indexed by a finitely supported integer
sequence ``kappa``; ``chi^kappa = prod_j chi_j^kappa_j``.  A :class:`TrigPoly`
is a finite linear combination of characters, held as an exact coefficient
map.  Only norms are approximate: they are integrals against Haar measure on
the first ``d`` coordinates, computed on a tensor grid (FFT evaluation) or by
Monte Carlo with a counter-based generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circle import AnalyticPoly

GRID_MAX_DIM = 3
GRID_POINTS_L1 = {1: 256, 2: 256, 3: 64}
MC_SAMPLES = 2 ** 20
GRID_TOL = 1e-8


class MultiIndex(tuple):
    """Finitely supported integer sequence in canonical form (no trailing zeros)."""

    def __new__(cls, entries: Iterable[int] = ()):
        e = [int(k) for k in entries]
        while e and e[-1] == 0:
            e.pop()
        return super().__new__(cls, e)

    @property
    def support(self) -> int:
        return len(self)

    @property
    def is_analytic(self) -> bool:
        return all(k >= 0 for k in self)

    def padded(self, d: int) -> tuple:
        if len(self) > d:
            raise ValueError(f"{self} is supported beyond coordinate {d}")
        return tuple(self) + (0,) * (d - len(self))

    def __repr__(self):
        return f"MultiIndex({tuple(self)})"


class TrigPoly:
    """``T(chi) = sum_kappa a_kappa chi^kappa`` with exact coefficient algebra."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict = {}
        for k, a in items:
            k = MultiIndex(k)
            acc[k] = acc.get(k, 0j) + complex(a)
        self.terms = {k: a for k, a in acc.items() if a != 0}

    # -- structure
    @property
    def dimension(self) -> int:
        return max((k.support for k in self.terms), default=0)

    @property
    def is_analytic(self) -> bool:
        return all(k.is_analytic for k in self.terms)

    def max_abs_degree(self) -> int:
        return max((abs(e) for k in self.terms for e in k), default=0)

    def coefficient(self, kappa) -> complex:
        return self.terms.get(MultiIndex(kappa), 0j)

    # -- algebra
    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            other = TrigPoly({(): other})
        out = dict(self.terms)
        for k, a in other.terms.items():
            out[k] = out.get(k, 0j) + a
        return TrigPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly({k: -a for k, a in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, TrigPoly) else -complex(other))

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            return TrigPoly({k: a * complex(other) for k, a in self.terms.items()})
        out: dict = {}
        for k1, a1 in self.terms.items():
            for k2, a2 in other.terms.items():
                n = max(len(k1), len(k2))
                k = MultiIndex(x + y for x, y in zip(k1.padded(n), k2.padded(n)))
                out[k] = out.get(k, 0j) + a1 * a2
        return TrigPoly(out)

    __rmul__ = __mul__

    def conjugate(self) -> "TrigPoly":
        """``conj(T)`` on the torus: conjugate coefficients, negated frequencies."""
        return TrigPoly({MultiIndex(-e for e in k): np.conj(a) for k, a in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self.terms == other.terms

    def __repr__(self):
        body = " + ".join(f"({a:.6g})*chi^{tuple(k)}" for k, a in sorted(self.terms.items()))
        return f"TrigPoly({body or '0'})"

    # -- evaluation
    def __call__(self, chi):
        """Evaluate at points ``chi`` of shape ``(..., d)``; ``d >= dimension``."""
        chi = np.asarray(chi, dtype=complex)
        d = self.dimension
        if chi.shape[-1] < d:
            raise ValueError(f"need at least {d} coordinates, got {chi.shape[-1]}")
        out = np.zeros(chi.shape[:-1], dtype=complex)
        for k, a in self.terms.items():
            term = np.full(chi.shape[:-1], a, dtype=complex)
            for j, e in enumerate(k):
                if e:
                    term = term * chi[..., j] ** e
            out = out + term
        return out

    def grid_values(self, d: int, M: int) -> np.ndarray:
        """Values on the tensor grid ``(exp(2 pi i n_j / M))``, shape ``(M,) * d``, via inverse FFT."""
        if self.dimension > d:
            raise ValueError(f"dimension {self.dimension} exceeds grid dimension {d}")
        C = np.zeros((M,) * d, dtype=complex)
        for k, a in self.terms.items():
            C[tuple(e % M for e in k.padded(d))] += a
        if d == 0:
            return C
        return np.fft.ifftn(C) * M ** d

    # -- text format: "k1 k2 ... : re im"
    def to_text(self) -> str:
        lines = []
        for k, a in sorted(self.terms.items()):
            lines.append(f"{' '.join(str(e) for e in k)} : {a.real!r} {a.imag!r}".lstrip())
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "TrigPoly":
        terms = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if ":" not in line:
                raise ValueError(f"line {lineno}: expected 'k1 k2 ... : re im', got {line!r}")
            lhs, rhs = line.split(":", 1)
            parts = rhs.split()
            if len(parts) not in (1, 2):
                raise ValueError(f"line {lineno}: expected 're im' after ':'")
            coeff = complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0)
            terms.append((tuple(int(t) for t in lhs.split()), coeff))
        return cls(terms)

    @classmethod
    def read(cls, path) -> "TrigPoly":
        return cls.from_text(Path(path).read_text())


def character(*kappa, coeff: complex = 1.0) -> TrigPoly:
    return TrigPoly({kappa: coeff})


def variable(j: int) -> TrigPoly:
    """The coordinate function ``chi_j`` (1-based)."""
    return TrigPoly({(0,) * (j - 1) + (1,): 1.0})


def from_circle_poly(f: AnalyticPoly, j: int = 1) -> TrigPoly:
    return TrigPoly({(0,) * (j - 1) + (k,): a for k, a in enumerate(f.coeffs)})


# -- integration --------------------------------------------------------------

class Estimate(float):
    """A float carrying the standard error of the estimator that produced it."""

    stderr: float

    def __new__(cls, value: float, stderr: float = 0.0):
        obj = super().__new__(cls, value)
        obj.stderr = float(stderr)
        return obj

    def __repr__(self):
        return f"Estimate({float(self)!r}, stderr={self.stderr!r})"


@dataclass(frozen=True)
class TorusSampler:
    """Haar measure on the first ``d`` coordinates, by tensor grid or Monte Carlo."""

    d: int
    scheme: str = "grid"
    M: int | None = None
    N: int = MC_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("grid", "mc"):
            raise ValueError("scheme must be 'grid' or 'mc'")
        if self.d < 0:
            raise ValueError("d must be nonnegative")

    @classmethod
    def auto(cls, d: int, p: float = 1.0, degree: int = 0, **kw) -> "TorusSampler":
        """Tensor grid up to three coordinates, Monte Carlo beyond."""
        if d <= GRID_MAX_DIM:
            return cls(d, "grid", grid_points(d, p, degree), **kw)
        return cls(d, "mc", **kw)

    def points_per_axis(self, T: TrigPoly | None = None, p: float = 1.0) -> int:
        if self.M is not None:
            return self.M
        return grid_points(self.d, p, T.max_abs_degree() if T is not None else 0)

    def chi(self) -> np.ndarray:
        """Monte Carlo sample points, shape ``(N, d)``."""
        gen = np.random.Generator(np.random.Philox(key=self.seed))
        return np.exp(2j * np.pi * gen.random((self.N, self.d)))

    def values(self, T: TrigPoly, p: float = 1.0) -> np.ndarray:
        if T.dimension > self.d:
            raise ValueError(f"sampler dimension {self.d} < polynomial dimension {T.dimension}")
        if self.scheme == "grid":
            return T.grid_values(self.d, self.points_per_axis(T, p)).ravel()
        return T(self.chi())

    def mean(self, samples: np.ndarray) -> Estimate:
        samples = np.asarray(samples, dtype=float).ravel()
        m = math.fsum(samples) / samples.size
        if self.scheme == "grid" or samples.size < 2:
            return Estimate(m, 0.0)
        return Estimate(m, float(np.std(samples, ddof=1)) / math.sqrt(samples.size))


def grid_points(d: int, p: float, degree: int) -> int:
    """Points per axis: exact for ``p = 2`` (power of two above ``2 * degree``), else the L1 default."""
    exact = 1 << max(1, math.ceil(math.log2(2 * degree + 1)) if degree else 1)
    if p == 2:
        return max(exact, 2)
    return max(exact, GRID_POINTS_L1.get(d, 32))


def norm_lp(T: TrigPoly, p: float, sampler: TorusSampler) -> Estimate:
    """``(int |T|^p dm)^(1/p)`` with a delta-method standard error for Monte Carlo."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if T.dimension > sampler.d:
        raise ValueError(f"sampler dimension {sampler.d} < polynomial dimension {T.dimension}")
    if not T.terms:
        return Estimate(0.0, 0.0)
    est = sampler.mean(np.abs(sampler.values(T, p)) ** p)
    val = float(est) ** (1.0 / p)
    se = est.stderr * (val / (p * float(est)) if est > 0 else 0.0)
    return Estimate(val, se)


# -- Abschnitte -----------------------------------------------------------------

def abschnitt(T: TrigPoly, d: int) -> TrigPoly:
    """Drop every Fourier coefficient whose frequency is supported beyond coordinate ``d``."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return TrigPoly({k: a for k, a in T.terms.items() if k.support <= d})


def partial_evaluate(P: TrigPoly, values: Mapping[int, complex]) -> TrigPoly:
    """Substitute ``chi_j = values[j]`` (1-based ``j``) into a polynomial."""
    out: dict = {}
    for k, a in P.terms.items():
        coeff = complex(a)
        entries = list(k)
        for j, v in values.items():
            if j <= len(entries):
                e = entries[j - 1]
                coeff *= complex(v) ** e if e else 1.0
                entries[j - 1] = 0
        key = MultiIndex(entries)
        out[key] = out.get(key, 0j) + coeff
    return TrigPoly(out)


def abschnitt_substitution(P: TrigPoly, d: int) -> TrigPoly:
    """``P(chi_1, ..., chi_d, 0, 0, ...)`` for an analytic polynomial ``P``."""
    if not P.is_analytic:
        raise ValueError("substituting 0 needs nonnegative exponents (analytic P)")
    if d < 1:
        raise ValueError("d must be at least 1")
    return partial_evaluate(P, {j: 0.0 for j in range(d + 1, P.dimension + 1)})


def check_abschnitt_monotone(T: TrigPoly, p: float, sampler: TorusSampler) -> list:
    """``[||A_1 T||_p, ..., ||A_D T||_p]`` with ``D = dimension(T)``; the last entry is ``||T||_p``."""
    return [norm_lp(abschnitt(T, d), p, sampler) for d in range(1, max(T.dimension, 1) + 1)]


def is_nondecreasing(seq: Sequence[float], tol: float = GRID_TOL) -> bool:
    return all(b >= a - tol - 3.0 * (getattr(a, "stderr", 0.0) + getattr(b, "stderr", 0.0))
               for a, b in zip(seq, seq[1:]))


def check_lp_density_convergence(T: TrigPoly, p: float, sampler: TorusSampler) -> list:
    """``||T - A_d T||_p`` for ``d = 1, ..., dimension(T)``; the last entry is exactly 0."""
    return [norm_lp(T - abschnitt(T, d), p, sampler) for d in range(1, T.dimension + 1)]


def mean_value_defect(T: TrigPoly, d: int, M: int | None = None) -> float:
    """Max deviation between averaging ``T`` over ``chi_{d+1}, ...`` on the grid and ``A_d T``."""
    D = max(T.dimension, d)
    M = M or grid_points(D, 2, T.max_abs_degree())
    full = T.grid_values(D, M)
    avg = full.mean(axis=tuple(range(d, D))) if D > d else full
    return float(np.max(np.abs(avg - abschnitt(T, d).grid_values(d, M))))


# -- slice embedding ----------------------------------------------------------------

@dataclass(frozen=True)
class SliceEmbedding:
    """``F(chi, z) = P(chi_1, ..., chi_d1, chi_{d1+1} z, ..., chi_d2 z)``."""

    P: TrigPoly
    d1: int

    def __post_init__(self):
        if not self.P.is_analytic:
            raise ValueError("slice embedding needs an analytic polynomial")
        if self.d1 < 1:
            raise ValueError("d1 must be at least 1")

    @property
    def d2(self) -> int:
        return max(self.P.dimension, self.d1)

    @property
    def z_degree(self) -> int:
        return max((sum(k[self.d1:]) for k in self.P.terms), default=0)

    def coefficients(self, chi) -> np.ndarray:
        """Coefficients in ``z`` for each sample, shape ``(..., z_degree + 1)``."""
        chi = np.asarray(chi, dtype=complex)
        out = np.zeros(chi.shape[:-1] + (self.z_degree + 1,), dtype=complex)
        for k, a in self.P.terms.items():
            term = np.full(chi.shape[:-1], a, dtype=complex)
            for j, e in enumerate(k):
                if e:
                    term = term * chi[..., j] ** e
            out[..., sum(k[self.d1:])] += term
        return out

    def polynomial(self, chi) -> AnalyticPoly:
        return AnalyticPoly(self.coefficients(np.asarray(chi)[None, :])[0])

    def __call__(self, chi, z):
        c = self.coefficients(chi)
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(np.broadcast_shapes(c.shape[:-1], z.shape), dtype=complex) + c[..., -1]
        for m in range(c.shape[-1] - 2, -1, -1):
            acc = acc * z + c[..., m]
        return acc


def slice_embed(P: TrigPoly, d1: int) -> SliceEmbedding:
    return SliceEmbedding(P, d1)


# -- the Abschnitt Cauchy estimate ----------------------------------------------------

def h1_bound(n_top: float, n_low: float) -> float:
    """``2 sqrt 2 sqrt(n_top) sqrt(n_top - n_low)`` (gap clamped at 0)."""
    return 2.0 * math.sqrt(2.0) * math.sqrt(max(n_top, 0.0)) * math.sqrt(max(n_top - n_low, 0.0))


@dataclass(frozen=True)
class H1AbschnittReport:
    d1: int
    d2: int
    lhs: Estimate
    norm_low: Estimate
    norm_top: Estimate
    rhs: float
    tolerance: float
    slice_lhs: Estimate | None = None
    slice_rhs: float | None = None
    slice_tolerance: float = 0.0
    slice_violations: int = 0
    slice_samples: int = 0

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance

    @property
    def slice_holds(self) -> bool | None:
        if self.slice_lhs is None:
            return None
        return self.slice_lhs <= self.slice_rhs + self.slice_tolerance

    @property
    def routes_agree(self) -> bool:
        """Both routes put the left side below the right side (or both above)."""
        return self.slice_holds is None or self.slice_holds == self.holds


def _bound_with_error(n_top: Estimate, n_low: Estimate, k: float = 3.0) -> float:
    return h1_bound(n_top + k * n_top.stderr, n_low - k * n_low.stderr)


def slice_route(P: TrigPoly, d1: int, n_samples: int = 4096, Mz: int | None = None, seed: int = 1) -> dict:
    """Integrate the per-slice one-variable estimate over random ``chi``.

    For each sampled ``chi`` the polynomial ``z -> F(chi, z)`` is checked
    against ``||F - F(0)||_1 <= 2 sqrt 2 sqrt(||F||_1) sqrt(||F||_1 - |F(0)|)``
    on the unit circle; then the three circle quantities are averaged over
    ``chi`` and recombined with Cauchy-Schwarz.
    """
    emb = slice_embed(P, d1)
    K = emb.z_degree
    Mz = Mz or max(256, 1 << math.ceil(math.log2(2 * (K + 1))))
    gen = np.random.Generator(np.random.Philox(key=seed))
    chi = np.exp(2j * np.pi * gen.random((n_samples, max(emb.d2, 1))))
    c = emb.coefficients(chi)
    pad = np.zeros((n_samples, Mz), dtype=complex)
    pad[:, : K + 1] = c
    vals = np.fft.ifft(pad, axis=1) * Mz          # F(chi, e^{2 pi i m / Mz})
    F0 = c[:, 0]
    A = np.abs(vals).mean(axis=1)
    L = np.abs(vals - F0[:, None]).mean(axis=1)
    B = np.abs(F0)
    per_slice = 2.0 * math.sqrt(2.0) * np.sqrt(A) * np.sqrt(np.maximum(A - B, 0.0))
    viol = int(np.sum(L > per_slice + GRID_TOL * (1.0 + per_slice)))

    def est(x):
        return Estimate(float(x.mean()), float(x.std(ddof=1)) / math.sqrt(x.size) if x.size > 1 else 0.0)

    return {"lhs": est(L), "top": est(A), "low": est(B), "per_slice_violations": viol, "samples": n_samples}


def check_h1_abschnitt_lemma(P: TrigPoly, d1: int, d2: int, sampler: TorusSampler | None = None,
                             slice_samples: int = 4096, seed: int = 1) -> H1AbschnittReport:
    """Compare ``||A_d1 P - A_d2 P||_1`` with its square-root bound, directly and by slices."""
    if d1 > d2:
        raise ValueError("need d1 <= d2")
    if P.dimension > d2:
        raise ValueError(f"P depends on coordinates beyond d2={d2}")
    if not P.is_analytic:
        raise ValueError("the estimate is for analytic polynomials")
    sampler = sampler or TorusSampler.auto(d2, 1.0, P.max_abs_degree())
    low, top = abschnitt(P, d1), abschnitt(P, d2)
    lhs = norm_lp(top - low, 1.0, sampler)
    n_low, n_top = norm_lp(low, 1.0, sampler), norm_lp(top, 1.0, sampler)
    rhs = h1_bound(n_top, n_low)
    if sampler.scheme == "grid":
        tol = GRID_TOL * (1.0 + max(lhs, rhs))
    else:
        tol = 3.0 * lhs.stderr + (_bound_with_error(n_top, n_low) - rhs)

    kw = {}
    if slice_samples:
        s = slice_route(top, d1, slice_samples, seed=seed)
        s_rhs = h1_bound(s["top"], s["low"])
        kw = dict(slice_lhs=s["lhs"], slice_rhs=s_rhs,
                  slice_tolerance=3.0 * s["lhs"].stderr + (_bound_with_error(s["top"], s["low"]) - s_rhs),
                  slice_violations=s["per_slice_violations"], slice_samples=s["samples"])
    return H1AbschnittReport(d1, d2, lhs, n_low, n_top, rhs, tol, **kw)


# -- chains ---------------------------------------------------------------------

@dataclass
class ChainReconstruction:
    ok: bool
    f: TrigPoly | None
    failed_at: int | None
    increments: list = field(default_factory=list)

    @property
    def increments_within_bound(self) -> bool:
        return all(inc <= bound + tol for _, inc, bound, tol in self.increments)


def max_coefficient_difference(a: TrigPoly, b: TrigPoly) -> float:
    return max((abs(c) for c in (a - b).terms.values()), default=0.0)


def chain_reconstruct(fs: Sequence[TrigPoly], sampler_factory=None, atol: float = 0.0) -> ChainReconstruction:
    """Check ``A_d f_{d+1} = f_d`` and return ``f_D`` when it holds.

    With ``atol = 0`` the comparison is coefficient-exact; a positive ``atol``
    allows for rounding when the ``f_d`` were built by different products.

    ``increments`` lists ``(d, ||f_{d+1} - f_d||_1, bound, tolerance)`` where the
    bound is the Abschnitt estimate with ``d1 = d``, ``d2 = d + 1``.
    """
    for d, fd in enumerate(fs, 1):
        if fd.dimension > d:
            raise ValueError(f"f_{d} depends on coordinate {fd.dimension} > {d}")
    for d in range(1, len(fs)):
        low = abschnitt(fs[d], d)
        if (low != fs[d - 1]) if atol == 0 else max_coefficient_difference(low, fs[d - 1]) > atol:
            return ChainReconstruction(False, None, d)
    incs = []
    for d in range(1, len(fs)):
        lo, hi = fs[d - 1], fs[d]
        if sampler_factory is not None:
            sampler = sampler_factory(d + 1)
        else:
            sampler = TorusSampler.auto(d + 1, 1.0, hi.max_abs_degree())
        inc = norm_lp(hi - lo, 1.0, sampler)
        n_lo, n_hi = norm_lp(lo, 1.0, sampler), norm_lp(hi, 1.0, sampler)
        bound = h1_bound(n_hi, n_lo)
        tol = (GRID_TOL * (1.0 + bound) if sampler.scheme == "grid"
               else 3.0 * inc.stderr + _bound_with_error(n_hi, n_lo) - bound)
        incs.append((d, inc, bound, tol))
    return ChainReconstruction(True, fs[-1] if fs else TrigPoly(), None, incs)


# -- random instances -------------------------------------------------------------

def random_trig_poly(rng: np.random.Generator, d: int = 3, max_degree: int = 3,
                     max_terms: int = 8, analytic: bool = False) -> TrigPoly:
    n_terms = int(rng.integers(1, max_terms + 1))
    lo = 0 if analytic else -max_degree
    terms = {}
    for _ in range(n_terms):
        k = tuple(int(x) for x in rng.integers(lo, max_degree + 1, d))
        terms[k] = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    # make sure the last coordinate is genuinely present
    k = list(rng.integers(lo, max_degree + 1, d))
    k[-1] = int(rng.integers(1, max_degree + 1))
    terms[tuple(int(x) for x in k)] = complex(rng.standard_normal(), rng.standard_normal()) / math.sqrt(2.0)
    return TrigPoly(terms)
