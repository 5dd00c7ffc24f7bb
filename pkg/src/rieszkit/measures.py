"""Measures on the circle, Poisson extensions and Poisson-product chains.

A :class:`CircleMeasure` is a finite sum of point masses plus a
trigonometric-polynomial density against ``dtheta / 2pi``, so every Fourier
coefficient is exact.  On the infinite torus the module works with Poisson
products ``f_d(chi) = prod_{j <= d} P(chi_j, z_j)`` attached to a point ``z``
of the infinite polydisc, and with product measures whose factors carry
analytic densities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .circle import DEFAULT_POINTS, AnalyticPoly, CircleGrid, DilatedSamples, norm_l1, norm_l1_diff
from .lemma import check_adjusted_lemma
from .torus import Estimate, TorusSampler, TrigPoly, abschnitt, chain_reconstruct, norm_lp

ANALYTIC_DEPTH = 64
ANALYTIC_TOL = 1e-10
FUBINI_TOL = 1e-9


def default_radii(n: int = 7) -> np.ndarray:
    """``1 - 2^-k`` for ``k = 1..n``; Poisson kernels at these radii resolve on 4096 nodes."""
    return 1.0 - 2.0 ** -np.arange(1, n + 1)


def poisson_kernel(chi, z):
    """``(1 - |z|^2) / |chi - z|^2`` for ``chi`` on the circle and ``|z| < 1``.

    ``|chi - z|^2`` is expanded with ``|chi| = 1`` so that ``z = 0`` gives 1 exactly.
    """
    z = np.asarray(z, dtype=complex)
    az2 = np.abs(z) ** 2
    return (1.0 - az2) / (1.0 - 2.0 * (np.conj(np.asarray(chi, dtype=complex)) * z).real + az2)


# -- measures on the circle -------------------------------------------------------

@dataclass(frozen=True)
class CircleMeasure:
    atoms: tuple = ()
    density: TrigPoly = field(default_factory=TrigPoly)

    def __post_init__(self):
        atoms = tuple((float(t) % (2 * math.pi), complex(w)) for t, w in self.atoms)
        angles = [t for t, _ in atoms]
        if len(set(angles)) != len(angles):
            raise ValueError("atom angles must be distinct")
        object.__setattr__(self, "atoms", atoms)
        if not isinstance(self.density, TrigPoly):
            object.__setattr__(self, "density", TrigPoly(self.density))
        if self.density.dimension > 1:
            raise ValueError("density must be a one-variable trigonometric polynomial")

    @classmethod
    def point_mass(cls, theta: float = 0.0, weight: complex = 1.0) -> "CircleMeasure":
        return cls(atoms=((theta, weight),))

    @classmethod
    def from_density(cls, coeffs: dict) -> "CircleMeasure":
        """Density ``sum_n coeffs[n] e^{i n theta}``."""
        return cls(density=TrigPoly({(n,): c for n, c in coeffs.items()}))

    def density_coefficient(self, k: int) -> complex:
        return self.density.coefficient((k,))

    def total_variation(self, M: int = DEFAULT_POINTS) -> float:
        dens = norm_lp(self.density, 1.0, TorusSampler(1, "grid", M)) if self.density.terms else 0.0
        return float(sum(abs(w) for _, w in self.atoms) + dens)

    # text format: "atoms n", n lines "theta re im", "density", then TrigPoly lines
    def to_text(self) -> str:
        lines = [f"atoms {len(self.atoms)}"]
        lines += [f"{t!r} {w.real!r} {w.imag!r}" for t, w in self.atoms]
        lines.append("density")
        return "\n".join(lines) + "\n" + self.density.to_text()

    @classmethod
    def from_text(cls, text: str) -> "CircleMeasure":
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines or not lines[0].startswith("atoms"):
            raise ValueError("measure file must start with 'atoms n'")
        n = int(lines[0].split()[1])
        atoms = []
        for ln in lines[1:1 + n]:
            t, re, im = ln.split()
            atoms.append((float(t), complex(float(re), float(im))))
        rest = lines[1 + n:]
        if not rest or rest[0] != "density":
            raise ValueError("expected a 'density' line after the atoms")
        return cls(tuple(atoms), TrigPoly.from_text("\n".join(rest[1:])))

    @classmethod
    def read(cls, path) -> "CircleMeasure":
        return cls.from_text(Path(path).read_text())


def fourier_coefficient(mu: CircleMeasure, k: int) -> complex:
    """``int e^{-ik theta} dmu``; exact for atoms plus a polynomial density."""
    atoms = sum(w * complex(math.cos(k * t), -math.sin(k * t)) for t, w in mu.atoms)
    return complex(atoms) + mu.density_coefficient(k)


def analytic_residual(mu: CircleMeasure, K: int = ANALYTIC_DEPTH) -> float:
    if K < 1:
        raise ValueError("K must be at least 1")
    return max(abs(fourier_coefficient(mu, -k)) for k in range(1, K + 1))


def is_analytic(mu: CircleMeasure, K: int = ANALYTIC_DEPTH, tol: float = ANALYTIC_TOL) -> bool:
    return analytic_residual(mu, K) <= tol


def poisson_extension(mu: CircleMeasure, z):
    """Harmonic extension of ``mu`` to the open disc, evaluated at ``z`` (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("Poisson extension is defined on the open unit disc only")
    out = np.zeros_like(z)
    for t, w in mu.atoms:
        out = out + w * poisson_kernel(np.exp(1j * t), z)
    for (k,), c in ((kk.padded(1), a) for kk, a in mu.density.terms.items()):
        out = out + c * (z ** k if k >= 0 else np.conj(z) ** (-k))
    return out if out.ndim else complex(out)


def extension_samples(mu: CircleMeasure, r: float, M: int = DEFAULT_POINTS) -> DilatedSamples:
    grid = CircleGrid(float(r), M)
    return DilatedSamples(grid, np.asarray(poisson_extension(mu, grid.points)).reshape(M))


@dataclass
class FMRieszReport:
    analytic: bool
    radii: np.ndarray
    norms: np.ndarray
    total_variation: float
    increments: np.ndarray
    bounds: np.ndarray
    recovered_error: float | None = None
    recovered: np.ndarray | None = field(default=None, repr=False)

    @property
    def fubini_ok(self) -> bool:
        return bool(np.all(self.norms <= self.total_variation + FUBINI_TOL))

    @property
    def bounds_hold(self) -> np.ndarray:
        return self.increments <= self.bounds + 1e-8 * (1.0 + self.bounds)

    @property
    def min_increment(self) -> float:
        return float(self.increments.min()) if self.increments.size else 0.0


def fm_riesz_demo(mu: CircleMeasure, radii: Sequence[float] | None = None, M: int = DEFAULT_POINTS,
                  K: int = ANALYTIC_DEPTH, contrast: bool | None = None) -> FMRieszReport:
    """Follow ``f_r = P[mu]`` along increasing radii.

    For analytic ``mu`` the consecutive increments obey the dilation bound
    and the limit samples are obtained by polynomial extrapolation in ``r``
    to ``r = 1``; their Fourier coefficients are compared with those of
    ``mu`` for ``|k| <= K``.  In contrast mode (non-analytic ``mu`` such as a
    point mass) only the increments are reported.
    """
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[0] < 0 or radii[-1] >= 1:
        raise ValueError("radii must be strictly increasing in [0, 1)")
    if contrast is None:
        contrast = not is_analytic(mu, K)
    samples = [extension_samples(mu, r, M) for r in radii]
    norms = np.array([norm_l1(s) for s in samples])
    inc = np.array([norm_l1_diff(a, b) for a, b in zip(samples, samples[1:])])
    bounds = np.array([2.0 * math.sqrt(max(nb - na, 0.0) * (nb + na)) for na, nb in zip(norms, norms[1:])])
    report = FMRieszReport(not contrast, radii, norms, mu.total_variation(M), inc, bounds)
    if not contrast:
        values = np.array([s.values for s in samples])
        # fixed node order: the weights are otherwise computed from a random permutation
        limit = BarycentricInterpolator(radii, values, axis=0, rng=0)(1.0)
        coeffs = np.fft.fft(limit) / M
        ks = np.arange(-K, K + 1)
        want = np.array([fourier_coefficient(mu, int(k)) for k in ks])
        got = coeffs[ks % M]
        report.recovered = limit
        report.recovered_error = float(np.max(np.abs(got - want)))
    return report


# -- points of the infinite polydisc ---------------------------------------------------

@dataclass(frozen=True)
class PolydiscPoint:
    """A point ``z = (z_1, z_2, ...)`` given by finitely many coordinates or a tail rule.

    Rules: ``finite`` (``coords`` then zeros), ``geometric`` (``z_j = c q^j``)
    and ``power`` (``z_j = c (j + shift)^(-a)``).
    """

    rule: str = "finite"
    coords: tuple = ()
    c: float = 1.0
    q: float = 0.5
    a: float = 1.0
    shift: float = 1.0

    def __post_init__(self):
        if self.rule not in ("finite", "geometric", "power"):
            raise ValueError(f"unknown rule {self.rule!r}")
        object.__setattr__(self, "coords", tuple(complex(x) for x in self.coords))
        if any(abs(x) >= 1 for x in self.coords):
            raise ValueError("coordinates must lie in the open unit disc")

    @classmethod
    def finite(cls, coords) -> "PolydiscPoint":
        return cls("finite", tuple(coords))

    @classmethod
    def geometric(cls, c: float = 1.0, q: float = 0.5) -> "PolydiscPoint":
        return cls("geometric", c=c, q=q)

    @classmethod
    def power(cls, c: float = 1.0, a: float = 1.0, shift: float = 1.0) -> "PolydiscPoint":
        return cls("power", c=c, a=a, shift=shift)

    def coord(self, j: int) -> complex:
        """``z_j`` with 1-based ``j``."""
        if j < 1:
            raise ValueError("coordinates are 1-based")
        if self.rule == "finite":
            return self.coords[j - 1] if j <= len(self.coords) else 0j
        if self.rule == "geometric":
            v = complex(self.c * self.q ** j)
        else:
            v = complex(self.c * (j + self.shift) ** (-self.a))
        if abs(v) >= 1:
            raise ValueError(f"z_{j} = {v} is not in the open unit disc")
        return v

    def materialize(self, n: int) -> np.ndarray:
        return np.array([self.coord(j) for j in range(1, n + 1)], dtype=complex)

    @property
    def classification(self) -> str:
        """Membership read off the closed form of the rule: ``l1``, ``l2-not-l1`` or ``not-l2``."""
        if self.rule == "finite" or self.c == 0:
            return "l1"
        if self.rule == "geometric":
            return "l1" if abs(self.q) < 1 else "not-l2"
        if self.a > 1:
            return "l1"
        if self.a > 0.5:
            return "l2-not-l1"
        return "not-l2"


@dataclass(frozen=True)
class PoissonChain:
    point: PolydiscPoint
    depth: int

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")

    @property
    def z(self) -> np.ndarray:
        return self.point.materialize(self.depth + 1)

    def __call__(self, d: int, chi):
        """``f_d(chi) = prod_{j <= d} P(chi_j, z_j)`` for ``chi`` of shape ``(..., >= d)``."""
        chi = np.asarray(chi, dtype=complex)
        out = np.ones(chi.shape[:-1])
        for j in range(d):
            out = out * poisson_kernel(chi[..., j], self.point.coord(j + 1))
        return out

    def sup(self, d: int) -> float:
        """``sup_chi f_d = prod (1 + |z_j|) / (1 - |z_j|)``."""
        z = np.abs(self.point.materialize(d))
        return float(np.prod((1 + z) / (1 - z)))

    def chain_residual(self, d: int, n_points: int = 100, M: int = DEFAULT_POINTS, seed: int = 0) -> float:
        """Max ``|mean over chi_{d+1} of f_{d+1} - f_d|`` at random points of the torus."""
        rng = np.random.default_rng(seed)
        chi = np.exp(2j * np.pi * rng.random((n_points, d)))
        nodes = CircleGrid(1.0, M).unit_points
        full = np.concatenate([np.repeat(chi[:, None, :], M, axis=1),
                               np.broadcast_to(nodes[None, :, None], (n_points, M, 1))], axis=2)
        avg = self(d + 1, full).mean(axis=1)
        return float(np.max(np.abs(avg - self(d, chi))))

    def norm_l1(self, d: int, M: int = DEFAULT_POINTS) -> float:
        """``||f_d||_1`` as a product of one-variable quadratures (each factor is positive)."""
        nodes = CircleGrid(1.0, M).unit_points
        return float(np.prod([poisson_kernel(nodes, self.point.coord(j)).mean() for j in range(1, d + 1)]))


def poisson_chain(z: PolydiscPoint, D: int) -> PoissonChain:
    return PoissonChain(z, D)


def chain_increment_l1(z: PolydiscPoint, d: int, M: int = DEFAULT_POINTS) -> float:
    """``||f_{d+1} - f_d||_1 = ||P(., z_{d+1}) - 1||_{L1(T)}`` by one-variable quadrature.

    ``f_{d+1} - f_d = f_d (P_{d+1} - 1)`` with ``f_d >= 0`` of unit mass and
    independent of ``chi_{d+1}``, so the integral factors.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    nodes = CircleGrid(1.0, M).unit_points
    return float(np.mean(np.abs(poisson_kernel(nodes, z.coord(d + 1)) - 1.0)))


def chain_increment_mc(z: PolydiscPoint, d: int, N: int = 2 ** 18, seed: int = 0) -> Estimate:
    """Direct Monte Carlo estimate of ``||f_{d+1} - f_d||_1`` on ``T^(d+1)``."""
    gen = np.random.Generator(np.random.Philox(key=seed))
    chi = np.exp(2j * np.pi * gen.random((N, d + 1)))
    chain = PoissonChain(z, d + 1)
    diff = np.abs(chain(d + 1, chi) - chain(d, chi))
    return Estimate(float(diff.mean()), float(diff.std(ddof=1)) / math.sqrt(N))


@dataclass
class PolydiscDiagnostics:
    classification: str
    l1_partial: np.ndarray
    l2_partial: np.ndarray
    increments: np.ndarray
    log_sup_products: np.ndarray

    @property
    def expects_bounded_products(self) -> bool:
        return self.classification == "l1"

    @property
    def expects_l1_limit(self) -> bool:
        return self.classification in ("l1", "l2-not-l1")


def polydisc_diagnostics(z: PolydiscPoint, depth: int, M: int = DEFAULT_POINTS) -> PolydiscDiagnostics:
    """Partial l1/l2 sums, chain increments and log sup of the partial Poisson products.

    The classification comes from the closed form of the tail rule; the
    truncated numerics are reported alongside, never used to decide it.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    az = np.abs(z.materialize(depth))
    return PolydiscDiagnostics(
        classification=z.classification,
        l1_partial=np.cumsum(az),
        l2_partial=np.sqrt(np.cumsum(az ** 2)),
        increments=np.array([chain_increment_l1(z, d, M) for d in range(1, depth)]),
        log_sup_products=np.cumsum(np.log1p(az) - np.log1p(-az)),
    )


# -- product measures on the infinite torus ------------------------------------------

def _shift(density: TrigPoly, j: int) -> TrigPoly:
    """Move a one-variable polynomial to coordinate ``j`` (1-based)."""
    return TrigPoly({(0,) * (j - 1) + (k.padded(1)[0],): a for k, a in density.terms.items()})


@dataclass
class ProductDemoReport:
    limits: list
    chain_ok: bool
    chain_failed_at: int | None
    slice_violations: int
    slices_checked: int
    norms: dict
    total_variation: float
    convergence: dict

    @property
    def fubini_ok(self) -> bool:
        return all(v <= self.total_variation + 3 * getattr(v, "stderr", 0.0) + FUBINI_TOL
                   for v in self.norms.values())


def product_measure_demo(factors: Sequence[CircleMeasure], radii: Sequence[float] | None = None,
                         n_slices: int = 64, seed: int = 0, M: int = 256) -> ProductDemoReport:
    """Run the slice construction for ``mu = mu_1 x mu_2 x ...`` with analytic density factors.

    ``F(chi, z, d) = P[mu](chi_1 z, ..., chi_d z, 0, ...)``; each factor beyond
    ``d`` contributes its total mass.  The per-slice polynomial
    ``z -> F(chi, z, d)`` is checked against the square-root dilation bound
    on consecutive radii, the limits ``f_d`` are formed as trigonometric
    polynomials and tested for the chain property.
    """
    D = len(factors)
    if D < 1:
        raise ValueError("need at least one factor")
    for mu in factors:
        if mu.atoms or not mu.density.is_analytic:
            raise ValueError("factors must be analytic densities")
    radii = default_radii(5) if radii is None else np.asarray(radii, dtype=float)
    masses = [fourier_coefficient(mu, 0) for mu in factors]
    tail = [complex(np.prod(masses[d:])) for d in range(D + 1)]

    def limit(d):
        out = TrigPoly({(): tail[d]})
        for j in range(1, d + 1):
            out = out * _shift(factors[j - 1].density, j)
        return out

    def dilated(d, r):
        out = TrigPoly({(): tail[d]})
        for j in range(1, d + 1):
            dens = factors[j - 1].density
            out = out * TrigPoly({(j - 1) * (0,) + (k.padded(1)[0],): a * r ** k.padded(1)[0]
                                    for k, a in dens.terms.items()})
        return out

    limits = [limit(d) for d in range(1, D + 1)]
    chain = chain_reconstruct(limits, atol=1e-12)

    rng = np.random.default_rng(seed)
    viol = checked = 0
    for d in range(1, D + 1):
        chi = np.exp(2j * np.pi * rng.random((n_slices, d)))
        for x in chi:
            f = AnalyticPoly([tail[d]])
            for j in range(d):
                c = np.array([factors[j].density.coefficient((k,)) for k in
                              range(factors[j].density.max_abs_degree() + 1)])
                f = f * AnalyticPoly(c * x[j] ** np.arange(len(c)))
            for r, rho in zip(radii, radii[1:]):
                rep = check_adjusted_lemma(f, r, rho, max(M, 2 * (f.degree + 1)))
                viol += not rep.holds_adjusted
                checked += 1

    total = float(np.prod([mu.total_variation() for mu in factors]))
    norms, conv = {}, {}
    for d in range(1, D + 1):
        sampler = TorusSampler.auto(d, 1.0, limits[-1].max_abs_degree())
        for r in radii:
            norms[(d, float(r))] = norm_lp(dilated(d, r), 1.0, sampler)
            conv[(d, float(r))] = norm_lp(limits[d - 1] - dilated(d, r), 1.0, sampler)
    return ProductDemoReport(limits, chain.ok, chain.failed_at, viol, checked, norms, total, conv)
