"""Blaschke factorization ``f = g h`` on a disc of radius rho, traced step by step.

Given a polynomial ``f`` and a radius ``rho`` with no zero of ``f`` on the
circle ``|z| = rho``, the zeros ``alpha_n`` inside the disc define

    B(z) = prod_n rho (alpha_n - z) / (rho^2 - conj(alpha_n) z),

which is unimodular on ``|z| = rho``.  The quotient ``F = f / B`` does not
vanish on the closed disc, so it has a square root there, and
``g = B F^(1/2)``, ``h = F^(1/2)`` satisfy ``f = g h``.  The functions ``g``
and ``h`` are only ever held as samples on circles of radius ``r`` and
``rho``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .circle import (
    DEFAULT_POINTS,
    AnalyticPoly,
    CircleGrid,
    DilatedSamples,
    as_poly,
    evaluate,
    norm_l1,
    norm_l1_diff,
    norm_l2,
)

DELTA_CIRCLE = 1e-6
RHO_NUDGE = 1e-4
TOL_ABS = 1e-8
TOL_REL = 1e-8
# aliasing of a function analytic out to radius s, sampled on radius rho with
# M nodes, is of order (rho / s)^M; pick M so this is below exp(-ALIAS_EXPONENT)
ALIAS_EXPONENT = 38.0
MAX_POINTS = 2 ** 21


class ZeroOnCircleError(ValueError):
    """A zero of ``f`` sits (numerically) on the circle ``|z| = rho``.

    ``suggested_rho`` is the nudged radius a caller should retry with.
    """

    def __init__(self, rho: float, root: complex, message: str | None = None):
        self.rho = rho
        self.root = root
        self.suggested_rho = rho + RHO_NUDGE
        super().__init__(message or f"zero {root} lies within {DELTA_CIRCLE} of |z| = {rho}; perturb rho")


class NotFactorizableError(ValueError):
    """The sampled function winds around the origin, so no continuous square root exists."""

    def __init__(self, winding: int):
        self.winding = winding
        super().__init__(f"phase winds {winding} times around 0; a zero was missed inside the circle")


class ChainViolation(AssertionError):
    def __init__(self, step: "Step"):
        self.step = step
        super().__init__(f"step {step.name} violated: lhs={step.lhs!r} rhs={step.rhs!r} slack={step.slack!r}")


# -- roots -------------------------------------------------------------------

def _horner_with_derivative(c: np.ndarray, z: np.ndarray):
    p = np.full_like(z, c[-1])
    dp = np.zeros_like(z)
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _aberth(c: np.ndarray, z: np.ndarray, maxiter: int = 500):
    n = len(z)
    eye = np.eye(n, dtype=bool)
    for it in range(maxiter):
        p, dp = _horner_with_derivative(c, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = p / dp
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            inv = 1.0 / diff
            inv[eye] = 0.0
            w = ratio / (1.0 - ratio * inv.sum(axis=1))
        w[p == 0] = 0.0
        if not np.all(np.isfinite(w)):
            return z, False
        z = z - w
        if np.all(np.abs(w) <= 4e-16 * np.maximum(1.0, np.abs(z))):
            return z, True
    return z, False


def _newton_polish(c: np.ndarray, z: np.ndarray, steps: int = 3) -> np.ndarray:
    for _ in range(steps):
        p, dp = _horner_with_derivative(c, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - p / dp
        pc, _ = _horner_with_derivative(c, np.where(np.isfinite(cand), cand, z))
        better = np.isfinite(cand) & (np.abs(pc) < np.abs(p))
        z = np.where(better, cand, z)
    return z


def polynomial_roots(f: AnalyticPoly, radius: float = 1.0, seed: int = 0x5EED) -> np.ndarray:
    """All roots of ``f`` (with multiplicity) by Aberth-Ehrlich iteration.

    Initial guesses are randomly perturbed points on the circle of the given
    radius.  Converged roots are Newton-polished against the original
    coefficients; if the iteration stalls the companion-matrix eigenvalues
    are used instead.
    """
    f = f.trim()
    if f.is_zero():
        raise ValueError("the zero polynomial has no isolated roots")
    c = np.asarray(f.coeffs)
    n_origin = int(np.flatnonzero(c)[0])
    c = c[n_origin:]
    n = len(c) - 1
    roots = [np.zeros(n_origin, dtype=complex)]
    if n > 0:
        rng = np.random.default_rng(seed)
        angles = 2 * np.pi * (np.arange(n) + rng.uniform(0.1, 0.9, n)) / n
        rad = radius * (1.0 + 0.05 * rng.uniform(-1, 1, n))
        z0 = rad * np.exp(1j * (angles + 0.4))
        z, ok = _aberth(c, z0)
        if not ok:
            z = np.roots(c[::-1]).astype(complex)
        roots.append(_newton_polish(c, z))
    out = np.concatenate(roots)
    return out[np.lexsort((np.angle(out), np.abs(out)))]


def find_zeros(f: AnalyticPoly, rho: float, delta_circle: float = DELTA_CIRCLE) -> np.ndarray:
    """Zeros of ``f`` in the open disc ``|z| < rho``, repeated by multiplicity.

    Raises :class:`ZeroOnCircleError` if some zero is within ``delta_circle``
    of the circle ``|z| = rho``.
    """
    f = as_poly(f)
    roots = polynomial_roots(f, radius=rho)
    gap = np.abs(np.abs(roots) - rho)
    if roots.size and gap.min() < delta_circle:
        raise ZeroOnCircleError(rho, complex(roots[np.argmin(gap)]))
    return roots[np.abs(roots) < rho]


# -- Blaschke product ---------------------------------------------------------

@dataclass(frozen=True)
class BlaschkeProduct:
    zeros: tuple
    rho: float

    def __post_init__(self):
        object.__setattr__(self, "zeros", tuple(complex(a) for a in self.zeros))
        if not 0.0 < self.rho < 1.0 + 1e-12:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        for a in self.zeros:
            if abs(a) >= self.rho:
                raise ValueError(f"zero {a} is not inside |z| < {self.rho}")

    def __call__(self, z):
        return blaschke_eval(self, z)

    @property
    def m(self) -> int:
        return len(self.zeros)


def blaschke_eval(B: BlaschkeProduct, z):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    rho = B.rho
    for a in B.zeros:
        out = out * (rho * (a - z)) / (rho * rho - np.conj(a) * z)
    return out if out.ndim else complex(out)


# -- square root branch ---------------------------------------------------------

def winding_number(values: np.ndarray) -> int:
    """Number of turns the closed sampled curve makes around 0."""
    v = np.asarray(values, dtype=complex)
    phase = np.unwrap(np.angle(np.append(v, v[:1])))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


def sqrt_branch(values, anchor: complex | None = None) -> np.ndarray:
    """Continuous square root of non-vanishing samples along a closed circle.

    The phase is unwrapped along the circle and halved.  The branch is the
    principal root at the first sample, unless ``anchor`` is given, in which
    case the sign is chosen so that the first root is the one nearer to it.
    """
    v = np.asarray(values, dtype=complex)
    if np.any(v == 0):
        raise ValueError("cannot take a continuous square root through zero")
    phase = np.unwrap(np.angle(np.append(v, v[:1])))
    winding = int(round((phase[-1] - phase[0]) / (2 * np.pi)))
    if winding:
        raise NotFactorizableError(winding)
    w = np.sqrt(np.abs(v)) * np.exp(0.5j * phase[:-1])
    if anchor is not None and abs(w[0] - anchor) > abs(w[0] + anchor):
        w = -w
    return w


def continue_sqrt(func, start: float, stop: float, w_start: complex, n: int = 64) -> complex:
    """Carry the square root ``w_start`` of ``func(start)`` along the real segment to ``stop``."""
    if start == stop:
        return w_start
    while True:
        t = np.linspace(start, stop, n + 1).astype(complex)
        phase = np.unwrap(np.angle(func(t)))
        if np.max(np.abs(np.diff(phase))) < np.pi / 8 or n >= 1 << 20:
            break
        n *= 4
    half = 0.5 * (phase[-1] - phase[0])
    w_end = np.sqrt(abs(func(t[-1:])[0])) * np.exp(1j * (np.angle(w_start) + half))
    return complex(w_end)


# -- factorization ----------------------------------------------------------------

@dataclass(frozen=True)
class Factorization:
    f: AnalyticPoly
    blaschke: BlaschkeProduct
    r: float
    rho: float
    M: int
    f_r: DilatedSamples = field(repr=False)
    f_rho: DilatedSamples = field(repr=False)
    g_r: DilatedSamples = field(repr=False)
    g_rho: DilatedSamples = field(repr=False)
    h_r: DilatedSamples = field(repr=False)
    h_rho: DilatedSamples = field(repr=False)
    winding: tuple
    boundary_defect: float

    @property
    def residual(self) -> float:
        """``max |f - g h| / max |f|`` over both sampled circles."""
        scale = max(np.abs(self.f_r.values).max(), np.abs(self.f_rho.values).max())
        err = max(np.abs(self.f_r.values - self.g_r.values * self.h_r.values).max(),
                  np.abs(self.f_rho.values - self.g_rho.values * self.h_rho.values).max())
        return float(err / scale) if scale > 0 else float(err)


def _quotient_factors(f: AnalyticPoly, rho: float, delta_circle: float):
    """Leading coefficient, outer roots and inner zeros describing ``F = f / B``."""
    f = f.trim()
    if f.degree == 0:
        return complex(f.coeffs[0]), np.zeros(0, complex), np.zeros(0, complex)
    roots = polynomial_roots(f, radius=rho)
    gap = np.abs(np.abs(roots) - rho)
    if gap.min() < delta_circle:
        raise ZeroOnCircleError(rho, complex(roots[np.argmin(gap)]))
    inner = roots[np.abs(roots) < rho]
    outer = roots[np.abs(roots) >= rho]
    return complex(f.coeffs[-1]), outer, inner


def _eval_quotient(lead, outer, inner, rho, z):
    # F(z) = lead * prod_outer (z - beta) * prod_inner (conj(alpha) z - rho^2) / rho
    out = np.full_like(z, lead)
    for b in outer:
        out = out * (z - b)
    for a in inner:
        out = out * ((np.conj(a) * z - rho * rho) / rho)
    return out


def resolution_for(outer, inner, rho: float, M: int) -> int:
    """Smallest power-of-two refinement of ``M`` resolving ``F`` on ``|z| = rho``."""
    sing = [abs(b) for b in outer] + [rho * rho / abs(a) for a in inner if a != 0]
    if not sing:
        return M
    ratio = min(sing) / rho
    need = ALIAS_EXPONENT / math.log(ratio) if ratio > 1 else math.inf
    if need <= M:
        return M
    if need > MAX_POINTS:
        raise ZeroOnCircleError(
            rho, complex(min(list(outer) + list(inner), key=lambda x: abs(abs(x) - rho))),
            f"a zero is too close to |z| = {rho} for {MAX_POINTS}-point quadrature; perturb rho")
    return 1 << math.ceil(math.log2(need))


def factorize(f, rho: float, r: float = 0.0, M: int = DEFAULT_POINTS,
              delta_circle: float = DELTA_CIRCLE, adaptive: bool = False) -> Factorization:
    """Sample ``f``, ``g = B F^(1/2)`` and ``h = F^(1/2)`` on the circles ``r`` and ``rho``.

    With ``adaptive`` the node count is raised (powers of two) when a zero of
    ``F`` lies so close to the circle that ``M`` nodes would alias.
    """
    f = as_poly(f).trim()
    if f.is_zero():
        raise ValueError("f must not vanish identically")
    if not 0.0 <= r <= rho:
        raise ValueError(f"need 0 <= r <= rho, got r={r}, rho={rho}")
    lead, outer, inner = _quotient_factors(f, rho, delta_circle)
    if adaptive:
        M = resolution_for(outer, inner, rho, M)
    B = BlaschkeProduct(tuple(inner), rho)

    def quotient(z):
        return _eval_quotient(lead, outer, inner, rho, z)

    samples = {}
    windings = []
    anchor = None
    for name, rad in (("rho", rho), ("r", r)):
        grid = CircleGrid(float(rad), M)
        z = grid.points
        Fz = quotient(z)
        windings.append(winding_number(Fz))
        hz = sqrt_branch(Fz, anchor)
        if anchor is None:
            # same analytic branch on the inner circle: continue along [r, rho]
            anchor = continue_sqrt(quotient, float(rho), float(r), complex(hz[0]))
        Bz = blaschke_eval(B, z)
        samples[name] = (
            DilatedSamples(grid, np.asarray(evaluate(f, z)).reshape(M)),
            DilatedSamples(grid, Bz * hz),
            DilatedSamples(grid, hz),
            Bz,
        )
    defect = float(np.max(np.abs(np.abs(samples["rho"][3]) - 1.0)))
    return Factorization(
        f=f, blaschke=B, r=float(r), rho=float(rho), M=M,
        f_r=samples["r"][0], f_rho=samples["rho"][0],
        g_r=samples["r"][1], g_rho=samples["rho"][1],
        h_r=samples["r"][2], h_rho=samples["rho"][2],
        winding=tuple(windings[::-1]), boundary_defect=defect,
    )


# -- the traced inequality chain ------------------------------------------------

@dataclass(frozen=True)
class Step:
    """One link ``lhs <= rhs`` (or ``lhs == rhs`` when ``kind == "eq"``)."""

    name: str
    lhs: float
    rhs: float
    kind: str = "le"

    @property
    def slack(self) -> float:
        if self.kind == "eq":
            return -abs(self.rhs - self.lhs)
        return self.rhs - self.lhs

    def holds(self, tol_abs: float = TOL_ABS, tol_rel: float = TOL_REL) -> bool:
        return self.slack >= -(tol_abs + tol_rel * max(abs(self.lhs), abs(self.rhs)))


STEP_GROUPS = {
    "a": ("a_triangle",),
    "b": ("b_cauchy_schwarz",),
    "c": ("c_orthogonality_g", "c_orthogonality_h"),
    "d": ("d_combined",),
    "e": ("e_endpoint_g", "e_endpoint_h", "e_cauchy_schwarz_r", "e_conclusion"),
}


@dataclass
class FactorizationTrace:
    r: float
    rho: float
    norms: dict
    steps: list
    winding_check: int
    rho_requested: float | None = None
    M: int = DEFAULT_POINTS
    boundary_defect: float = 0.0
    residual: float = 0.0
    tol_abs: float = TOL_ABS
    tol_rel: float = TOL_REL

    @property
    def violations(self) -> list:
        return [s for s in self.steps if not s.holds(self.tol_abs, self.tol_rel)]

    @property
    def ok(self) -> bool:
        return not self.violations and self.winding_check == 0

    def step(self, name: str) -> Step:
        for s in self.steps:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"r = {self.r!r}", f"rho = {self.rho!r}"]
        if self.rho_requested is not None and self.rho_requested != self.rho:
            lines.append(f"rho_requested = {self.rho_requested!r}")
        lines += [f"M = {self.M}", f"winding_check = {self.winding_check}",
                  f"boundary_defect = {self.boundary_defect!r}", f"residual = {self.residual!r}"]
        lines += [f"{k} = {v!r}" for k, v in self.norms.items()]
        lines += [f"step {s.name} {s.lhs!r} {s.rhs!r} {s.slack!r}" for s in self.steps]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FactorizationTrace":
        kv, steps = {}, []
        for line in text.splitlines():
            if not line.strip():
                continue
            if line.startswith("step "):
                _, name, lhs, rhs, _slack = line.split()
                kind = "eq" if name.startswith(("e_endpoint",)) else "le"
                steps.append(Step(name, float(lhs), float(rhs), kind))
            else:
                k, v = (t.strip() for t in line.split("=", 1))
                kv[k] = v
        norms = {k: float(v) for k, v in kv.items() if k.startswith("norm_")}
        return cls(
            r=float(kv["r"]), rho=float(kv["rho"]), norms=norms, steps=steps,
            winding_check=int(kv["winding_check"]),
            rho_requested=float(kv.get("rho_requested", kv["rho"])),
            M=int(kv["M"]), boundary_defect=float(kv["boundary_defect"]),
            residual=float(kv["residual"]),
        )


def _sqrt0(x: float) -> float:
    return math.sqrt(max(x, 0.0))


def chain_steps(fz: Factorization) -> list:
    """Evaluate every link of the bound on ``||f_r - f_rho||_1`` from the samples."""
    f_r, f_rho = fz.f_r, fz.f_rho
    g_r, g_rho, h_r, h_rho = fz.g_r.values, fz.g_rho.values, fz.h_r.values, fz.h_rho.values

    lhs = norm_l1_diff(f_r, f_rho)
    split = float(np.mean(np.abs(g_r * h_r - g_rho * h_r)) + np.mean(np.abs(g_rho * h_r - g_rho * h_rho)))
    G_r, G_rho = norm_l2(fz.g_r), norm_l2(fz.g_rho)
    H_r, H_rho = norm_l2(fz.h_r), norm_l2(fz.h_rho)
    dg = float(np.sqrt(np.mean(np.abs(g_r - g_rho) ** 2)))
    dh = float(np.sqrt(np.mean(np.abs(h_r - h_rho) ** 2)))
    cs = dg * H_r + G_rho * dh
    orth_g = _sqrt0(G_rho ** 2 - G_r ** 2)
    orth_h = _sqrt0(H_rho ** 2 - H_r ** 2)
    combined_parts = (_sqrt0(G_rho ** 2 * H_r ** 2 - G_r ** 2 * H_r ** 2)
                      + _sqrt0(H_rho ** 2 * G_rho ** 2 - G_rho ** 2 * H_r ** 2))
    combined = 2.0 * _sqrt0(G_rho ** 2 * H_rho ** 2 - G_r ** 2 * H_r ** 2)
    n1_r, n1_rho = norm_l1(f_r), norm_l1(f_rho)

    return [
        Step("a_triangle", lhs, split),
        Step("b_cauchy_schwarz", split, cs),
        Step("c_orthogonality_g", dg, orth_g),
        Step("c_orthogonality_h", dh, orth_h),
        Step("d_combined", combined_parts, combined),
        Step("e_endpoint_g", G_rho ** 2, n1_rho, "eq"),
        Step("e_endpoint_h", H_rho ** 2, n1_rho, "eq"),
        Step("e_cauchy_schwarz_r", n1_r ** 2, G_r ** 2 * H_r ** 2),
        Step("e_conclusion", lhs, 2.0 * _sqrt0(n1_rho ** 2 - n1_r ** 2)),
    ], {
        "norm_g_r": G_r, "norm_g_rho": G_rho, "norm_h_r": H_r, "norm_h_rho": H_rho,
        "norm_f_r": n1_r, "norm_f_rho": n1_rho,
    }


def trace_inequality_chain(f, r: float, rho: float, M: int = DEFAULT_POINTS, *,
                           tol_abs: float = TOL_ABS, tol_rel: float = TOL_REL,
                           nudge: bool = True, max_nudges: int = 20,
                           strict: bool = True) -> FactorizationTrace:
    """Factorize ``f`` at radius ``rho`` and record each inequality of the chain.

    If a zero of ``f`` sits on the circle, ``rho`` is moved outward by
    ``RHO_NUDGE`` and the factorization retried (``nudge=True``); the trace
    records both radii.  With ``strict`` the first violated step raises
    :class:`ChainViolation`.
    """
    f = as_poly(f)
    if not 0.0 <= r <= rho < 1.0:
        raise ValueError(f"need 0 <= r <= rho < 1, got r={r}, rho={rho}")
    rho_req, cur = float(rho), float(rho)
    for _ in range(max_nudges + 1):
        try:
            fz = factorize(f, cur, r, M)
            break
        except ZeroOnCircleError as exc:
            if not nudge or exc.suggested_rho >= 1.0:
                raise
            cur = exc.suggested_rho
    else:
        raise ZeroOnCircleError(cur, complex("nan"), f"could not move rho={rho_req} off the zero set")

    steps, norms = chain_steps(fz)
    trace = FactorizationTrace(
        r=float(r), rho=cur, norms=norms, steps=steps,
        winding_check=max(abs(w) for w in fz.winding),
        rho_requested=rho_req, M=fz.M, boundary_defect=fz.boundary_defect,
        residual=fz.residual, tol_abs=tol_abs, tol_rel=tol_rel,
    )
    if strict and trace.violations:
        raise ChainViolation(trace.violations[0])
    return trace


def orthogonality_coefficient_check(fz: Factorization) -> float:
    """Largest violation of ``|b_k|^2 (r^k - rho^k)^2 <= |b_k|^2 (rho^2k - r^2k)``.

    ``b_k rho^k`` are the discrete Fourier coefficients of ``g`` on the
    rho-circle, ``0 <= k <= M/2``.  The inequality is termwise exact, so the
    return value should be ``<= 0`` up to rounding.
    """
    M = fz.M
    k = np.arange(M // 2 + 1)
    bk_scaled = np.fft.fft(fz.g_rho.values)[: M // 2 + 1] / M
    with np.errstate(under="ignore"):
        rr = np.power(fz.r / fz.rho, k) if fz.rho > 0 else np.zeros_like(k, float)
        # divide out rho^k: (r^k - rho^k)^2 / rho^2k = (q^k - 1)^2 with q = r / rho
        lhs = np.abs(bk_scaled) ** 2 * (rr - 1.0) ** 2
        rhs = np.abs(bk_scaled) ** 2 * (1.0 - rr ** 2)
    return float(np.max(lhs - rhs))
