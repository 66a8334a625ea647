"""Constant-Beltrami paths, transported norms h(t), and truncation gaps A(t).

The path g^t is the family of affine maps with Beltrami coefficient t*mu on
the source torus, normalized so that g^t(1) = 1:

    g^t(z) = (z + t*mu*conj(z)) / (1 + t*mu).

h(t) is the norm of the heights-map image of a reference differential q.  Its
derivative has the closed integrand form

    h'(t) = 2 Re [ mu/(1 - |t*mu|^2) * (g_z / conj(g_z)) * p^t ] * area,

whose chart factor g_z/conj(g_z) depends on how g^t is normalized.  Three
standard normalizations are available behind the `gauge` flag: "fix1" pins
the image of the first lattice generator to 1 (the default), "fix1tau" pins
the image of the second generator to tau, and "area" pins the image area to
the source area.  The three divisors differ only by a constant complex
factor, and the chart factor and transported differential change in lock
step, so on tori all three gauges evaluate to the same h'(t); the central
difference of h, which is closed form and smooth, is the designated ground
truth either way, and the analytic value is validated against it rather than
the other way around.

On cylinder chains the path scales circumferences by lambda_n^t (geometric
interpolation, matching how constant-Beltrami stretching compounds), and
A(t) is the truncation gap

    A_N(t) = sum over n > N of w_n a_n b_n |lambda_n^t - 1|,

the transported mass beyond the computed prefix.  It is nonnegative, zero at
t = 0, nonincreasing in the truncation length, monotone to 0 as t -> 0, and
bounded by |q| * ((1 + t*m)/(1 - t*m) - (1 - t*m)/(1 + t*m)) with the
Beltrami norm m = (K - 1)/(K + 1) read off the extremal scale
K = max(sup lambda, 1/inf lambda).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    IDENTITY_MARKING,
    MarkedTorusMap,
    ToleranceError,
    TorusQuadDiff,
    UpperHalfPoint,
    canonical_sqrt,
)
from .torus import heights_map, qd_norm
from .cylinders import (
    ADAPTIVE_FLAT_RUN,
    ADAPTIVE_MAX_TERMS,
    ADAPTIVE_REL_TOL,
    ChainMap,
    ConeDifferential,
    CylinderChain,
    DivergenceError,
    chain_norm,
    cone_extremal,
)

GAUGES = ("fix1", "fix1tau", "area")
MAX_STEP = 1e-3


@dataclass(frozen=True)
class BeltramiPath:
    """Family g^{t*mu} on the source torus; g^0 = id, g^1 has coefficient mu."""

    mu: complex
    t: float
    source_tau: UpperHalfPoint

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        if not abs(self.mu) < 1.0:
            raise ValueError("Beltrami coefficient must satisfy |mu| < 1")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("path parameter t must lie in [0, 1]")

    def at(self, t: float) -> "BeltramiPath":
        return BeltramiPath(self.mu, t, self.source_tau)


@dataclass(frozen=True)
class PathPoint:
    tau_t: UpperHalfPoint
    g_t: MarkedTorusMap


def _gauge_divisor(mu: complex, t: float, tau: UpperHalfPoint, gauge: str) -> complex:
    """Constant divisor applied to z + t*mu*conj(z) under each normalization."""
    if gauge == "fix1":
        return 1.0 + t * mu
    if gauge == "fix1tau":
        tc = tau.as_complex
        return (tc + t * mu * tc.conjugate()) / tc
    if gauge == "area":
        return complex((1.0 - (t * abs(mu)) ** 2) ** 0.5)
    raise ValueError(f"gauge must be one of {GAUGES}")


def path_point(path: BeltramiPath) -> PathPoint:
    """Image torus and marked map at parameter t.

    The marked map is stored in the fix1 normalization (the canonical
    representative; other gauges differ by a constant rescale of the chart
    and describe the same marked torus).
    """
    d = 1.0 + path.t * path.mu
    a = 1.0 / d
    b = path.t * path.mu / d
    tau_c = path.source_tau.as_complex
    image = a * tau_c + b * tau_c.conjugate()
    tau_t = UpperHalfPoint(image.real, image.imag)
    g_t = MarkedTorusMap(
        B=IDENTITY_MARKING, tau=path.source_tau, tau_prime=tau_t, a=a, b=b
    )
    return PathPoint(tau_t=tau_t, g_t=g_t)


def h_of_t(path: BeltramiPath, q: TorusQuadDiff) -> float:
    """Norm of the transported differential at parameter t; h(0) = |q|."""
    if q.tau != path.source_tau:
        raise ValueError("differential does not live on the path's source torus")
    if path.t == 0.0 or path.mu == 0.0:
        return qd_norm(q)
    return qd_norm(heights_map(path_point(path).g_t, q))


@dataclass(frozen=True)
class HPrimeResult:
    analytic: float
    numeric: float
    discrepancy: float
    step: float


def h_prime(path: BeltramiPath, q: TorusQuadDiff, step: float = MAX_STEP,
            gauge: str = "fix1") -> HPrimeResult:
    """Derivative of h at t by the variational integrand and by central difference.

    The numeric central difference of the closed-form h is the ground truth;
    the analytic value evaluates the constant integrand in the requested
    gauge times the image area.  The step shrinks automatically near the path
    ends; t = 0 and t = 1 themselves are refused.
    """
    if not 0.0 < path.t < 1.0:
        raise ValueError("h'(t) needs t strictly inside (0, 1)")
    if not 0.0 < step <= MAX_STEP:
        raise ValueError(f"step must lie in (0, {MAX_STEP}]")
    t, mu = path.t, path.mu
    s_eff = min(step, 0.5 * t, 0.5 * (1.0 - t))

    numeric = (h_of_t(path.at(t + s_eff), q) - h_of_t(path.at(t - s_eff), q)) / (2.0 * s_eff)

    d = _gauge_divisor(mu, t, path.source_tau, gauge)
    a = 1.0 / d
    b = t * mu / d
    jac = abs(a) ** 2 - abs(b) ** 2
    area = jac * path.source_tau.tau2
    s = canonical_sqrt(q.c)
    x = (a.conjugate() * s + b.conjugate() * s.conjugate()) / jac
    denom = 1.0 - (t * abs(mu)) ** 2
    integrand = (mu / denom) * (a / a.conjugate()) * x * x
    analytic = 2.0 * integrand.real * area
    return HPrimeResult(
        analytic=analytic,
        numeric=numeric,
        discrepancy=abs(analytic - numeric),
        step=s_eff,
    )


@dataclass(frozen=True)
class PathReport:
    """Per-grid-point path data; torus-side and chain-side fields are optional.

    h carries the transported norms, h_prime_* the derivative pair (None at
    parameters where the central difference is refused), a_vals the
    truncation gaps of the chain model, and bounds the admissible ceiling for
    each A(t).
    """

    t_grid: tuple[float, ...]
    h: tuple[float, ...] | None = None
    h_prime_analytic: tuple[float | None, ...] | None = None
    h_prime_numeric: tuple[float | None, ...] | None = None
    a_vals: tuple[float, ...] | None = None
    bounds: tuple[float, ...] | None = None

    def merged_with(self, other: "PathReport") -> "PathReport":
        if self.t_grid != other.t_grid:
            raise ValueError("reports cover different parameter grids")
        pick = lambda x, y: x if x is not None else y
        return PathReport(
            t_grid=self.t_grid,
            h=pick(self.h, other.h),
            h_prime_analytic=pick(self.h_prime_analytic, other.h_prime_analytic),
            h_prime_numeric=pick(self.h_prime_numeric, other.h_prime_numeric),
            a_vals=pick(self.a_vals, other.a_vals),
            bounds=pick(self.bounds, other.bounds),
        )


def _as_grid(t_grid) -> tuple[float, ...]:
    if isinstance(t_grid, int):
        if t_grid < 2:
            raise ValueError("t grid needs at least two points")
        return tuple(i / (t_grid - 1) for i in range(t_grid))
    grid = tuple(float(t) for t in t_grid)
    if not grid:
        raise ValueError("t grid must not be empty")
    if any(not 0.0 <= t <= 1.0 for t in grid):
        raise ValueError("t grid must lie in [0, 1]")
    if list(grid) != sorted(grid):
        raise ValueError("t grid must be nondecreasing")
    return grid


def torus_path_report(mu: complex, source_tau: UpperHalfPoint, q: TorusQuadDiff,
                      t_grid, step: float = MAX_STEP, gauge: str = "fix1") -> PathReport:
    """h(t) along the path plus the analytic/numeric derivative pair."""
    grid = _as_grid(t_grid)
    path0 = BeltramiPath(mu, 0.0, source_tau)
    hs, ana, num = [], [], []
    for t in grid:
        p = path0.at(t)
        hs.append(h_of_t(p, q))
        if 0.0 < t < 1.0:
            res = h_prime(p, q, step=step, gauge=gauge)
            ana.append(res.analytic)
            num.append(res.numeric)
        else:
            ana.append(None)
            num.append(None)
    return PathReport(
        t_grid=grid,
        h=tuple(hs),
        h_prime_analytic=tuple(ana),
        h_prime_numeric=tuple(num),
    )


def _tail_gap(chain: CylinderChain, cmap: ChainMap, w: ConeDifferential | None,
              n_max: int, t: float) -> float:
    """A_N(t): transported mass sum w*a*b*|lambda^t - 1| beyond the prefix."""
    w = w or ConeDifferential()
    if chain.finite:
        start = n_max  # explicit chains are 0-based; tail starts past index n_max-1
        indices = range(start, len(chain))
        total = 0.0
        for i in indices:
            a, b = chain.cylinder(i)
            lam = float(cmap.scale(i))
            total += float(w.weight(i, chain) * a * b) * abs(lam**t - 1.0)
        return total
    total = 0.0
    flat = 0
    n = n_max + 1
    while n <= n_max + ADAPTIVE_MAX_TERMS:
        a, b = chain.cylinder(n)
        lam = float(cmap.scale(n))
        term = float(w.weight(n, chain) * a * b) * abs(lam**t - 1.0)
        total += term
        if term <= ADAPTIVE_REL_TOL * (1.0 + total):
            flat += 1
            if flat >= ADAPTIVE_FLAT_RUN:
                return total
        else:
            flat = 0
        n += 1
    raise DivergenceError("truncation-gap tail did not converge")


def a_of_t(chain: CylinderChain, cmap: ChainMap, w: ConeDifferential | None,
           interpolation: str, n_max: int, t_grid) -> PathReport:
    """Truncation-gap functional A(t) on the chain path, with its ceiling.

    Only the geometric interpolation lambda_n(t) = lambda_n^t is defined: it
    is how the dilatation of a constant-Beltrami stretch compounds in t.  The
    report is checked pointwise: A(t) >= 0 with A(0) = 0, A nondecreasing in
    t (so A -> 0 as t -> 0 along the grid), and A(t) below the ceiling
    |q| * ((1+t*m)/(1-t*m) - (1-t*m)/(1+t*m)) with m = (K-1)/(K+1) for the
    extremal scale K of the chain map.  A violation raises ToleranceError.
    """
    if interpolation != "geometric":
        raise ValueError("only the geometric interpolation lambda^t is supported")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    grid = _as_grid(t_grid)
    q_norm = float(chain_norm(chain, w))
    K = float(cone_extremal(chain, cmap, n_max).L)
    m = (K - 1.0) / (K + 1.0)

    a_vals, bounds = [], []
    for t in grid:
        gap = _tail_gap(chain, cmap, w, n_max, t)
        if m == 0.0:
            ceiling = 0.0
        else:
            tm = t * m
            ceiling = q_norm * ((1.0 + tm) / (1.0 - tm) - (1.0 - tm) / (1.0 + tm))
        a_vals.append(gap)
        bounds.append(ceiling)

    slack = 1e-12 * max(1.0, q_norm)
    for t, gap, ceiling in zip(grid, a_vals, bounds):
        if gap < -slack:
            raise ToleranceError("variational.a_of_t", gap, 0.0,
                                 "truncation gap went negative")
        if t == 0.0 and gap != 0.0:
            raise ToleranceError("variational.a_of_t", gap, 0.0,
                                 "truncation gap must vanish at t = 0")
        if gap > ceiling + slack:
            raise ToleranceError("variational.a_of_t", gap, ceiling,
                                 "truncation gap exceeds its ceiling")
    for g0, g1 in zip(a_vals, a_vals[1:]):
        if g1 < g0 - slack:
            raise ToleranceError("variational.a_of_t", g1 - g0, 0.0,
                                 "truncation gap must be nondecreasing in t")
    return PathReport(t_grid=grid, a_vals=tuple(a_vals), bounds=tuple(bounds))
