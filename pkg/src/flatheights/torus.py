"""Heights map, extremal stretch ratio, and Teichmuller stretch maps on tori.

Everything here is closed form.  For a marked map f with affine representative
A(z) = a*z + b*conj(z) and a differential phi = c*dz^2 with square root s, the
image differential psi = x^2*dw^2 is determined by height preservation

    Im(x * A(z)) = Im(s * z)   for every lattice vector z,

whose unique solution is

    x = (conj(a)*s + conj(b)*conj(s)) / (|a|^2 - |b|^2).

The map s -> x is real linear (the heights transfer map).  Its singular
values, combined with the area ratio of the two tori, give the extremal
stretch ratio L in closed form; a dense sweep of the unit circle of
differentials plus golden-section refinement recomputes L independently and
the two routes are cross-checked on every call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CrossCheckError,
    CurveClass,
    MarkedTorusMap,
    ToleranceError,
    TorusQuadDiff,
    canonical_sqrt,
)

# Tolerance tiers: optimizer vs closed-form oracle, exact linear algebra
# identities, and plain arithmetic identities.
OPTIMIZER_TOL = 1e-8
LINALG_TOL = 1e-10
ARITHMETIC_TOL = 1e-12

GRID_SAMPLES = 1440  # dense theta sweep resolution used by extremal_ratio


@dataclass(frozen=True)
class ExtremalReport:
    """Result of the extremal stretch-ratio search over unit differentials.

    theta_star is the phase of the maximizing c = exp(i*theta); it is None for
    conformal classes (K = 1), where the maximizer is genuinely non-unique.
    branch records whether the supremum comes from the forward ratio
    |f#(phi)| / |phi| or its inverse.  sigma holds the singular values of the
    heights transfer map.  The parameter circle is compact, so the supremum is
    always attained here.
    """

    L: float
    theta_star: float | None
    branch: str  # "forward" or "inverse"
    sigma: tuple[float, float]
    attained: bool = True


@dataclass(frozen=True)
class ConjugateCheck:
    """Fitted constant c and relative residual of f#(-phi*) = -c * f#(phi*)."""

    c: float
    residual: float


def qd_norm(phi: TorusQuadDiff) -> float:
    """L1 norm of c*dz^2 on the torus tau: |c| * tau2."""
    return abs(phi.c) * phi.tau.tau2


def curve_height(phi: TorusQuadDiff, gamma: CurveClass) -> float:
    """Transverse measure of gamma against the horizontal foliation of phi.

    Equals |Im(sqrt(c) * (p + q*tau))|; zero exactly when gamma is parallel to
    the horizontal leaves.
    """
    s = canonical_sqrt(phi.c)
    return abs((s * gamma.lattice_vector(phi.tau)).imag)


def transfer(f: MarkedTorusMap, s: complex) -> complex:
    """Solve Im(x * A(z)) = Im(s * z) for x.

    The closed form x = (conj(a)*s + conj(b)*conj(s)) / (|a|^2 - |b|^2)
    inverts the real-linear relation a*x - conj(b*x) = s.  The denominator is
    the Jacobian of A, positive for every valid map, so the system is never
    singular.
    """
    d = abs(f.a) ** 2 - abs(f.b) ** 2
    return (f.a.conjugate() * s + f.b.conjugate() * s.conjugate()) / d


def transfer_matrix(f: MarkedTorusMap) -> np.ndarray:
    """Real 2x2 matrix of the heights transfer map s -> x on (Re s, Im s)."""
    d = abs(f.a) ** 2 - abs(f.b) ** 2
    ar, ai = f.a.real, f.a.imag
    br, bi = f.b.real, f.b.imag
    return np.array([[ar + br, ai - bi], [-(ai + bi), ar - br]]) / d


def heights_map(f: MarkedTorusMap, phi: TorusQuadDiff) -> TorusQuadDiff:
    """Image differential of phi under f, preserving all curve heights.

    The result is independent of the square-root branch of c: flipping s
    flips x, and the output only sees x^2.
    """
    if phi.tau != f.tau:
        raise ValueError("differential does not live on the source torus of f")
    x = transfer(f, canonical_sqrt(phi.c))
    return TorusQuadDiff(x * x, f.tau_prime)


def ratio(f: MarkedTorusMap, phi: TorusQuadDiff) -> float:
    """Norm ratio |f#(phi)| / |phi|; invariant under positive scaling of phi."""
    return qd_norm(heights_map(f, phi)) / qd_norm(phi)


def theta_sweep(f: MarkedTorusMap, samples: int = 720):
    """Ratios along the circle phi_theta = exp(i*theta)*dz^2.

    Returns (theta, ratio, inv_ratio) as float arrays.  This is the sweep
    serialized to CSV by the command-line front end.
    """
    thetas = np.arange(samples) * (2.0 * math.pi / samples)
    r = _ratio_on_circle(f, thetas)
    return thetas, r, 1.0 / r


def _ratio_on_circle(f: MarkedTorusMap, thetas: np.ndarray) -> np.ndarray:
    d = abs(f.a) ** 2 - abs(f.b) ** 2
    u = np.exp(0.5j * thetas)
    x = (np.conj(f.a) * u + np.conj(f.b) * np.conj(u)) / d
    return np.abs(x) ** 2 * (f.tau_prime.tau2 / f.tau.tau2)


def _golden_max(fun, lo: float, hi: float, iters: int = 80):
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    best_x, best_f = (x1, f1) if f1 >= f2 else (x2, f2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = fun(x1)
        if f1 > best_f:
            best_x, best_f = x1, f1
        if f2 > best_f:
            best_x, best_f = x2, f2
    return best_x, best_f


def grid_extremal_ratio(f: MarkedTorusMap, samples: int = GRID_SAMPLES) -> float:
    """Extremal stretch ratio by dense sweep plus golden-section refinement.

    The optimizer route: it knows nothing about singular values and
    generalizes to models without a closed form.  extremal_ratio cross-checks
    this value against the transfer-map computation on every call.
    """
    step = 2.0 * math.pi / samples
    thetas = np.arange(samples) * step
    r = _ratio_on_circle(f, thetas)
    g = np.maximum(r, 1.0 / r)
    k = int(np.argmax(g))

    def objective(theta: float) -> float:
        rr = float(_ratio_on_circle(f, np.array([theta]))[0])
        return max(rr, 1.0 / rr)

    _, best = _golden_max(objective, thetas[k] - step, thetas[k] + step)
    return max(best, float(g[k]))


def extremal_ratio(f: MarkedTorusMap, grid_samples: int = GRID_SAMPLES) -> ExtremalReport:
    """Extremal stretch ratio L = sup over unit differentials of max(r, 1/r).

    Computed two ways: singular values of the heights transfer map (exact),
    and a dense theta sweep with golden-section refinement (generalizes to
    models without closed form).  Disagreement beyond tolerance aborts with
    CrossCheckError since it can only mean an implementation fault.

    On a torus the forward and inverse suprema coincide (both equal the
    dilatation of the affine representative); ties are reported on the
    forward branch, and theta_star is the phase of the maximizing unit
    differential, read off the corresponding right singular vector.
    """
    if grid_samples < 720:
        raise ValueError("theta sweep needs at least 720 samples")
    T = transfer_matrix(f)
    _, sing, vt = np.linalg.svd(T)
    s1, s2 = float(sing[0]), float(sing[1])
    area_ratio = f.tau_prime.tau2 / f.tau.tau2
    forward_l = s1 * s1 * area_ratio
    inverse_l = 1.0 / (s2 * s2 * area_ratio)

    if forward_l >= inverse_l * (1.0 - ARITHMETIC_TOL):
        branch, L, v = "forward", forward_l, vt[0]
    else:
        branch, L, v = "inverse", inverse_l, vt[1]

    conformal = f.dilatation - 1.0 <= ARITHMETIC_TOL
    if conformal:
        theta_star = None
    else:
        theta_star = (2.0 * math.atan2(float(v[1]), float(v[0]))) % (2.0 * math.pi)

    grid_l = grid_extremal_ratio(f, grid_samples)
    bound = OPTIMIZER_TOL * max(1.0, L)
    if abs(grid_l - L) > bound:
        raise CrossCheckError(
            "torus.extremal_ratio",
            measured=abs(grid_l - L),
            bound=bound,
            message="grid-optimizer L disagrees with transfer-map singular values",
        )
    return ExtremalReport(L=L, theta_star=theta_star, branch=branch, sigma=(s1, s2))


def maximizing_differential(report: ExtremalReport, tau) -> TorusQuadDiff:
    """Unit differential exp(i*theta_star)*dz^2 attaining L (dz^2 when conformal)."""
    theta = 0.0 if report.theta_star is None else report.theta_star
    return TorusQuadDiff(complex(math.cos(theta), math.sin(theta)), tau)


def check_conjugate_relation(
    f: MarkedTorusMap, phi_star: TorusQuadDiff, L: float
) -> ConjugateCheck:
    """Fit c > 0 in f#(-phi*) = -c * f#(phi*) and measure the residual.

    For a maximizer phi* of the extremal ratio, c must equal 1/L^2 on the
    forward branch and L^2 on the inverse branch; a large residual would
    contradict the conjugate relation on tori and therefore flags a bug in
    the heights map.  residual = |psi_tilde + c*psi| / |psi| in L1 norms.
    """
    psi = heights_map(f, phi_star)
    psi_tilde = heights_map(f, -phi_star)
    c = (-psi_tilde.c / psi.c).real
    residual = abs(psi_tilde.c + c * psi.c) / abs(psi.c)
    return ConjugateCheck(c=c, residual=residual)


def construct_teichmuller_map(
    f: MarkedTorusMap, phi_star: TorusQuadDiff, L: float, tol: float = 1e-9
) -> MarkedTorusMap:
    """Stretch map G = chart(psi*)^(-1) o D_L o chart(phi*) for the extremal data.

    chart(phi*) is the natural parameter w = s*z with s^2 = c*, and D_L
    stretches the horizontal coordinate by L.  With x the heights-transfer
    solution for the same branch s, the composite is affine:

        G(z) = ((L+1)*s/(2x)) * z + ((L-1)*conj(s)/(2x)) * conj(z),

    its Beltrami coefficient is ((L-1)/(L+1)) * conj(c*)/|c*|, and its linear
    part must reproduce the affine representative of f; a mismatch beyond tol
    would contradict extremality on tori and raises ToleranceError.
    """
    s = canonical_sqrt(phi_star.c)
    x = transfer(f, s)
    a_g = 0.5 * (L + 1.0) * s / x
    b_g = 0.5 * (L - 1.0) * s.conjugate() / x
    mismatch = max(abs(a_g - f.a), abs(b_g - f.b))
    bound = tol * max(1.0, abs(f.a), abs(f.b))
    if mismatch > bound:
        raise ToleranceError(
            "torus.construct_teichmuller_map",
            measured=mismatch,
            bound=bound,
            message="stretch map does not reproduce the affine representative",
        )
    return MarkedTorusMap(B=f.B, tau=f.tau, tau_prime=f.tau_prime, a=a_g, b=b_g)


def quasi_invariance_check(
    f: MarkedTorusMap, phi: TorusQuadDiff, slack: float = ARITHMETIC_TOL
) -> bool:
    """True iff (1/K)|f#(phi)| <= |phi| <= K|f#(phi)| within slack.

    K is the dilatation of the affine representative.  False indicates a bug:
    the inequality is a theorem, with equality attained exactly by stretch
    maps applied to their own differential.
    """
    K = f.dilatation
    n_phi = qd_norm(phi)
    n_psi = qd_norm(heights_map(f, phi))
    return (n_psi / K - slack <= n_phi) and (n_phi <= K * n_psi + slack)


def verify_homotopic(g: MarkedTorusMap, f: MarkedTorusMap) -> bool:
    """True iff g and f are homotopic: equal marking matrices.

    On tori the homotopy class is exactly the induced action on first
    homology.  Both maps must share source and target tori.
    """
    if g.tau != f.tau or g.tau_prime != f.tau_prime:
        raise ValueError("maps must share source and target tori")
    return g.B == f.B
