"""Domain types for marked flat tori, quadratic differentials, and curve classes.

The torus with modulus tau = tau1 + i*tau2 (tau2 > 0) is C / (Z + Z*tau).
The first lattice generator is pinned to 1, so the flat area of the torus
equals tau2.

A homotopy class of orientation-preserving maps between two marked tori is
recorded by its action on first homology: an integer matrix B with
det B = +1, together with the unique affine representative
A(z) = a*z + b*conj(z) that sends the source generators onto their marked
images,

    A(1)   = B11 + B21*tau',
    A(tau) = B12 + B22*tau'.

Translations are dropped throughout; every quantity computed from a map in
this package depends only on its linear part, because constant quadratic
differentials are translation invariant.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

Matrix2 = tuple[tuple[int, int], tuple[int, int]]

IDENTITY_MARKING: Matrix2 = ((1, 0), (0, 1))


class MarkingError(ValueError):
    """Marking matrix or affine representative violates orientation constraints."""


class ToleranceError(ArithmeticError):
    """A quantity missed a hard numerical tolerance; indicates an internal fault.

    Carries the offending measurement so front ends can report the value, the
    bound, and where the check lives.
    """

    def __init__(self, where: str, measured: float, bound: float, message: str = ""):
        self.where = where
        self.measured = measured
        self.bound = bound
        detail = message or "tolerance exceeded"
        super().__init__(
            f"{where}: {detail} (measured {measured:.6e}, bound {bound:.6e})"
        )


class CrossCheckError(ToleranceError):
    """Two independent computations of the same quantity disagree."""


def canonical_sqrt(c: complex) -> complex:
    """Square root of c with Im >= 0, ties broken by Re > 0 (so sqrt(1) = 1)."""
    z = cmath.sqrt(c)
    if z.imag < 0.0 or (z.imag == 0.0 and z.real < 0.0):
        z = -z
    return z


@dataclass(frozen=True)
class UpperHalfPoint:
    """Point tau1 + i*tau2 of the upper half plane; the modulus of a marked torus."""

    tau1: float
    tau2: float

    def __post_init__(self):
        if not self.tau2 > 0.0:
            raise ValueError(f"tau2 must be positive, got {self.tau2}")

    @property
    def as_complex(self) -> complex:
        return complex(self.tau1, self.tau2)

    @property
    def area(self) -> float:
        """Flat area of the torus C/(Z + Z*tau) with unit first generator."""
        return self.tau2


@dataclass(frozen=True)
class TorusQuadDiff:
    """Constant quadratic differential c*dz^2 on the torus with modulus tau."""

    c: complex
    tau: UpperHalfPoint

    def __post_init__(self):
        if self.c == 0:
            raise ValueError("quadratic differential coefficient must be nonzero")
        object.__setattr__(self, "c", complex(self.c))

    def scaled(self, factor: complex) -> "TorusQuadDiff":
        return TorusQuadDiff(self.c * factor, self.tau)

    def __neg__(self) -> "TorusQuadDiff":
        return TorusQuadDiff(-self.c, self.tau)


@dataclass(frozen=True)
class CurveClass:
    """Homology class of the straight closed curve from 0 to p + q*tau."""

    p: int
    q: int

    def __post_init__(self):
        if self.p == 0 and self.q == 0:
            raise ValueError("curve class (0, 0) is trivial")

    def lattice_vector(self, tau: UpperHalfPoint) -> complex:
        return self.p + self.q * tau.as_complex


@dataclass(frozen=True)
class LinearFoliation:
    """Foliation with leaves ker Im(x*dz) and transverse measure |Im(x*dz)|.

    x and -x describe the same foliation; instances store the canonical
    representative with Im x > 0 (Re x > 0 when x is real).  It is the
    horizontal foliation of the differential x^2*dz^2.
    """

    x: complex
    tau: UpperHalfPoint

    def __post_init__(self):
        if self.x == 0:
            raise ValueError("foliation direction must be nonzero")
        x = complex(self.x)
        if x.imag < 0.0 or (x.imag == 0.0 and x.real < 0.0):
            x = -x
        object.__setattr__(self, "x", x)

    @property
    def differential(self) -> TorusQuadDiff:
        return TorusQuadDiff(self.x * self.x, self.tau)


def foliation_of_diff(phi: TorusQuadDiff) -> LinearFoliation:
    """Horizontal foliation of phi = c*dz^2, as the canonical square root of c."""
    return LinearFoliation(canonical_sqrt(phi.c), phi.tau)


@dataclass(frozen=True)
class MarkedTorusMap:
    """Homotopy class of maps between marked tori with its affine representative.

    B is the induced matrix on first homology (det B = +1) and
    A(z) = a*z + b*conj(z) the affine representative.  Orientation
    preservation with finite dilatation requires |a| > |b|.
    """

    B: Matrix2
    tau: UpperHalfPoint
    tau_prime: UpperHalfPoint
    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if not abs(self.a) > abs(self.b):
            raise MarkingError(
                "degenerate/orientation-reversing affine representative"
            )

    def apply(self, z: complex) -> complex:
        """Evaluate the (linear part of the) affine representative."""
        return self.a * z + self.b * z.conjugate()

    @property
    def dilatation(self) -> float:
        """Quasiconformal constant K = (|a|+|b|)/(|a|-|b|) >= 1."""
        na, nb = abs(self.a), abs(self.b)
        return (na + nb) / (na - nb)

    @property
    def beltrami(self) -> complex:
        """Beltrami coefficient mu = b/a of the affine representative."""
        return self.b / self.a

    def curve_image(self, gamma: CurveClass) -> CurveClass:
        """Image homology class B * (p, q)."""
        (b11, b12), (b21, b22) = self.B
        return CurveClass(b11 * gamma.p + b12 * gamma.q, b21 * gamma.p + b22 * gamma.q)


def _det2(B: Matrix2) -> int:
    return B[0][0] * B[1][1] - B[0][1] * B[1][0]


def _as_matrix2(B) -> Matrix2:
    rows = tuple(tuple(int(x) for x in row) for row in B)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValueError("marking matrix must be 2x2")
    for row, orig in zip(rows, B):
        for x, y in zip(row, orig):
            if x != y:
                raise ValueError("marking matrix entries must be integers")
    return rows  # type: ignore[return-value]


def parse_marked_map(B, tau: UpperHalfPoint, tau_prime: UpperHalfPoint) -> MarkedTorusMap:
    """Build the marked map for matrix B between the tori tau and tau_prime.

    Solves A(1) = B11 + B21*tau', A(tau) = B12 + B22*tau' for the affine
    coefficients:

        a = (w2 - w1*conj(tau)) / (tau - conj(tau)),
        b = (w1*tau - w2) / (tau - conj(tau)).

    Raises MarkingError for det B != 1 or a degenerate representative.
    """
    B = _as_matrix2(B)
    if _det2(B) != 1:
        raise MarkingError("not an orientation-preserving marking")
    t = tau.as_complex
    tp = tau_prime.as_complex
    w1 = B[0][0] + B[1][0] * tp
    w2 = B[0][1] + B[1][1] * tp
    denom = t - t.conjugate()  # 2i * tau2
    a = (w2 - w1 * t.conjugate()) / denom
    b = (w1 * t - w2) / denom
    return MarkedTorusMap(B=B, tau=tau, tau_prime=tau_prime, a=a, b=b)


def compose_maps(f2: MarkedTorusMap, f1: MarkedTorusMap) -> MarkedTorusMap:
    """Composite marked map f2 after f1; markings multiply, affine parts compose."""
    if f1.tau_prime != f2.tau:
        raise ValueError("target torus of f1 must equal source torus of f2")
    (p11, p12), (p21, p22) = f2.B
    (q11, q12), (q21, q22) = f1.B
    B = (
        (p11 * q11 + p12 * q21, p11 * q12 + p12 * q22),
        (p21 * q11 + p22 * q21, p21 * q12 + p22 * q22),
    )
    # A2(A1(z)) = (a2*a1 + b2*conj(b1)) z + (a2*b1 + b2*conj(a1)) conj(z)
    a = f2.a * f1.a + f2.b * f1.b.conjugate()
    b = f2.a * f1.b + f2.b * f1.a.conjugate()
    return MarkedTorusMap(B=B, tau=f1.tau, tau_prime=f2.tau_prime, a=a, b=b)


def inverse_map(f: MarkedTorusMap) -> MarkedTorusMap:
    """Inverse marked map; B inverts over Z and A inverts as a real-linear map."""
    (b11, b12), (b21, b22) = f.B
    Binv = ((b22, -b12), (-b21, b11))
    d = abs(f.a) ** 2 - abs(f.b) ** 2
    return MarkedTorusMap(
        B=Binv,
        tau=f.tau_prime,
        tau_prime=f.tau,
        a=f.a.conjugate() / d,
        b=-f.b / d,
    )


def linear_matrix(f: MarkedTorusMap):
    """Real 2x2 matrix of z -> a*z + b*conj(z) acting on (Re z, Im z)."""
    ar, ai = f.a.real, f.a.imag
    br, bi = f.b.real, f.b.imag
    return ((ar + br, bi - ai), (ai + bi, ar - br))


# ---------------------------------------------------------------------------
# JSON encoding.  Complex numbers travel as [re, im] pairs; marked maps as
# {"tau": [t1, t2], "tau_prime": [t1, t2], "B": [[..], [..]]}.
# ---------------------------------------------------------------------------


def complex_to_pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def pair_to_complex(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def tau_to_pair(tau: UpperHalfPoint) -> list[float]:
    return [tau.tau1, tau.tau2]


def tau_from_pair(pair) -> UpperHalfPoint:
    t1, t2 = pair
    return UpperHalfPoint(float(t1), float(t2))


def map_to_json(f: MarkedTorusMap) -> dict:
    return {
        "tau": tau_to_pair(f.tau),
        "tau_prime": tau_to_pair(f.tau_prime),
        "B": [list(row) for row in f.B],
    }


def map_from_json(obj: dict) -> MarkedTorusMap:
    try:
        tau = tau_from_pair(obj["tau"])
        tau_prime = tau_from_pair(obj["tau_prime"])
        B = obj["B"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid marked-map record: {exc}") from exc
    return parse_marked_map(B, tau, tau_prime)
