"""Discrete closed 1-forms on a torus grid and the Dirichlet principle.

Chart convention, fixed once and used by every formula below: the torus with
modulus tau is parameterized by (x, y) in [0,1)^2 through z = x + tau*y.  The
flat metric pulled back to the chart is

    G = [[1,    tau1     ],
         [tau1, |tau|^2  ]],     sqrt(det G) = tau2,

so a 1-form alpha = P dx + Q dy has Dirichlet energy

    E(alpha) = sum over cells of (P, Q) G^{-1} (P, Q)^T * tau2 / N^2.

The grid has N x N cells indexed (i, j) along (x, y).  Forms are stored as
periods plus a potential,

    P = h1 + N * (F[i+1, j] - F[i, j]),
    Q = h2 + N * (F[i, j+1] - F[i, j]),

with F a periodic vertex potential, which makes discrete closedness (zero
plaquette curl) structural rather than checked, and makes the row sums of
P/N and column sums of Q/N reproduce (h1, h2) exactly by telescoping.

The periods are the heights of the two generator curves, and the realizing
holomorphic differential x^2 dz^2 has Im(x * 1) = h1, Im(x * tau) = h2.  For
this constant-coefficient metric the harmonic minimizer is the constant form
and the minimum equals the norm of the realizing differential exactly, at
every grid resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ToleranceError, TorusQuadDiff, UpperHalfPoint

CG_TOL = 1e-12
DIRECT_SOLVE_MAX_N = 8
CLOSEDNESS_TOL = 1e-9


def metric_weights(tau: UpperHalfPoint) -> np.ndarray:
    """G^{-1} * tau2 for the chart z = x + tau*y."""
    t1, t2 = tau.tau1, tau.tau2
    ginv = np.array([[t1 * t1 + t2 * t2, -t1], [-t1, 1.0]]) / (t2 * t2)
    return ginv * t2


@dataclass(frozen=True, eq=False)
class GridOneForm:
    """Closed 1-form P dx + Q dy on the N x N torus grid.

    Stored as periods (h1, h2) plus a mean-zero periodic vertex potential, so
    every instance is closed by construction.
    """

    n: int
    tau: UpperHalfPoint
    h1: float
    h2: float
    potential: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("grid resolution must be at least 1")
        if self.potential is not None:
            pot = np.asarray(self.potential, dtype=float)
            if pot.shape != (self.n, self.n):
                raise ValueError(f"potential must have shape ({self.n}, {self.n})")
            if not np.all(np.isfinite(pot)):
                raise ValueError("potential must be finite")
            pot = pot - pot.mean()
            object.__setattr__(self, "potential", pot)

    @property
    def periods(self) -> tuple[float, float]:
        return (self.h1, self.h2)

    @property
    def P(self) -> np.ndarray:
        out = np.full((self.n, self.n), float(self.h1))
        if self.potential is not None:
            F = self.potential
            out = out + self.n * (np.roll(F, -1, axis=0) - F)
        return out

    @property
    def Q(self) -> np.ndarray:
        out = np.full((self.n, self.n), float(self.h2))
        if self.potential is not None:
            F = self.potential
            out = out + self.n * (np.roll(F, -1, axis=1) - F)
        return out

    def is_constant(self, tol: float = 0.0) -> bool:
        if self.potential is None:
            return True
        P, Q = self.P, self.Q
        return max(np.ptp(P), np.ptp(Q)) <= tol


def grid_energy(form: GridOneForm) -> float:
    """Dirichlet energy sum (P,Q) G^{-1} (P,Q)^T * tau2 / N^2 over the cells."""
    M = metric_weights(form.tau)
    P, Q = form.P, form.Q
    dens = M[0, 0] * P * P + 2.0 * M[0, 1] * P * Q + M[1, 1] * Q * Q
    return float(dens.sum()) / (form.n * form.n)


def realizing_differential(periods, tau: UpperHalfPoint) -> TorusQuadDiff:
    """Holomorphic differential x^2 dz^2 whose generator heights are the periods.

    Solves Im(x * 1) = h1 and Im(x * tau) = h2.
    """
    h1, h2 = float(periods[0]), float(periods[1])
    if h1 == 0.0 and h2 == 0.0:
        raise ValueError("periods must not both vanish")
    x = complex((h2 - h1 * tau.tau1) / tau.tau2, h1)
    return TorusQuadDiff(x * x, tau)


# ---------------------------------------------------------------------------
# Weighted Laplacian and solvers for the potential part.
# ---------------------------------------------------------------------------


def _dx(F: np.ndarray) -> np.ndarray:
    return np.roll(F, -1, axis=0) - F


def _dy(F: np.ndarray) -> np.ndarray:
    return np.roll(F, -1, axis=1) - F


def _dx_t(g: np.ndarray) -> np.ndarray:
    return np.roll(g, 1, axis=0) - g


def _dy_t(g: np.ndarray) -> np.ndarray:
    return np.roll(g, 1, axis=1) - g


def _laplacian(F: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Apply the metric-weighted graph Laplacian (SPD on mean-zero potentials)."""
    gx = M[0, 0] * _dx(F) + M[0, 1] * _dy(F)
    gy = M[0, 1] * _dx(F) + M[1, 1] * _dy(F)
    return _dx_t(gx) + _dy_t(gy)


def _cg(apply_op, b: np.ndarray, tol: float, max_iter: int):
    """Conjugate gradients for the SPD operator, mean projected out throughout."""
    b = b - b.mean()
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = float(np.sqrt((b * b).sum()))
    if bnorm == 0.0:
        return x, 0, 0.0
    p = r.copy()
    rs = float((r * r).sum())
    for it in range(1, max_iter + 1):
        Ap = apply_op(p)
        alpha = rs / float((p * Ap).sum())
        x += alpha * p
        r -= alpha * Ap
        rs_new = float((r * r).sum())
        if np.sqrt(rs_new) <= tol * bnorm:
            x -= x.mean()
            return x, it, float(np.sqrt(rs_new) / bnorm)
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise ToleranceError(
        "dirichlet.cg",
        measured=float(np.sqrt(rs) / bnorm),
        bound=tol,
        message="conjugate gradients did not converge",
    )


def _direct_solve(apply_op, b: np.ndarray):
    """Dense least-squares fallback for small grids (null space: constants)."""
    n2 = b.size
    A = np.empty((n2, n2))
    basis = np.zeros_like(b)
    flat = basis.reshape(-1)
    for k in range(n2):
        flat[k] = 1.0
        A[:, k] = apply_op(basis).reshape(-1)
        flat[k] = 0.0
    sol, *_ = np.linalg.lstsq(A, (b - b.mean()).reshape(-1), rcond=None)
    F = sol.reshape(b.shape)
    F -= F.mean()
    res = apply_op(F) - (b - b.mean())
    bnorm = float(np.sqrt(((b - b.mean()) ** 2).sum()))
    rel = float(np.sqrt((res * res).sum())) / bnorm if bnorm > 0 else 0.0
    return F, 0, rel


def _solve_potential(b: np.ndarray, M: np.ndarray, n: int):
    op = lambda F: _laplacian(F, M)
    if n <= DIRECT_SOLVE_MAX_N:
        return _direct_solve(op, b)
    return _cg(op, b, CG_TOL, max_iter=20 * n * n)


@dataclass(frozen=True)
class HarmonicResult:
    form: GridOneForm
    energy: float
    iterations: int
    residual: float


def harmonic_minimize(periods, tau: UpperHalfPoint, n: int) -> HarmonicResult:
    """Minimize the Dirichlet energy over closed forms with the given periods.

    The minimization runs over the potential part; for this flat
    constant-coefficient metric the right-hand side of the normal equations
    vanishes by telescoping, the minimizer is the constant form, and the
    minimum equals the norm of the realizing differential exactly rather than
    asymptotically in n.
    """
    h1, h2 = float(periods[0]), float(periods[1])
    if h1 == 0.0 and h2 == 0.0:
        raise ValueError("periods must not both vanish")
    M = metric_weights(tau)
    # stationarity over the potential: N * laplacian(F) = -div_M(p, q); the
    # right-hand side is the weighted divergence of a constant field,
    # identically zero on the periodic grid.
    p = np.full((n, n), h1)
    q = np.full((n, n), h2)
    b = -(_dx_t(M[0, 0] * p + M[0, 1] * q) + _dy_t(M[0, 1] * p + M[1, 1] * q)) / n
    F, iterations, residual = _solve_potential(b, M, n)
    form = GridOneForm(n=n, tau=tau, h1=h1, h2=h2, potential=F)
    return HarmonicResult(
        form=form, energy=grid_energy(form), iterations=iterations, residual=residual
    )


def dirichlet_gap(form: GridOneForm) -> float:
    """Energy excess of the form over the harmonic minimum for its periods.

    Nonnegative, zero exactly for the constant representative; by discrete
    Hodge orthogonality it equals the energy of the exact (potential) part.
    """
    energy = grid_energy(form)
    minimum = harmonic_minimize(form.periods, form.tau, form.n).energy
    gap = energy - minimum
    if gap < 0.0:
        bound = 1e-12 * max(1.0, energy)
        if -gap > bound:
            raise ToleranceError(
                "dirichlet.dirichlet_gap",
                measured=gap,
                bound=bound,
                message="energy fell below the harmonic minimum",
            )
        gap = 0.0
    return gap


def exact_part_energy(form: GridOneForm) -> float:
    """Energy of the potential part alone (periods stripped)."""
    if form.potential is None:
        return 0.0
    stripped = GridOneForm(
        n=form.n, tau=form.tau, h1=0.0, h2=0.0, potential=form.potential
    )
    return grid_energy(stripped)


# ---------------------------------------------------------------------------
# Pushforward under a marked torus map.
# ---------------------------------------------------------------------------


def pushforward_energy(form: GridOneForm, f) -> float:
    """Energy of the form pushed forward under the affine representative of f.

    In chart coordinates the affine representative acts by the marking matrix
    B, so the pushforward has coefficients (P, Q) B^{-1} at the mapped point;
    the change of variables (det B = 1) turns the target-energy integral into
    a cell sum against the modified weights B^{-1} G'^{-1} B^{-T} * tau2'.
    """
    if form.tau != f.tau:
        raise ValueError("form does not live on the source torus of f")
    (b11, b12), (b21, b22) = f.B
    binv = np.array([[b22, -b12], [-b21, b11]], dtype=float)
    M = binv @ metric_weights(f.tau_prime) @ binv.T
    P, Q = form.P, form.Q
    dens = M[0, 0] * P * P + 2.0 * M[0, 1] * P * Q + M[1, 1] * Q * Q
    return float(dens.sum()) / (form.n * form.n)


def pushforward_energy_bound(form: GridOneForm, f, slack: float = 1e-10) -> bool:
    """True iff pushforward energy <= K * source energy within slack.

    K is the dilatation of f.  False flags a bug: the bound is how a
    quasiconformal map can distort the Dirichlet energy, at worst.
    """
    return pushforward_energy(form, f) <= f.dilatation * grid_energy(form) + slack


# ---------------------------------------------------------------------------
# Component-wise construction and delimited I/O.
# ---------------------------------------------------------------------------


def form_from_components(P, Q, tau: UpperHalfPoint) -> GridOneForm:
    """Rebuild the (periods + potential) representation from raw coefficients.

    Verifies discrete closedness (plaquette curl) and equality of the per-row
    and per-column period sums, then recovers the potential by a weighted
    Poisson solve and checks the reconstruction residual.
    """
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape or P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("P and Q must be equal square arrays")
    n = P.shape[0]
    scale = max(1.0, float(np.max(np.abs(P))), float(np.max(np.abs(Q))))
    curl = (np.roll(P, -1, axis=1) - P) - (np.roll(Q, -1, axis=0) - Q)
    if np.max(np.abs(curl)) > CLOSEDNESS_TOL * scale:
        raise ValueError("coefficients are not discretely closed")
    row_periods = P.mean(axis=0)   # one value per y row
    col_periods = Q.mean(axis=1)   # one value per x column
    if np.ptp(row_periods) > CLOSEDNESS_TOL * scale or np.ptp(col_periods) > CLOSEDNESS_TOL * scale:
        raise ValueError("period sums differ between rows/columns")
    h1 = float(P.mean())
    h2 = float(Q.mean())
    M = metric_weights(tau)
    p, q = P - h1, Q - h2
    b = (_dx_t(M[0, 0] * p + M[0, 1] * q) + _dy_t(M[0, 1] * p + M[1, 1] * q)) / n
    F, _, _ = _solve_potential(b, M, n)
    form = GridOneForm(n=n, tau=tau, h1=h1, h2=h2, potential=F)
    err = max(float(np.max(np.abs(form.P - P))), float(np.max(np.abs(form.Q - Q))))
    if err > 1e-8 * scale:
        raise ValueError("coefficients do not come from a closed grid form")
    return form


def form_to_rows(form: GridOneForm) -> list[tuple[int, float, float]]:
    """Rows (cell index, P, Q) with cell index = i*N + j for cell (i, j)."""
    P, Q = form.P, form.Q
    n = form.n
    return [(i * n + j, float(P[i, j]), float(Q[i, j])) for i in range(n) for j in range(n)]


def form_from_rows(rows, n: int, tau: UpperHalfPoint) -> GridOneForm:
    """Inverse of form_to_rows; every cell index must appear exactly once."""
    P = np.full((n, n), np.nan)
    Q = np.full((n, n), np.nan)
    for idx, p, q in rows:
        idx = int(idx)
        i, j = divmod(idx, n)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"cell index {idx} out of range for n={n}")
        P[i, j], Q[i, j] = float(p), float(q)
    if np.any(np.isnan(P)) or np.any(np.isnan(Q)):
        raise ValueError("missing cells in form rows")
    return form_from_components(P, Q, tau)
