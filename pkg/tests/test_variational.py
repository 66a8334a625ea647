import numpy as np
import pytest

from flatheights.core import TorusQuadDiff, UpperHalfPoint, parse_marked_map
from flatheights.cylinders import ChainMap, CylinderChain, DeclaredBound, load_chain_spec
from flatheights.torus import heights_map, qd_norm, ratio
from flatheights.variational import (
    GAUGES,
    BeltramiPath,
    a_of_t,
    h_of_t,
    h_prime,
    path_point,
    torus_path_report,
)

TAU_I = UpperHalfPoint(0.0, 1.0)
I2 = ((1, 0), (0, 1))


def h_closed_form(mu: complex, t: float, q: TorusQuadDiff) -> float:
    """Independent oracle: h(t) = tau2 * |s + t*conj(mu)*conj(s)|^2 / (1 - t^2|mu|^2)."""
    s = np.sqrt(complex(q.c))
    num = abs(s + t * mu.conjugate() * s.conjugate()) ** 2
    return q.tau.tau2 * num / (1.0 - (t * abs(mu)) ** 2)


class TestPathPoint:
    def test_t_zero_is_identity(self):
        p = path_point(BeltramiPath(0.3 + 0.1j, 0.0, TAU_I))
        assert p.tau_t == TAU_I
        assert p.g_t.a == 1.0 and p.g_t.b == 0.0

    def test_real_mu_on_square_torus(self):
        for mu in (0.1, 0.3, 0.7):
            for t in (0.25, 0.5, 1.0):
                p = path_point(BeltramiPath(mu, t, TAU_I))
                expected = (1.0 - t * mu) / (1.0 + t * mu)
                assert p.tau_t.tau1 == pytest.approx(0.0, abs=1e-15)
                assert p.tau_t.tau2 == pytest.approx(expected, rel=1e-14)

    def test_round_trip_through_inverse_beltrami(self):
        # path at t = 1 with the Beltrami coefficient of f^{-1} lands on the
        # source torus of f, for identity-marked maps
        rng = np.random.default_rng(167)
        for _ in range(50):
            tau = UpperHalfPoint(rng.uniform(-1, 1), rng.uniform(0.5, 2))
            tp = UpperHalfPoint(rng.uniform(-1, 1), rng.uniform(0.5, 2))
            f = parse_marked_map(I2, tau, tp)
            mu_inv = -f.b / f.a.conjugate()  # Beltrami coefficient of f^{-1}
            p = path_point(BeltramiPath(mu_inv, 1.0, tp))
            assert p.tau_t.tau1 == pytest.approx(tau.tau1, abs=1e-12)
            assert p.tau_t.tau2 == pytest.approx(tau.tau2, rel=1e-12)

    def test_endpoint_dilatation(self):
        rng = np.random.default_rng(173)
        for _ in range(50):
            mu = complex(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6))
            if abs(mu) >= 0.9:
                continue
            p = path_point(BeltramiPath(mu, 1.0, TAU_I))
            expected = (1.0 + abs(mu)) / (1.0 - abs(mu))
            assert p.g_t.B == I2
            assert p.g_t.dilatation == pytest.approx(expected, rel=1e-10)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            BeltramiPath(1.0, 0.5, TAU_I)
        with pytest.raises(ValueError):
            BeltramiPath(0.5, 1.5, TAU_I)


class TestHofT:
    def test_starts_at_the_norm(self):
        q = TorusQuadDiff(2.0 - 1.0j, TAU_I)
        assert h_of_t(BeltramiPath(0.4, 0.0, TAU_I), q) == qd_norm(q)

    def test_constant_for_conformal_path(self):
        q = TorusQuadDiff(1.0 + 0.5j, TAU_I)
        vals = [h_of_t(BeltramiPath(0.0, t, TAU_I), q) for t in (0.0, 0.3, 0.8, 1.0)]
        assert max(vals) - min(vals) == 0.0

    def test_matches_closed_form(self):
        rng = np.random.default_rng(179)
        for _ in range(100):
            tau = UpperHalfPoint(rng.uniform(-1, 1), rng.uniform(0.5, 2))
            mu = complex(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
            if abs(mu) >= 0.9:
                continue
            q = TorusQuadDiff(complex(rng.normal(), rng.normal()), tau)
            t = rng.uniform(0.0, 1.0)
            got = h_of_t(BeltramiPath(mu, t, tau), q)
            want = h_closed_form(mu, t, q)
            assert got == pytest.approx(want, rel=1e-12)

    def test_endpoint_matches_torus_engine_ratio(self):
        q = TorusQuadDiff(-1.0, TAU_I)
        mu = 0.25
        path = BeltramiPath(mu, 1.0, TAU_I)
        g1 = path_point(path).g_t
        assert h_of_t(path, q) == pytest.approx(ratio(g1, q) * qd_norm(q), rel=1e-14)
        assert h_of_t(path, q) == pytest.approx(qd_norm(heights_map(g1, q)), rel=1e-14)

    def test_rejects_wrong_surface(self):
        with pytest.raises(ValueError):
            h_of_t(BeltramiPath(0.1, 0.5, TAU_I), TorusQuadDiff(1.0, UpperHalfPoint(0, 2)))


class TestHPrime:
    def test_zero_for_conformal_path(self):
        res = h_prime(BeltramiPath(0.0, 0.5, TAU_I), TorusQuadDiff(1.0, TAU_I))
        assert res.analytic == 0.0
        assert res.numeric == pytest.approx(0.0, abs=1e-12)

    def test_worked_value(self):
        # mu = 0.3, q = dz^2, tau = i, t = 1/2:
        # h(t) = (1 + 0.3 t)^2 / (1 - 0.09 t^2), h'(1/2) = 0.7935/0.9555^2...
        res = h_prime(BeltramiPath(0.3, 0.5, TAU_I), TorusQuadDiff(1.0, TAU_I))
        expected = (0.6 * 1.15 * 0.9775 + 0.18 * 0.5 * 1.15**2) / 0.9775**2
        assert res.analytic == pytest.approx(expected, rel=1e-12)
        assert res.discrepancy <= 1e-5

    def test_analytic_matches_numeric_all_gauges(self):
        rng = np.random.default_rng(181)
        for _ in range(50):
            tau = UpperHalfPoint(rng.uniform(-1, 1), rng.uniform(0.5, 2))
            mu = complex(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4))
            q = TorusQuadDiff(complex(rng.normal(), rng.normal()), tau)
            t = rng.uniform(0.05, 0.95)
            values = []
            for gauge in GAUGES:
                res = h_prime(BeltramiPath(mu, t, tau), q, step=1e-4, gauge=gauge)
                assert res.discrepancy <= 1e-6 * max(1.0, abs(res.numeric))
                values.append(res.analytic)
            # constant chart rescalings cancel: all gauges agree exactly
            assert max(values) - min(values) <= 1e-12 * max(1.0, abs(values[0]))

    def test_richardson_consistency(self):
        for mu in (0.1, 0.3j, 0.2 + 0.2j):
            for t in np.arange(0.1, 0.95, 0.1):
                path = BeltramiPath(mu, float(t), TAU_I)
                q = TorusQuadDiff(1.0, TAU_I)
                d1 = h_prime(path, q, step=1e-3).numeric
                d2 = h_prime(path, q, step=5e-4).numeric
                assert abs(d1 - d2) <= 1e-6

    def test_step_shrinks_near_ends(self):
        res = h_prime(BeltramiPath(0.3, 0.001, TAU_I), TorusQuadDiff(1.0, TAU_I), step=1e-3)
        assert res.step == pytest.approx(0.0005)

    def test_refuses_endpoints_and_big_steps(self):
        q = TorusQuadDiff(1.0, TAU_I)
        with pytest.raises(ValueError):
            h_prime(BeltramiPath(0.3, 0.0, TAU_I), q)
        with pytest.raises(ValueError):
            h_prime(BeltramiPath(0.3, 1.0, TAU_I), q)
        with pytest.raises(ValueError):
            h_prime(BeltramiPath(0.3, 0.5, TAU_I), q, step=0.01)


class TestPathReportTorus:
    def test_grid_and_endpoints(self):
        rep = torus_path_report(0.3, TAU_I, TorusQuadDiff(1.0, TAU_I), 11)
        assert rep.t_grid[0] == 0.0 and rep.t_grid[-1] == 1.0
        assert rep.h[0] == pytest.approx(1.0)
        assert rep.h_prime_analytic[0] is None and rep.h_prime_analytic[-1] is None
        assert all(v is not None for v in rep.h_prime_analytic[1:-1])

    def test_h_continuity(self):
        rep = torus_path_report(0.5j, TAU_I, TorusQuadDiff(-1.0, TAU_I), 101)
        jumps = np.abs(np.diff(rep.h))
        assert np.max(jumps) <= 0.05  # modulus of continuity of the closed form


class TestAofT:
    def finite_chain(self):
        chain = CylinderChain([(1, 1), (2, 1), (1, 3)])
        cmap = ChainMap([2, 3, 0.5])
        return chain, cmap

    def test_zero_at_t_zero(self):
        chain, cmap = self.finite_chain()
        rep = a_of_t(chain, cmap, None, "geometric", 1, [0.0, 0.5, 1.0])
        assert rep.a_vals[0] == 0.0

    def test_finite_chain_fully_resolved(self):
        chain, cmap = self.finite_chain()
        rep = a_of_t(chain, cmap, None, "geometric", 3, [0.0, 0.3, 0.7, 1.0])
        assert all(v == 0.0 for v in rep.a_vals)

    def test_geometric_chain_closed_form(self):
        spec = {
            "generator": {
                "a": "1", "b": "2^-n", "lambda": "2",
                "sup": 2, "sup_attained": True, "inf": 2, "inf_attained": True,
                "total_norm": 1,
            }
        }
        chain, cmap, w = load_chain_spec(spec)
        for n_max in (3, 6, 10):
            rep = a_of_t(chain, cmap, w, "geometric", n_max, [0.0, 0.5, 1.0])
            for t, val in zip(rep.t_grid, rep.a_vals):
                expected = (2.0**t - 1.0) * 2.0**-n_max  # tail of w*a*b*(2^t - 1)
                assert val == pytest.approx(expected, rel=1e-10, abs=1e-15)

    def test_gaps_shrink_with_prefix_length(self):
        spec = {
            "generator": {
                "a": "1", "b": "2^-n", "lambda": "2",
                "sup": 2, "sup_attained": True, "inf": 2, "inf_attained": True,
                "total_norm": 1,
            }
        }
        chain, cmap, w = load_chain_spec(spec)
        grids = [a_of_t(chain, cmap, w, "geometric", n, [0.5, 1.0]).a_vals for n in (2, 4, 8)]
        for earlier, later in zip(grids, grids[1:]):
            assert all(l <= e for e, l in zip(earlier, later))

    def test_properties_hold_on_mixed_chain(self):
        chain = CylinderChain(a_rule="1", b_rule="3^-n")
        cmap = ChainMap(
            rule="2-1/(n+1)",
            declared_sup=DeclaredBound(2, "not-attained"),
            declared_inf=DeclaredBound(1, "attained"),
        )
        rep = a_of_t(chain, cmap, None, "geometric", 5, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0])
        assert rep.a_vals[0] == 0.0
        for v, bound in zip(rep.a_vals, rep.bounds):
            assert 0.0 <= v <= bound + 1e-12
        assert list(rep.a_vals) == sorted(rep.a_vals)

    def test_rejects_other_interpolations(self):
        chain, cmap = self.finite_chain()
        with pytest.raises(ValueError):
            a_of_t(chain, cmap, None, "linear", 3, [0.0, 1.0])

    def test_identity_map_gives_zero_bound_and_gap(self):
        chain = CylinderChain([(1, 1), (2, 3)])
        rep = a_of_t(chain, ChainMap([1, 1]), None, "geometric", 1, [0.0, 0.5, 1.0])
        assert all(v == 0.0 for v in rep.a_vals)
        assert all(b == 0.0 for b in rep.bounds)

    def test_merge_with_torus_report(self):
        chain, cmap = self.finite_chain()
        grid = [0.0, 0.5, 1.0]
        chain_rep = a_of_t(chain, cmap, None, "geometric", 3, grid)
        torus_rep = torus_path_report(0.2, TAU_I, TorusQuadDiff(1.0, TAU_I), grid)
        merged = torus_rep.merged_with(chain_rep)
        assert merged.h is not None and merged.a_vals is not None
