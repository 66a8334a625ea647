import numpy as np
import pytest

from flatheights.core import UpperHalfPoint, parse_marked_map
from flatheights.dirichlet import (
    GridOneForm,
    dirichlet_gap,
    exact_part_energy,
    form_from_components,
    form_from_rows,
    form_to_rows,
    grid_energy,
    harmonic_minimize,
    metric_weights,
    pushforward_energy,
    pushforward_energy_bound,
    realizing_differential,
)
from flatheights.torus import qd_norm

I2 = ((1, 0), (0, 1))
TAU_I = UpperHalfPoint(0.0, 1.0)
TAU_2I = UpperHalfPoint(0.0, 2.0)


def random_tau(rng, t2lo=0.5, t2hi=2.0, t1max=1.0):
    return UpperHalfPoint(rng.uniform(-t1max, t1max), rng.uniform(t2lo, t2hi))


def random_form(rng, tau, n, amplitude=1.0):
    h1, h2 = rng.normal(size=2)
    while h1 == 0.0 and h2 == 0.0:
        h1, h2 = rng.normal(size=2)
    pot = amplitude * rng.standard_normal((n, n))
    return GridOneForm(n=n, tau=tau, h1=float(h1), h2=float(h2), potential=pot)


class TestGridEnergy:
    def test_dy_on_square_torus(self):
        form = GridOneForm(n=8, tau=TAU_I, h1=0.0, h2=1.0)
        assert grid_energy(form) == pytest.approx(1.0, abs=1e-14)

    def test_dx_on_square_torus(self):
        form = GridOneForm(n=8, tau=TAU_I, h1=1.0, h2=0.0)
        assert grid_energy(form) == pytest.approx(1.0, abs=1e-14)

    def test_dy_on_tall_torus(self):
        # G^{-1}[1,1] = 1/4 and area weight 2
        form = GridOneForm(n=8, tau=TAU_2I, h1=0.0, h2=1.0)
        assert grid_energy(form) == pytest.approx(0.5, abs=1e-14)

    def test_quadratic_scaling(self):
        rng = np.random.default_rng(97)
        form = random_form(rng, random_tau(rng), 8)
        scaled = GridOneForm(
            n=form.n, tau=form.tau, h1=3.0 * form.h1, h2=3.0 * form.h2,
            potential=None if form.potential is None else 3.0 * form.potential,
        )
        assert grid_energy(scaled) == pytest.approx(9.0 * grid_energy(form), rel=1e-12)

    def test_row_and_column_sums_reproduce_periods(self):
        rng = np.random.default_rng(101)
        form = random_form(rng, random_tau(rng), 12)
        P, Q = form.P, form.Q
        assert np.allclose(P.mean(axis=0), form.h1, atol=1e-12)
        assert np.allclose(Q.mean(axis=1), form.h2, atol=1e-12)

    def test_closedness_is_structural(self):
        rng = np.random.default_rng(103)
        form = random_form(rng, random_tau(rng), 12)
        P, Q = form.P, form.Q
        curl = (np.roll(P, -1, axis=1) - P) - (np.roll(Q, -1, axis=0) - Q)
        assert np.max(np.abs(curl)) <= 1e-10


class TestHarmonicMinimize:
    @pytest.mark.parametrize(
        "periods,expected", [((0.0, 1.0), 1.0), ((1.0, 0.0), 1.0), ((1.0, 1.0), 2.0)]
    )
    def test_square_torus_minima(self, periods, expected):
        res = harmonic_minimize(periods, TAU_I, 8)
        assert res.energy == pytest.approx(expected, abs=1e-12)
        assert res.form.is_constant(tol=1e-9)

    def test_minimum_equals_realizing_norm(self):
        rng = np.random.default_rng(107)
        for n in (4, 8, 16, 32, 64):
            tau = random_tau(rng)
            h = (float(rng.normal()), float(rng.normal()))
            res = harmonic_minimize(h, tau, n)
            assert abs(res.energy - qd_norm(realizing_differential(h, tau))) <= 1e-9

    def test_minimum_is_resolution_independent(self):
        rng = np.random.default_rng(109)
        tau = random_tau(rng)
        h = (0.7, -1.3)
        values = [harmonic_minimize(h, tau, n).energy for n in (4, 8, 16, 32, 64)]
        assert max(values) - min(values) <= 1e-9

    def test_minimizer_is_constant(self):
        rng = np.random.default_rng(113)
        for n in (4, 8, 16, 32, 64):
            res = harmonic_minimize((1.0, 2.0), random_tau(rng), n)
            P, Q = res.form.P, res.form.Q
            assert max(np.ptp(P), np.ptp(Q)) <= 1e-9

    def test_period_linearity(self):
        tau = UpperHalfPoint(0.3, 1.4)
        n = 8
        fa = harmonic_minimize((1.0, 0.0), tau, n).form
        fb = harmonic_minimize((0.0, 1.0), tau, n).form
        fc = harmonic_minimize((2.0, -3.0), tau, n).form
        combined_P = 2.0 * fa.P - 3.0 * fb.P
        combined_Q = 2.0 * fa.Q - 3.0 * fb.Q
        assert np.allclose(fc.P, combined_P, atol=1e-10)
        assert np.allclose(fc.Q, combined_Q, atol=1e-10)

    def test_rejects_zero_periods(self):
        with pytest.raises(ValueError):
            harmonic_minimize((0.0, 0.0), TAU_I, 8)


class TestDirichletGap:
    def test_constant_form_has_zero_gap(self):
        form = GridOneForm(n=8, tau=TAU_I, h1=1.0, h2=0.5)
        assert dirichlet_gap(form) == pytest.approx(0.0, abs=1e-12)

    def test_perturbed_form_has_positive_gap(self):
        rng = np.random.default_rng(127)
        for _ in range(50):
            n = int(rng.choice([4, 8, 16]))
            form = random_form(rng, random_tau(rng), n, amplitude=0.3)
            assert dirichlet_gap(form) > 0.0

    def test_gap_equals_exact_part_energy(self):
        rng = np.random.default_rng(131)
        for _ in range(50):
            form = random_form(rng, random_tau(rng), 8, amplitude=0.5)
            gap = dirichlet_gap(form)
            assert gap == pytest.approx(exact_part_energy(form), rel=1e-10, abs=1e-12)

    def test_hodge_orthogonality(self):
        # adding an exact form to the harmonic representative adds exactly
        # the energy of the exact form: the cross term vanishes
        rng = np.random.default_rng(137)
        for _ in range(20):
            tau = random_tau(rng)
            n = 8
            base = GridOneForm(n=n, tau=tau, h1=1.0, h2=-0.4)
            pot = rng.standard_normal((n, n))
            summed = GridOneForm(n=n, tau=tau, h1=1.0, h2=-0.4, potential=pot)
            dF = GridOneForm(n=n, tau=tau, h1=0.0, h2=0.0, potential=pot)
            lhs = grid_energy(summed)
            rhs = grid_energy(base) + grid_energy(dF)
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestPushforward:
    def test_identity_preserves_energy(self):
        rng = np.random.default_rng(139)
        f = parse_marked_map(I2, TAU_I, TAU_I)
        form = random_form(rng, TAU_I, 8)
        assert pushforward_energy(form, f) == pytest.approx(grid_energy(form), rel=1e-12)

    def test_vertical_stretch_halves_dy_energy(self):
        f = parse_marked_map(I2, TAU_I, TAU_2I)
        form = GridOneForm(n=8, tau=TAU_I, h1=0.0, h2=1.0)
        assert grid_energy(form) == pytest.approx(1.0, abs=1e-14)
        assert pushforward_energy(form, f) == pytest.approx(0.5, abs=1e-14)
        assert pushforward_energy_bound(form, f)

    def test_random_bound_sweep(self):
        rng = np.random.default_rng(149)
        for _ in range(1000):
            tau, tp = random_tau(rng), random_tau(rng)
            while True:
                a, b, c = (int(rng.integers(-3, 4)) for _ in range(3))
                if a != 0 and (1 + b * c) % a == 0 and abs((1 + b * c) // a) <= 3:
                    d = (1 + b * c) // a
                    break
            f = parse_marked_map(((a, b), (c, d)), tau, tp)
            form = random_form(rng, tau, 6, amplitude=0.5)
            assert pushforward_energy_bound(form, f)


class TestComponentIO:
    def test_round_trip(self):
        rng = np.random.default_rng(151)
        form = random_form(rng, UpperHalfPoint(0.2, 1.3), 8)
        rebuilt = form_from_components(form.P, form.Q, form.tau)
        assert rebuilt.h1 == pytest.approx(form.h1, abs=1e-12)
        assert rebuilt.h2 == pytest.approx(form.h2, abs=1e-12)
        assert np.allclose(rebuilt.P, form.P, atol=1e-9)
        assert np.allclose(rebuilt.Q, form.Q, atol=1e-9)

    def test_rejects_non_closed(self):
        rng = np.random.default_rng(157)
        P = rng.standard_normal((6, 6))
        Q = rng.standard_normal((6, 6))
        with pytest.raises(ValueError):
            form_from_components(P, Q, TAU_I)

    def test_rows_round_trip(self):
        rng = np.random.default_rng(163)
        form = random_form(rng, UpperHalfPoint(-0.4, 0.9), 6)
        rows = form_to_rows(form)
        assert len(rows) == 36
        rebuilt = form_from_rows(rows, 6, form.tau)
        assert np.allclose(rebuilt.P, form.P, atol=1e-9)

    def test_rows_with_missing_cell_rejected(self):
        form = GridOneForm(n=4, tau=TAU_I, h1=1.0, h2=0.0)
        rows = form_to_rows(form)[:-1]
        with pytest.raises(ValueError, match="missing cells"):
            form_from_rows(rows, 4, TAU_I)


class TestCrossEngineConsistency:
    def test_realizing_differential_heights_are_the_periods(self):
        from flatheights.core import CurveClass
        from flatheights.torus import curve_height

        rng = np.random.default_rng(167)
        for _ in range(50):
            tau = random_tau(rng)
            h1, h2 = float(rng.normal()), float(rng.normal())
            phi = realizing_differential((h1, h2), tau)
            assert curve_height(phi, CurveClass(1, 0)) == pytest.approx(abs(h1), abs=1e-12)
            assert curve_height(phi, CurveClass(0, 1)) == pytest.approx(abs(h2), abs=1e-12)

    def test_pushforward_energy_equals_image_norm(self):
        # the pushed-forward constant form is still constant, hence harmonic,
        # so its energy is exactly the norm of the heights-map image: the
        # equality case of the Dirichlet principle, across all conventions
        from flatheights.torus import heights_map, qd_norm

        rng = np.random.default_rng(173)
        for _ in range(100):
            tau, tp = random_tau(rng), random_tau(rng)
            while True:
                a, b, c = (int(rng.integers(-4, 5)) for _ in range(3))
                if a != 0 and (1 + b * c) % a == 0 and abs((1 + b * c) // a) <= 4:
                    d = (1 + b * c) // a
                    break
            f = parse_marked_map(((a, b), (c, d)), tau, tp)
            h1, h2 = float(rng.normal()), float(rng.normal())
            phi = realizing_differential((h1, h2), tau)
            form = GridOneForm(n=8, tau=tau, h1=h1, h2=h2)
            assert pushforward_energy(form, f) == pytest.approx(
                qd_norm(heights_map(f, phi)), rel=1e-10
            )


def test_metric_weights_tall_torus():
    M = metric_weights(TAU_2I)
    assert np.allclose(M, np.diag([2.0, 0.5]))


def test_realizing_differential_orientation():
    phi = realizing_differential((1.0, 0.0), TAU_I)
    # Im(x) = 1, Re(x) = 0 gives x = i and c = -1
    assert phi.c == pytest.approx(-1.0, abs=1e-15)
    phi = realizing_differential((0.0, 1.0), TAU_I)
    assert phi.c == pytest.approx(1.0, abs=1e-15)
