import math

import numpy as np
import pytest
from scipy import special

from hslimit.measures import Grid, mass, lp_distance
from hslimit.models import ModelSpec, PotentialSpec, PressureLaw, dissipation, flat_bottom, quadratic, zero_potential
from hslimit.rates import fit_loglog
from hslimit.stationary import (ConfigurationError, build_profile, check_support_inclusion,
                                dm_density_l1, dm_density_l1_analytic, dm_density_profile,
                                infinity_constant, profile_mass, solve_cm, stationary_profile,
                                support_threshold)

HALF_SQUARE = quadratic(1.0)  # x^2 / 2


def beta_constant(A, m, d):
    """C_m for V = A|x|^2 from omega_d (sC)^k (C/A)^(d/2) (d/2) B(d/2, k+1) = 1."""
    k, s = 1 / (m - 1), (m - 1) / m
    omega = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    factor = omega * s**k * A ** (-d / 2) * (d / 2) * special.beta(d / 2, k + 1)
    return factor ** (-1 / (k + d / 2))


class TestSolveCm:
    def test_parabola(self):
        assert solve_cm(HALF_SQUARE, 2.0, 1) == pytest.approx(3 ** (2 / 3) / 2, abs=1e-6)

    @pytest.mark.parametrize("m", [1.5, 2.0, 3.0, 10.0, 100.0, 1000.0])
    @pytest.mark.parametrize("d,a", [(1, 1.0), (2, 20.0), (3, 4.0)])
    def test_closed_form(self, m, d, a):
        assert solve_cm(quadratic(a), m, d) == pytest.approx(beta_constant(a / 2, m, d), rel=1e-9)

    def test_limit(self):
        assert infinity_constant(HALF_SQUARE, 1) == pytest.approx(1 / 8)
        assert solve_cm(HALF_SQUARE, 1e4, 1) == pytest.approx(1 / 8, rel=1e-3)

    def test_monotone_toward_limit(self):
        # observed, not a theorem: reported here as a regression guard
        cs = [solve_cm(HALF_SQUARE, m, 1) for m in 2.0 ** np.arange(1, 10)]
        assert np.all(np.diff(cs) < 0) and cs[-1] > 1 / 8

    def test_mass_defect(self):
        for m in (1.2, 5.0, 640.0):
            c = solve_cm(HALF_SQUARE, m, 1)
            assert abs(profile_mass(HALF_SQUARE, m, 1, c) - 1) <= 1e-10

    def test_flat_bottom(self):
        V = flat_bottom(4.0, 0.2)
        c = solve_cm(V, 3.0, 1)
        assert abs(profile_mass(V, 3.0, 1, c) - 1) <= 1e-10

    def test_errors(self):
        with pytest.raises(ValueError):
            solve_cm(HALF_SQUARE, 1.0, 1)
        with pytest.raises(ConfigurationError):
            solve_cm(zero_potential(), 2.0, 1)

    def test_accepts_potential_spec(self):
        assert solve_cm(PotentialSpec(HALF_SQUARE), 2.0, 1) == solve_cm(HALF_SQUARE, 2.0, 1)


class TestProfile:
    def test_analytic_mass(self):
        for m in (2.0, 7.0, 300.0, math.inf):
            for d, V in ((1, HALF_SQUARE), (2, quadratic(20.0))):
                assert stationary_profile(V, m, d).analytic_mass() == pytest.approx(1.0, abs=1e-8)

    def test_support_radius_solves_level(self):
        prof = stationary_profile(HALF_SQUARE, 4.0, 1)
        assert float(HALF_SQUARE(prof.support_radius)) == pytest.approx(prof.constant, rel=1e-14)

    def test_indicator(self):
        g = Grid.line(1.0, 1000)
        prof, rho = build_profile(HALF_SQUARE, math.inf, 1, g)
        assert prof.support_radius == pytest.approx(0.5)
        inside = np.abs(g.centers) < 0.5
        np.testing.assert_allclose(rho.values[inside], 1.0, rtol=1e-12)
        assert np.max(rho.values[~inside]) <= 1e-12

    def test_radial_indicator_mass(self):
        g = Grid.radial(1.0, 777, 2)
        _, rho = build_profile(quadratic(20.0), math.inf, 2, g)
        assert mass(rho) == pytest.approx(1.0, abs=1e-12)
        assert rho.values.max() == pytest.approx(1.0, abs=1e-12)

    def test_parabola_peak(self):
        g = Grid.line(2.0, 4000)
        prof, rho = build_profile(HALF_SQUARE, 2.0, 1, g)
        assert float(prof(0.0)) == pytest.approx(0.520, abs=1e-3)
        assert rho.values.max() == pytest.approx(0.520, abs=1e-3)
        assert mass(rho) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("m", [1.5, 3.0, 50.0])
    def test_positive_part(self, m):
        g = Grid.line(2.5, 900)
        prof, rho = build_profile(HALF_SQUARE, m, 1, g)
        outside = HALF_SQUARE(g.centers) >= prof.constant
        assert outside.any() and not np.any(rho.values[outside])

    def test_grid_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_profile(HALF_SQUARE, 2.0, 2, Grid.line(1.0, 10))

    def test_pointwise_convergence_inside_support(self):
        g = Grid.line(1.0, 2000)
        compact = np.abs(g.centers) < 0.4
        gaps = []
        for m in (20.0, 40.0, 80.0, 160.0, 320.0):
            prof = stationary_profile(HALF_SQUARE, m, 1)
            gaps.append(np.max(np.abs(prof(g.centers[compact]) - 1.0)))
        assert np.all(np.diff(gaps) < 0) and gaps[-1] < 0.02

    def test_own_model_dissipation_small(self):
        g = Grid.line(1.0, 1000)
        _, rho = build_profile(HALF_SQUARE, 5.0, 1, g)
        M = ModelSpec(PressureLaw.power(5.0), PotentialSpec(HALF_SQUARE), g)
        assert dissipation(M, rho) <= g.h


class TestThreshold:
    def test_line(self):
        assert support_threshold(1) == pytest.approx(math.e**2, abs=1e-5)

    def test_plane(self):
        assert support_threshold(2) == pytest.approx(math.pi * math.e, abs=1e-5)

    def test_quadrature_tolerance(self):
        for d in (1, 2, 3):
            assert abs(support_threshold(d, 1e-8) - support_threshold(d, 1e-13)) <= 1e-6

    def test_invalid(self):
        with pytest.raises(ValueError):
            support_threshold(0)


class TestInclusion:
    def test_above_threshold(self):
        V = quadratic(2 * 2 * math.e**2)  # A = 2 e^2
        assert all(check_support_inclusion(V, 1, [64, 128, 256, 512, 1024]))

    def test_weak_potential(self):
        assert not any(check_support_inclusion(quadratic(0.1), 1, [4, 8, 16, 32]))

    def test_eventually_constant(self):
        flags = check_support_inclusion(quadratic(20.0), 2, 2.0 ** np.arange(1, 11))
        first = flags.index(True)
        assert all(flags[first:])

    def test_plane_onset(self):
        assert check_support_inclusion(quadratic(20.0), 2, [2, 3, 4]) == [False, False, True]

    def test_quadratic_only(self):
        with pytest.raises(ValueError):
            check_support_inclusion(flat_bottom(1.0, 0.1), 1, [4])


class TestDm:
    def test_decay(self):
        assert dm_density_l1(HALF_SQUARE, 40.0, 1) <= dm_density_l1(HALF_SQUARE, 20.0, 1)

    @pytest.mark.parametrize("m", [80.0, 320.0])
    def test_matches_closed_form_derivative(self, m):
        fd = dm_density_l1(HALF_SQUARE, m, 1)
        assert fd == pytest.approx(dm_density_l1_analytic(HALF_SQUARE, m, 1), rel=1e-2)

    def test_matches_grid_sum(self):
        g = Grid.line(1.0, 2**18)
        p = dm_density_profile(HALF_SQUARE, 20.0, g)
        assert g.integrate(np.abs(p)) == pytest.approx(dm_density_l1(HALF_SQUARE, 20.0, 1), rel=2e-2)

    def test_even(self):
        g = Grid.line(1.0, 2000)
        p = dm_density_profile(HALF_SQUARE, 30.0, g)
        np.testing.assert_allclose(p, p[::-1], atol=1e-8)

    def test_slope(self):
        ms = [20.0, 40.0, 80.0, 160.0, 320.0, 640.0]
        slope, _, _ = fit_loglog([(m, dm_density_l1(HALF_SQUARE, m, 1)) for m in ms])
        assert slope <= -1.7


class TestDiscreteRates:
    def test_l1_distances_decrease(self):
        g = Grid.line(1.0, 2**14)
        _, lim = build_profile(HALF_SQUARE, math.inf, 1, g)
        dist = [lp_distance(build_profile(HALF_SQUARE, m, 1, g)[1], lim) for m in (20, 40, 80, 160)]
        assert np.all(np.diff(dist) < 0)
