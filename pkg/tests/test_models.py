import math
import pickle

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import box
from hslimit.measures import DiscreteDensity, Grid, barycenter
from hslimit.models import (DomainError, ModelSpec, PotentialSpec, PressureLaw,
                            UnsupportedConfiguration, contraction_constant,
                            diffusion_flux_potential, dissipation, energy, flat_bottom,
                            interaction_field, model_from_keys, parse_potential,
                            pressure_eval, quadratic, _pressure_gradient, singular_h, zero_potential)
from hslimit.stationary import build_profile

LAWS = [PressureLaw.power(2.0), PressureLaw.power(7.5), PressureLaw.singular(0.1),
        PressureLaw.singular(1.0)]


class TestPressure:
    def test_power_value(self):
        assert pressure_eval(PressureLaw.power(2.0), 0.5) == pytest.approx(1.0)

    @pytest.mark.parametrize("law", LAWS)
    def test_zero_density(self, law):
        assert pressure_eval(law, 0.0) == 0.0
        assert diffusion_flux_potential(law, 0.0) == 0.0

    def test_singular_value(self):
        assert pressure_eval(PressureLaw.singular(0.1), 0.5) == pytest.approx(0.1)

    def test_singular_domain(self):
        with pytest.raises(DomainError):
            pressure_eval(PressureLaw.singular(0.1), 1.0)
        with pytest.raises(DomainError):
            diffusion_flux_potential(PressureLaw.singular(0.1), np.array([0.2, 1.3]))

    def test_negative_density(self):
        with pytest.raises(DomainError):
            pressure_eval(PressureLaw.power(3.0), -0.1)

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            PressureLaw.power(1.0)
        with pytest.raises(ValueError):
            PressureLaw.singular(0.0)

    def test_q_power(self):
        assert diffusion_flux_potential(PressureLaw.power(2.0), 0.5) == pytest.approx(0.25)

    def test_q_singular(self):
        q = diffusion_flux_potential(PressureLaw.singular(1.0), 0.5)
        assert q == pytest.approx(1 + math.log(0.5), abs=1e-12)

    @pytest.mark.parametrize("law", LAWS)
    def test_q_prime_is_rho_p_prime(self, law):
        rho = np.linspace(0.01, 0.9, 60)
        d = 1e-6
        dq = (law.q(rho + d) - law.q(rho - d)) / (2 * d)
        dp = (law.pressure(rho + d) - law.pressure(rho - d)) / (2 * d)
        np.testing.assert_allclose(dq, rho * dp, rtol=1e-6)
        np.testing.assert_allclose(law.q_prime(rho), dq, rtol=1e-6)

    @pytest.mark.parametrize("law", LAWS)
    def test_energy_density_identities(self, law):
        rho = np.linspace(0.01, 0.9, 60)
        d = 1e-6
        de = (law.internal_energy(rho + d) - law.internal_energy(rho - d)) / (2 * d)
        np.testing.assert_allclose(de, law.pressure(rho), rtol=1e-6)
        np.testing.assert_allclose(rho * de - law.internal_energy(rho), law.q(rho), rtol=1e-5)

    def test_h_nonnegative_nondecreasing(self):
        h = singular_h(np.linspace(0.0, 1 - 1e-6, 20001))
        assert h.min() >= 0
        assert np.all(np.diff(h) >= 0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(1.01, 200.0), st.floats(0.0, 1.0))
    def test_q_nonnegative(self, m, r):
        assert PressureLaw.power(m).q(r) >= 0


class TestPotentials:
    def test_quadratic_bounds(self):
        V = quadratic(3.0)
        assert (V.lower, V.upper) == (3.0, 3.0)
        assert V(2.0) == pytest.approx(6.0)
        assert V.grad(2.0) == pytest.approx(6.0)

    def test_flat_bottom(self):
        V = flat_bottom(2.0, 0.5)
        assert V(0.3) == 0.0
        assert V(1.5) == pytest.approx(1.0)
        assert V.lower == 0.0 and V.breaks == (0.5,)

    @pytest.mark.parametrize("text,label", [("quadratic:1.0", "quadratic:1"), ("zero", "zero"),
                                            ("flat:2,0.5", "flat:2,0.5"), ("quadratic:0", "zero")])
    def test_parse(self, text, label):
        assert parse_potential(text).label == label

    @pytest.mark.parametrize("text", ["cubic:1", "quadratic", "quadratic:a", "flat:1"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            parse_potential(text)

    def test_pickle_round_trip(self):
        for V in (quadratic(2.0), flat_bottom(1.0, 0.3), zero_potential()):
            W = pickle.loads(pickle.dumps(V))
            assert W == V
            assert W(1.25) == V(1.25)


class TestGamma:
    def test_table(self):
        assert contraction_constant(2.0, -0.5) == 1.5
        assert contraction_constant(2.0, 0.0) == 2.0
        assert contraction_constant(2.0, 0.7) == 2.0
        assert contraction_constant(0.0, 0.7, v_is_zero=True) == 0.7

    def test_from_spec(self):
        assert PotentialSpec(quadratic(1.0), quadratic(0.5)).gamma == 1.0
        assert PotentialSpec(zero_potential(), quadratic(0.5)).gamma == 0.5

    def test_flat_outside_hypotheses(self):
        assert not PotentialSpec(flat_bottom(1.0, 0.2)).within_global_hypotheses
        assert PotentialSpec(quadratic(1.0)).within_global_hypotheses


class TestInteraction:
    def test_zero(self, line400):
        assert not np.any(interaction_field(zero_potential(), box(line400, -0.5, 0.5)))

    def test_quadratic_kernel(self, line400):
        rho = box(line400, -0.2, 0.8)
        field = interaction_field(quadratic(1.0), rho)
        np.testing.assert_allclose(field, line400.centers - barycenter(rho), atol=1e-8)

    def test_odd_field(self):
        g = Grid.line(2.0, 300)
        rho = DiscreteDensity.normalized(g, np.exp(-3 * g.centers**2))
        field = interaction_field(quadratic(0.8), rho)
        np.testing.assert_allclose(field, -field[::-1], atol=1e-8)

    def test_radial_rejected(self):
        g = Grid.radial(1.0, 50, 2)
        with pytest.raises(UnsupportedConfiguration):
            ModelSpec(PressureLaw.power(2.0), PotentialSpec(quadratic(1.0), quadratic(1.0)), g)
        with pytest.raises(UnsupportedConfiguration):
            interaction_field(quadratic(1.0), DiscreteDensity.normalized(g, np.ones(50)))


def _model(law, V=None, W=None, grid=None):
    return ModelSpec(law, PotentialSpec(V or zero_potential(), W or zero_potential()),
                     grid or Grid.line(2.0, 400))


class TestEnergy:
    def test_pure_internal(self, line400):
        assert energy(_model(PressureLaw.power(2.0)), box(line400, -0.5, 0.5)) == pytest.approx(1.0, abs=1e-3)

    def test_with_confinement(self, line400):
        e = energy(_model(PressureLaw.power(2.0), quadratic(1.0)), box(line400, -0.5, 0.5))
        assert e == pytest.approx(1 + 1 / 24, abs=1e-3)

    def test_large_m_limit(self, line400):
        rho = box(line400, -0.5, 0.5, 0.999)
        potential = line400.integrate(rho.values * 0.5 * line400.centers**2)
        for m, tol in [(100.0, 1e-2), (1000.0, 1e-3), (10000.0, 1e-4)]:
            e = energy(_model(PressureLaw.power(m), quadratic(1.0)), rho)
            assert e == pytest.approx(potential, abs=tol)

    def test_interaction_term(self, line400):
        # W = x^2/2 gives 1/2 int int (x-y)^2/2 = variance/2 for unit mass
        rho = box(line400, -0.5, 0.5)
        e = energy(_model(PressureLaw.power(2.0), W=quadratic(1.0)), rho)
        assert e == pytest.approx(1.0 + 0.5 * (1 / 12), abs=1e-3)

    def test_singular_domain(self, line400):
        with pytest.raises(DomainError):
            energy(_model(PressureLaw.singular(0.1)), box(line400, -0.25, 0.25, 2.0))


class TestDissipation:
    @pytest.mark.parametrize("N", [400, 800, 1600])
    def test_stationary_profile(self, N):
        g = Grid.line(1.0, N)
        _, rho = build_profile(quadratic(1.0), 3.0, 1, g)
        f = dissipation(_model(PressureLaw.power(3.0), quadratic(1.0), grid=g), rho)
        assert f <= 2 * g.h

    def test_flat_interior(self, line400):
        rho = box(line400, -0.5, 0.5)
        grad = _pressure_gradient(PressureLaw.power(2.0), rho.values, line400.h)
        interior = np.abs(line400.centers) < 0.49
        assert np.all(np.abs(grad[interior]) < 1e-10)
        # the whole value comes from the edge cells
        f = dissipation(_model(PressureLaw.power(2.0)), rho)
        edges = np.abs(np.abs(line400.centers) - 0.5) < line400.h
        assert f == pytest.approx(line400.integrate(np.where(edges, rho.values * grad**2, 0)))

    def test_drift_only(self, line400):
        rho = box(line400, 0.5, 1.5)
        f = dissipation(_model(PressureLaw.power(2.0), quadratic(1.0)), rho, pressure_term=False)
        assert f == pytest.approx(line400.integrate(rho.values * line400.centers**2), rel=1e-12)
        assert f == pytest.approx(13 / 12, abs=1e-3)


class TestKeys:
    def test_defaults(self):
        m = model_from_keys({})
        assert m.pressure == PressureLaw.power(2.0)
        assert m.grid == Grid.line(2.0, 512)

    def test_full(self):
        m = model_from_keys({"pressure": "singular", "epsilon": "0.01", "V": "quadratic:1.0",
                             "W": "quadratic:0.5", "L": "4", "N": "1024"})
        assert m.pressure.eps == 0.01 and m.grid.cell_count == 1024
        assert m.potentials.interaction.label == "quadratic:0.5"

    def test_inconsistent(self):
        with pytest.raises(ValueError):
            model_from_keys({"pressure": "power", "epsilon": "0.1"})
        with pytest.raises(ValueError):
            model_from_keys({"pressure": "singular", "m": "3"})

    def test_radial(self):
        assert model_from_keys({"d": "2"}).grid.is_radial
