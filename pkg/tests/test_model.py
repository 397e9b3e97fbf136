import math

import numpy as np
import pytest

from relkepler import ConfigError, DomainError, Family, PhaseState, PhysicalParams, Region
from relkepler.model import (
    PowerLawPotential,
    angular_momentum,
    classical_energy,
    classify_region,
    coefficients_for,
    gamma_of,
    kepler,
    kepler_apsides,
    kepler_potential,
    relativistic_apsis_state,
    relativistic_energy,
    transformed_potential,
)
from relkepler.errors import SpiralRegime

from conftest import assert_close


class TestParams:
    def test_alpha_is_derived(self):
        p = PhysicalParams(m=2.0, G=3.0, M=5.0)
        assert p.alpha == 30.0
        assert p.rest_energy == 2.0

    @pytest.mark.parametrize("name", ["m", "c", "G", "M"])
    def test_nonpositive_rejected_with_field(self, name):
        with pytest.raises(ConfigError) as info:
            PhysicalParams(**{name: -1.0})
        assert info.value.field == name
        with pytest.raises(ConfigError):
            PhysicalParams(**{name: float("nan")})


class TestKeplerPotential:
    @pytest.mark.parametrize("alpha,x,value,grad", [
        (1.0, (1, 0), 1.0, (-1, 0)),
        (1.0, (2, 0), 0.5, (-0.25, 0)),
        (2.0, (0, 1), 2.0, (0, -2)),
    ])
    def test_values(self, alpha, x, value, grad):
        v, g = kepler_potential(x, PhysicalParams(m=alpha))
        assert v == pytest.approx(value, rel=1e-15)
        assert_close(g, grad)

    def test_origin_guard(self, unit):
        with pytest.raises(DomainError):
            kepler_potential((0.0, 0.0), unit)
        with pytest.raises(DomainError):
            kepler_potential((1e-9, 0.0), unit)
        with pytest.raises(DomainError):
            kepler_potential((0.5, 0.0), unit, r_min=1.0)

    def test_gradient_matches_finite_differences(self, unit):
        x = np.array([2.0, 0.0])
        d = 1e-6
        fd = (kepler(unit).value(x + [d, 0]) - kepler(unit).value(x - [d, 0])) / (2 * d)
        assert fd == pytest.approx(kepler_potential(x, unit)[1][0], rel=1e-8)

    def test_three_dimensions(self, unit):
        v, g = kepler_potential((0, 0, 4.0), unit)
        assert v == 0.25
        assert_close(g, (0, 0, -1 / 16))


class TestTransformedPotential:
    def test_values(self, unit):
        v, g = transformed_potential((1, 0), 0.0, unit)
        assert v == pytest.approx(1.5)
        assert_close(g, (-2, 0))
        v, g = transformed_potential((2, 0), 0.0, unit)
        assert v == pytest.approx(0.625)
        assert_close(g, (-0.375, 0))

    def test_nonrelativistic_limit(self):
        p = PhysicalParams(c=1e6)
        for x in [(1, 0), (0.3, 2.0), (5, -4)]:
            V = kepler(p).value(np.array(x, float))
            Z, _ = transformed_potential(x, -0.2, p)
            assert abs(Z - V) / V < 1e-9

    def test_constant_is_included(self, unit):
        x = np.array([1.7, -0.4])
        V = 1 / np.linalg.norm(x)
        h = -0.3
        Zh, _ = transformed_potential(x, h, unit)
        assert Zh == pytest.approx(V + (V + h) ** 2 / 2, rel=1e-15)


class TestCoefficients:
    def test_special_relativity(self, unit):
        ell, a, b = coefficients_for("special-relativity", 0.1, None, unit)
        assert (ell, b) == (4, 1.0) and a == pytest.approx(1.1, rel=1e-15)

    def test_levi_civita(self, unit):
        ell, a, b = coefficients_for(Family.LEVI_CIVITA, 0.1, None, unit)
        assert (ell, b) == (4, 6.0) and a == pytest.approx(1.4, rel=1e-15)

    def test_schwarzschild(self, unit):
        assert coefficients_for("schwarzschild", 0.0, 1.0, unit) == (5, 1.0, 3.0)

    def test_schwarzschild_needs_L(self, unit):
        with pytest.raises(ConfigError):
            coefficients_for("schwarzschild", 0.0, None, unit)

    def test_flipped_attraction_rejected(self, unit):
        with pytest.raises(DomainError):
            coefficients_for("special-relativity", -1.0, None, unit)
        with pytest.raises(DomainError):
            coefficients_for("levi-civita", -0.25, None, unit)

    def test_unknown_family(self, unit):
        with pytest.raises(ValueError):
            coefficients_for("newton", 0.0, None, unit)


class TestGammaAndEnergy:
    @pytest.mark.parametrize("v,gamma", [
        ((0, 0), 1.0),
        ((math.sqrt(5 / 9), 0), 1.5),
        ((0, 0.8), 5 / 3),
    ])
    def test_gamma(self, unit, v, gamma):
        assert gamma_of(PhaseState(0, (1, 0), v=v), unit) == pytest.approx(gamma, rel=1e-14)

    def test_gamma_superluminal(self, unit):
        with pytest.raises(DomainError):
            gamma_of(PhaseState(0, (1, 0), v=(1.0, 0)), unit)

    def test_relativistic_energy(self, unit):
        v = math.sqrt(5 / 9)
        assert relativistic_energy(PhaseState(0, (2, 0), v=(0, v)), unit) == pytest.approx(0.0, abs=1e-15)
        assert relativistic_energy(PhaseState(0, (1, 0), v=(0, 0)), unit) == -1.0
        free = PowerLawPotential(1.0, 0.0, 4, r_min=0.0)
        # V = 1/r with r huge is ~0; compare with the kinetic term only
        state = PhaseState(0, (1e300, 0), v=(0.8, 0))
        assert relativistic_energy(state, unit, free) == pytest.approx(2 / 3, rel=1e-14)

    def test_energy_from_momentum_matches_velocity(self, unit):
        v = np.array([0.3, -0.5])
        g = 1 / math.sqrt(1 - v @ v)
        a = relativistic_energy(PhaseState(0, (1.2, 0.4), v=v), unit)
        b = relativistic_energy(PhaseState(0, (1.2, 0.4), p=g * v), unit)
        assert a == pytest.approx(b, rel=1e-14)

    def test_rest_on_boundary(self, unit):
        # V + h = 0 with zero speed gives exactly h
        x = np.array([4.0, 0.0])
        h = -kepler(unit).value(x)
        assert relativistic_energy(PhaseState(0, x, v=(0, 0)), unit) == h

    @pytest.mark.parametrize("m,v,Z,expected", [
        (1.0, (math.sqrt(3), 0), 1.5, 0.0),
        (1.0, (0, 0), -2.0, 2.0),
        (2.0, (0, 1), 0.0, 1.0),
    ])
    def test_classical_energy(self, m, v, Z, expected):
        shift = type("Const", (), {"value": lambda self, x: Z})()
        p = PhysicalParams(m=m)
        assert classical_energy(PhaseState(0, (1, 0), v=v), p, shift) == pytest.approx(expected, abs=1e-15)


class TestAngularMomentum:
    def test_classical(self, unit):
        assert angular_momentum(PhaseState(0, (1, 0), v=(0, 2)), unit) == 2.0

    def test_relativistic(self, unit):
        L = angular_momentum(PhaseState(0, (1, 0), v=(0, 0.8)), unit, relativistic=True)
        assert L == pytest.approx(4 / 3, rel=1e-14)

    def test_radial(self, unit):
        assert angular_momentum(PhaseState(0, (2, 1), v=(4, 2)), unit) == 0.0

    def test_vector_in_3d(self, unit):
        L = angular_momentum(PhaseState(0, (1, 0, 0), v=(0, 1, 0)), unit)
        assert_close(L, (0, 0, 1))


class TestRegions:
    @pytest.mark.parametrize("h,r,region", [
        (-0.25, 2.0, Region.OMEGA_H),
        (-3.0, 2.0, Region.SIGMA_H),
        (-0.25, 8.0, Region.FORBIDDEN),
    ])
    def test_examples(self, unit, h, r, region):
        assert classify_region((r, 0), h, unit) is region

    def test_boundary_is_omega(self, unit):
        assert classify_region((4, 0), -0.25, unit) is Region.OMEGA_H


class TestApsides:
    def test_circular_limit_matches_newton(self):
        p = PhysicalParams(c=1e4)
        # Newtonian circle r=1: h = -1/2, L = 1
        radii = kepler_apsides(p, -0.5, 1.0)
        assert len(radii) == 2
        assert radii[0] == pytest.approx(1.0, abs=1e-3)
        assert radii[1] == pytest.approx(1.0, abs=1e-3)

    def test_apsis_state_has_requested_energy(self, unit):
        for which in ("pericenter", "apocenter"):
            s = relativistic_apsis_state(unit, -0.3, 1.2, which)
            assert relativistic_energy(s, unit) == pytest.approx(-0.3, abs=1e-13)
            assert angular_momentum(s, unit, relativistic=True) == pytest.approx(1.2, rel=1e-14)

    def test_spiral_has_no_pericenter(self, unit):
        with pytest.raises(SpiralRegime):
            relativistic_apsis_state(unit, -0.3, 0.9, "pericenter")
        s = relativistic_apsis_state(unit, -0.3, 0.9, "apocenter")
        assert relativistic_energy(s, unit) == pytest.approx(-0.3, abs=1e-13)
