"""Boundary curves, the x1-minimiser and the tubular chart."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confined_stark.errors import DomainAssumptionError, ParameterError, RangeError
from confined_stark.geometry import (DomainSpec, build_domain, build_tubular_map,
                                     domain_level_set, taylor_residual, tubular_eval)


class TestDomainSpec:
    def test_round_trip(self):
        for spec in (DomainSpec.disk(1.0, (1.0, 0.0)), DomainSpec.ellipse(2.0, 1.0, (2.0, 0.0)),
                     DomainSpec.fourier_star(1.0, cos=[0.0, 0.05], sin=[0.02])):
            assert DomainSpec.from_dict(spec.to_dict()) == spec

    @pytest.mark.parametrize("bad", [lambda: DomainSpec.disk(-1.0), lambda: DomainSpec.ellipse(0, 1),
                                     lambda: DomainSpec("square", {}),
                                     lambda: DomainSpec.fourier_star(1.0, cos=[2.0])])
    def test_validation(self, bad):
        with pytest.raises(ParameterError):
            bad()

    def test_level_set_sign(self, disk_spec):
        assert domain_level_set(disk_spec, 1.0, 0.0) < 0
        assert domain_level_set(disk_spec, 3.0, 0.0) > 0
        assert abs(domain_level_set(disk_spec, 0.0, 0.0)) < 1e-12


class TestBuildDomain:
    def test_unit_disk(self, disk_curve):
        assert disk_curve.X0 == pytest.approx((0.0, 0.0), abs=1e-12)
        assert disk_curve.x0 == pytest.approx(0.0, abs=1e-14)
        assert disk_curve.kappa0 == pytest.approx(1.0, abs=1e-10)
        assert disk_curve.length == pytest.approx(2 * math.pi, rel=1e-10)

    def test_ellipse_vertex_curvature(self):
        curve = build_domain(DomainSpec.ellipse(2.0, 1.0, (2.0, 0.0)))
        assert curve.X0 == pytest.approx((0.0, 0.0), abs=1e-12)
        assert curve.kappa0 == pytest.approx(2.0, rel=1e-10)  # a / b^2
        # finite-difference oracle: kappa = theta'
        e = 1e-4
        fd = (curve.theta(np.array([e])) - curve.theta(np.array([-e])))[0] / (2 * e)
        assert fd == pytest.approx(2.0, rel=1e-6)

    def test_flat_minimiser_rejected(self):
        # r = 1 - 0.2 cos 2p has zero curvature at its x1-minimiser (p = pi)
        with pytest.raises(DomainAssumptionError):
            build_domain(DomainSpec.fourier_star(1.0, cos=[0.0, -0.2]))

    def test_two_minimisers_rejected(self):
        # symmetric dumbbell-like star: two minimisers mirror-symmetric in x2
        with pytest.raises(DomainAssumptionError):
            build_domain(DomainSpec.fourier_star(1.0, cos=[0.0, -0.4]))

    def test_gamma_starts_at_minimiser(self, disk_curve):
        g = disk_curve.gamma(np.array([0.0]))
        assert g[:, 0] == pytest.approx(disk_curve.X0, abs=1e-12)

    @pytest.mark.parametrize("spec", [DomainSpec.disk(1.0, (1.0, 0.0)), DomainSpec.ellipse(2.0, 1.0),
                                      DomainSpec.fourier_star(1.0, cos=[0.1, 0.05], sin=[0.03])])
    def test_unit_speed_and_curvature(self, spec):
        curve = build_domain(spec)
        s = np.linspace(-0.45 * curve.length, 0.45 * curve.length, 41)
        speed = curve.arclength_derivative(s)
        assert np.max(np.abs(speed - 1)) < 1e-8
        e = 1e-4
        dtheta = np.angle(np.exp(1j * (curve.theta(s + e) - curve.theta(s - e)))) / (2 * e)
        assert np.max(np.abs(dtheta - curve.kappa(s))) < 1e-6

    def test_star_minimiser_is_minimum(self):
        spec = DomainSpec.fourier_star(1.0, cos=[0.1, 0.05], sin=[0.03])
        curve = build_domain(spec)
        p = np.linspace(0, 2 * np.pi, 20001)
        X, _, _ = spec.parametric(p)
        assert curve.x0 <= X[0].min() + 1e-12
        assert curve.kappa0 > 0


class TestTubularMap:
    def test_disk_width(self, disk_map):
        assert disk_map.delta == pytest.approx(0.9)
        assert disk_map.s_half == pytest.approx(math.pi)

    def test_examples(self, disk_map):
        point, tau1, m = tubular_eval(disk_map, 0.0, 0.1)
        assert point == pytest.approx([0.1, 0.0], abs=1e-12)
        assert tau1 == pytest.approx(0.1, abs=1e-12)
        assert m == pytest.approx(0.9, abs=1e-12)
        _, tau1, _ = tubular_eval(disk_map, 0.2, 0.0)
        assert tau1 == pytest.approx(1 - math.cos(0.2), abs=1e-12)
        assert tau1 == pytest.approx(0.0199334, abs=1e-7)

    def test_range_errors(self, disk_map):
        with pytest.raises(RangeError):
            tubular_eval(disk_map, 0.0, disk_map.delta)
        with pytest.raises(RangeError):
            tubular_eval(disk_map, 4.0, 0.1)
        with pytest.raises(RangeError):
            taylor_residual(disk_map, 0.0, -0.1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-3.0, 3.0), st.floats(0.0, 0.89))
    def test_disk_closed_form(self, s, t):
        # for the unit disk centred at (1,0): tau = (1 - (1-t) cos s, -(1-t) sin s)
        pt = tubular_eval(_disk_map(), s, t)[0]
        assert pt == pytest.approx([1 - (1 - t) * math.cos(s), -(1 - t) * math.sin(s)], abs=1e-10)

    def test_jacobian_positive(self, disk_map):
        for h in (0.1, 0.01, 0.001):
            eta = 1 / 30
            s = np.linspace(-h ** (1 / 3 - eta), h ** (1 / 3 - eta), 21)
            t = np.linspace(0, h ** (2 / 3 - eta), 21)
            S, T = np.meshgrid(s, t)
            assert np.all(disk_map.jacobian(S.ravel(), T.ravel()) > 0)

    def test_bad_m_min(self, disk_curve):
        with pytest.raises(ParameterError):
            build_tubular_map(disk_curve, m_min=1.5)

    def test_fields_match_tau(self, disk_map):
        s = np.array([[0.1, -0.2], [0.3, 0.0]])
        t = np.array([[0.05, 0.1], [0.2, 0.3]])
        tau1, m = disk_map.fields(s, t)
        assert tau1 == pytest.approx(disk_map.tau1(s.ravel(), t.ravel()).reshape(2, 2), abs=1e-14)
        assert m == pytest.approx(1 - t)


_CACHE = {}


def _disk_map():
    if "m" not in _CACHE:
        _CACHE["m"] = build_tubular_map(build_domain(DomainSpec.disk(1.0, (1.0, 0.0))))
    return _CACHE["m"]


class TestTaylorResidual:
    def test_examples(self, disk_map):
        assert taylor_residual(disk_map, 0.1, 0.0) == pytest.approx(1 - math.cos(0.1) - 0.005, abs=1e-13)
        assert taylor_residual(disk_map, 0.1, 0.0) == pytest.approx(-4.17e-6, abs=1e-8)
        for t in (0.0, 0.1, 0.5):
            assert taylor_residual(disk_map, 0.0, t) == pytest.approx(0.0, abs=1e-14)

    @pytest.mark.parametrize("spec", [DomainSpec.disk(1.0, (1.0, 0.0)), DomainSpec.ellipse(2.0, 1.0),
                                      DomainSpec.fourier_star(1.0, cos=[0.1, 0.05], sin=[0.03])])
    def test_remainder_ratio_bounded(self, spec):
        curve = build_domain(spec)
        tmap = build_tubular_map(curve)
        r = np.geomspace(1e-1, 1e-4, 12)[:, None]
        ang = np.linspace(0.05, math.pi - 0.05, 6)[None, :]
        s = (r * np.cos(ang)).ravel()
        t = (0.5 * r * np.sin(ang) * tmap.delta).ravel()
        ratios = np.abs(taylor_residual(tmap, s, t)) / (np.abs(s) ** 3 + np.abs(t * s * s))
        assert max(ratios) < 10.0
