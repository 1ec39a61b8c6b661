"""LED geometry, Lambertian gains, and the channel constant."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vlcnoma import (
    InvalidParameterError,
    LedGeometry,
    UserState,
    channel_constant,
    dc_gain,
    incidence_angle,
    irradiance_angle,
    lambertian_order,
    mean_dc_gain,
)


class TestLambertianOrder:
    def test_sixty_degree_half_power_gives_order_one(self):
        assert lambertian_order(np.radians(60.0)) == pytest.approx(1.0, rel=1e-12)

    def test_narrower_beam_raises_order(self):
        assert lambertian_order(np.radians(30.0)) > lambertian_order(np.radians(60.0))

    def test_invalid_half_angle_rejected(self):
        with pytest.raises(InvalidParameterError):
            lambertian_order(0.0)
        with pytest.raises(InvalidParameterError):
            lambertian_order(np.pi / 2)


class TestLedGeometry:
    def test_order_derived_automatically(self, led_fov50):
        assert led_fov50.lambertian_m == pytest.approx(1.0, rel=1e-12)

    def test_negative_dimensions_rejected(self):
        with pytest.raises(InvalidParameterError):
            LedGeometry(ell=-1.0, phi_hpbw=1.0, area_r=1e-4, theta_fov=1.0)
        with pytest.raises(InvalidParameterError):
            LedGeometry(ell=2.0, phi_hpbw=1.0, area_r=0.0, theta_fov=1.0)
        with pytest.raises(InvalidParameterError):
            LedGeometry(ell=2.0, phi_hpbw=1.0, area_r=1e-4, theta_fov=0.0)


class TestAngles:
    def test_led_facing_orientation_gives_normal_incidence(self):
        for d in (0.0, 2.0, 7.5):
            facing = np.pi - np.arctan2(2.0, d)
            assert incidence_angle(d, facing, 2.0) == pytest.approx(0.0, abs=1e-15)

    def test_tilt_shifts_incidence_linearly(self):
        facing = np.pi - np.arctan2(2.0, 3.0)
        delta = 0.3
        assert incidence_angle(3.0, facing + delta, 2.0) == pytest.approx(-delta, rel=1e-12)
        assert incidence_angle(3.0, facing - delta, 2.0) == pytest.approx(delta, rel=1e-12)

    def test_irradiance_angle_geometry(self):
        assert irradiance_angle(2.0, 2.0) == pytest.approx(np.pi / 4, rel=1e-12)
        assert irradiance_angle(0.0, 2.0) == pytest.approx(0.0, abs=1e-15)


class TestDcGain:
    def test_gain_zero_outside_fov(self, led_fov50):
        user = UserState(dist=5.0, mean_angle=0.2, inst_angle=0.2)
        assert dc_gain(user, led_fov50) == 0.0

    def test_gain_positive_inside_fov(self, led_fov50):
        theta = np.pi - np.arctan2(2.0, 3.0)
        user = UserState(dist=3.0, mean_angle=theta, inst_angle=theta)
        assert dc_gain(user, led_fov50) > 0.0

    def test_gain_identity_with_channel_constant(self, led_fov50):
        h_c, upsilon = channel_constant(led_fov50)
        rng = np.random.default_rng(0)
        for _ in range(200):
            d = rng.uniform(0.0, 10.0)
            phi = rng.uniform(np.radians(25), np.radians(155))
            theta = incidence_angle(d, phi, led_fov50.ell)
            if abs(theta) > led_fov50.theta_fov:
                continue
            h = dc_gain(UserState(d, phi, phi), led_fov50)
            assert h * h * upsilon(d) == pytest.approx(np.cos(theta) ** 2, rel=1e-12)

    def test_vectorized_matches_scalar(self, led_fov50):
        rng = np.random.default_rng(1)
        d = rng.uniform(0, 10, 50)
        phi = rng.uniform(0, np.pi, 50)
        batch = dc_gain(UserState(d, phi, phi), led_fov50)
        singles = np.array(
            [dc_gain(UserState(di, pi_, pi_), led_fov50) for di, pi_ in zip(d, phi)]
        )
        np.testing.assert_allclose(batch, singles, rtol=1e-14)

    @given(st.floats(0.0, 10.0), st.floats(0.0, np.pi))
    @settings(max_examples=100, deadline=None)
    def test_gain_nonnegative_and_bounded(self, d, phi):
        led = LedGeometry(ell=2.0, phi_hpbw=np.radians(60), area_r=1e-4, theta_fov=np.radians(90))
        h_c, upsilon = channel_constant(led)
        h = dc_gain(UserState(d, phi, phi), led)
        assert h >= 0.0
        assert h * h <= 1.0 / upsilon(d) + 1e-25


class TestMeanDcGain:
    def test_equals_instantaneous_at_mean(self, led_fov50):
        d, phi = 4.0, np.radians(120)
        inst = dc_gain(UserState(d, phi, phi), led_fov50)
        assert mean_dc_gain(d, phi, led_fov50) == pytest.approx(inst, rel=1e-12)

    def test_folds_negative_cosine(self, led_fov90):
        # an incidence angle just past 90 degrees would give a negative cosine;
        # the mean gain uses its magnitude
        d = 0.1
        phi = np.pi - np.arctan2(led_fov90.ell, d) + led_fov90.theta_fov - 1e-3
        assert mean_dc_gain(d, phi, led_fov90) >= 0.0
