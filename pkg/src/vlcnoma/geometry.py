"""Optical geometry and line-of-sight DC channel gain for one LED and one mobile receiver.

The LED points straight down from height ``ell`` above the receiver plane.
A receiver at horizontal distance ``d`` holds its detector tilted by a
vertical angle ``phi`` measured from the horizontal, so the light arrives
at incidence angle ``pi - atan(ell/d) - phi`` relative to the detector
normal.  Gain is zero outside the detector's field-of-view half-angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "LedGeometry",
    "UserState",
    "lambertian_order",
    "incidence_angle",
    "irradiance_angle",
    "dc_gain",
    "mean_dc_gain",
    "channel_constant",
]


def lambertian_order(phi_hpbw: float) -> float:
    """Lambertian mode number of an LED with half-power beamwidth ``phi_hpbw`` (radians)."""
    if not 0.0 < phi_hpbw < np.pi / 2:
        raise InvalidParameterError(
            f"half-power beamwidth must lie in (0, pi/2), got {phi_hpbw}"
        )
    return -1.0 / np.log2(np.cos(phi_hpbw))


@dataclass(frozen=True)
class LedGeometry:
    """Fixed link parameters: LED height, beamwidth, detector area and field of view.

    Angles are radians.  ``lambertian_m`` is derived from ``phi_hpbw`` when
    not supplied.  ``theta_fov`` may equal pi/2 (a hemisphere of acceptance).
    """

    ell: float
    phi_hpbw: float
    area_r: float
    theta_fov: float
    lambertian_m: float = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.ell <= 0 or self.area_r <= 0:
            raise InvalidParameterError("LED height and detector area must be positive")
        if not 0.0 < self.theta_fov <= np.pi / 2:
            raise InvalidParameterError("field-of-view half-angle must lie in (0, pi/2]")
        if self.lambertian_m is None:
            object.__setattr__(self, "lambertian_m", lambertian_order(self.phi_hpbw))
        elif self.lambertian_m <= 0:
            raise InvalidParameterError("Lambertian order must be positive")


@dataclass(frozen=True)
class UserState:
    """One sampled receiver: horizontal distance, mean vertical angle, instantaneous angle."""

    dist: float
    mean_angle: float
    inst_angle: float


def incidence_angle(d, phi, ell: float):
    """Angle between the arriving ray and the detector normal, radians.

    May be negative; only its magnitude matters for the field-of-view gate.
    ``d = 0`` is allowed (receiver directly beneath the LED).
    """
    return np.pi - np.arctan2(ell, d) - phi


def irradiance_angle(d, ell: float):
    """Departure angle at the downward-pointing LED, in [0, pi/2)."""
    return np.arccos(ell / np.sqrt(ell * ell + np.square(d)))


def dc_gain(user: UserState, led: LedGeometry):
    """Line-of-sight DC channel gain for one receiver; zero outside the field of view.

    Product of the Lambertian emission factor cos^m of the irradiance angle,
    the detector aperture factor, and the cosine of the incidence angle.
    Accepts array-valued ``dist``/``inst_angle`` inside ``user`` and
    broadcasts.
    """
    d = np.asarray(user.dist, dtype=float)
    theta = incidence_angle(d, user.inst_angle, led.ell)
    m = led.lambertian_m
    cos_irr = led.ell / np.sqrt(led.ell**2 + d * d)
    base = (m + 1) * led.area_r / (2 * np.pi * (led.ell**2 + d * d))
    gain = base * cos_irr**m * np.cos(theta)
    return np.where(np.abs(theta) <= led.theta_fov, gain, 0.0)


def mean_dc_gain(d, mean_angle, led: LedGeometry):
    """DC gain evaluated at the mean vertical angle instead of the instantaneous one.

    The cosine of the incidence angle is taken in absolute value so the
    result is nonnegative; the field-of-view gate applies to the mean
    incidence angle.
    """
    d = np.asarray(d, dtype=float)
    theta = incidence_angle(d, mean_angle, led.ell)
    m = led.lambertian_m
    cos_irr = led.ell / np.sqrt(led.ell**2 + d * d)
    base = (m + 1) * led.area_r / (2 * np.pi * (led.ell**2 + d * d))
    gain = base * cos_irr**m * np.abs(np.cos(theta))
    return np.where(np.abs(theta) <= led.theta_fov, gain, 0.0)


def channel_constant(led: LedGeometry):
    """Gain normalization pair (h_c, upsilon).

    ``h_c = (m+1) A_r ell^m / (2 pi)`` and ``upsilon(d) = (ell^2+d^2)^(m+2) / h_c^2``
    satisfy ``dc_gain^2 = cos^2(theta) / upsilon(d)`` whenever the receiver is
    inside the field of view.
    """
    m = led.lambertian_m
    h_c = (m + 1) * led.area_r * led.ell**m / (2 * np.pi)

    def upsilon(d):
        return (led.ell**2 + np.square(np.asarray(d, dtype=float))) ** (m + 2) / (h_c * h_c)

    return h_c, upsilon
