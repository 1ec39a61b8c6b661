"""Analytic CDFs of the squared channel gain under the mobility model.

Every distribution here reduces to one or two quadratures of the
vertical-angle CDF over distance.  The common building blocks are the
half-angle within which the squared gain exceeds a level ``x`` at a given
distance, and the distance beyond which no orientation can reach that level.
Both give the exact kink locations, which are fed to the adaptive rule as
breakpoints so the integrals converge at tight tolerances.

Six families are covered: the gain of an unordered user conditioned on being
nonzero, the gain at a given ascending rank among the nonzero users, and the
weak/strong selection sets of the two-bit feedback schemes based on either
the instantaneous or the mean orientation.  The mean-angle pair needs a
double integral (over distance and mean angle) because set membership is
decided by the mean orientation while the gain depends on the instantaneous
one; its distance profile of the membership bands has a closed antiderivative
exposed as :func:`ramp_cdf_integral`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import DegenerateConditionError, InvalidParameterError
from .geometry import LedGeometry, channel_constant
from .mobility import (
    MobilityModel,
    NonzeroCount,
    fov_window_breakpoints,
    nonzero_gain_probability,
    pmf_nonzero_count_truncated,
    prob_incidence_within,
)
from .quadrature import QuadratureSpec, integrate_1d, integrate_2d_nested

__all__ = [
    "FeedbackThresholds",
    "gain_halfangle",
    "edge_gain_distance",
    "cdf_gain_unordered",
    "cdf_gain_ranked",
    "cdf_weak_twobit_inst",
    "cdf_strong_twobit_inst",
    "ramp_cdf_integral",
    "weak_band_measure",
    "strong_band_measure",
    "mean_angle_bands",
    "cdf_weak_twobit_mean",
    "cdf_strong_twobit_mean",
]


@dataclass(frozen=True)
class FeedbackThresholds:
    """Distance and incidence-angle thresholds splitting users into strong/weak sets."""

    dist_threshold: float
    angle_threshold: float

    def __post_init__(self):
        if self.dist_threshold <= 0:
            raise InvalidParameterError("distance threshold must be positive")
        if self.angle_threshold <= 0:
            raise InvalidParameterError("angle threshold must be positive")

    @classmethod
    def from_fractions(
        cls, model: MobilityModel, led: LedGeometry, dist_frac: float, angle_frac: float
    ) -> "FeedbackThresholds":
        """Place thresholds at fractions of the distance range and the field of view."""
        if not 0 < dist_frac <= 1 or not 0 < angle_frac <= 1:
            raise InvalidParameterError("threshold fractions must lie in (0, 1]")
        return cls(
            dist_threshold=model.d_min + dist_frac * model.delta_d,
            angle_threshold=angle_frac * led.theta_fov,
        )


def gain_halfangle(x, r, led: LedGeometry):
    """Incidence-angle magnitude below which the squared gain exceeds ``x`` at distance ``r``.

    Solves cos^2(theta) = x * (ell^2 + r^2)^(m+2) / h_c^2 for theta; the clip
    returns pi/2 when every orientation clears the level and 0 when none does.
    """
    _, upsilon = channel_constant(led)
    arg = np.clip(2.0 * np.asarray(x) * upsilon(np.asarray(r, dtype=float)) - 1.0, -1.0, 1.0)
    return 0.5 * np.arccos(arg)


def edge_gain_distance(x: float, led: LedGeometry, *, cos_sq: float, lo: float, hi: float) -> float:
    """Distance at which the squared gain at a fixed cosine factor equals ``x``, clamped.

    With ``cos_sq = cos^2`` of the field-of-view half-angle this is where the
    gain at the view edge crosses ``x``; with ``cos_sq = 1`` it is where even
    a perfectly aligned receiver drops below ``x``.  Nonpositive ``x`` maps
    to the upper clamp since the gain is nonnegative.
    """
    if x <= 0.0:
        return hi
    h_c, _ = channel_constant(led)
    m = led.lambertian_m
    base = (h_c * h_c * cos_sq / x) ** (1.0 / (m + 2.0)) - led.ell * led.ell
    if base <= 0.0:
        return lo
    return min(max(np.sqrt(base), lo), hi)


def _per_level(x, fn):
    """Apply a scalar CDF evaluator over an array of levels."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.array([fn(float(xi)) for xi in xs])
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def cdf_gain_unordered(
    x,
    model: MobilityModel,
    led: LedGeometry,
    *,
    spec: QuadratureSpec | None = None,
    nonzero_prob: float | None = None,
):
    """CDF of one user's squared gain conditioned on it being nonzero."""
    if spec is None:
        spec = QuadratureSpec()
    p = nonzero_gain_probability(model, led) if nonzero_prob is None else nonzero_prob
    if p <= 0.0:
        raise DegenerateConditionError("gain is zero with probability one")
    static = fov_window_breakpoints(led.theta_fov, model, led)
    cos_fov_sq = np.cos(led.theta_fov) ** 2
    norm = p * model.delta_d

    def one(xi: float) -> float:
        if xi <= 0.0:
            return 0.0
        bps = static + (
            edge_gain_distance(xi, led, cos_sq=cos_fov_sq, lo=model.d_min, hi=model.d_max),
            edge_gain_distance(xi, led, cos_sq=1.0, lo=model.d_min, hi=model.d_max),
        )
        survive = integrate_1d(
            lambda r: prob_incidence_within(
                r, np.minimum(gain_halfangle(xi, r, led), led.theta_fov), model, led
            ),
            model.d_min,
            model.d_max,
            replace(spec, breakpoints=bps),
        )
        return float(np.clip(1.0 - survive / norm, 0.0, 1.0))

    return _per_level(x, one)


def cdf_gain_ranked(
    x,
    rank: int,
    model: MobilityModel,
    led: LedGeometry,
    count: NonzeroCount,
    *,
    spec: QuadratureSpec | None = None,
):
    """CDF of the gain at ascending rank ``rank`` among the nonzero users.

    Conditions on at least ``count.k_min`` users having nonzero gain, mixing
    the order-statistic CDF over the truncated count distribution.
    """
    if not 1 <= rank <= count.k_min:
        raise InvalidParameterError("rank must lie in [1, k_min] so it always exists")
    base = np.atleast_1d(
        cdf_gain_unordered(x, model, led, spec=spec, nonzero_prob=count.success_prob)
    )
    ns = np.arange(count.k_min, count.total_users + 1)
    weights = pmf_nonzero_count_truncated(ns, count)
    out = np.zeros_like(base)
    for n, w in zip(ns, weights):
        out += w * special.betainc(rank, n - rank + 1, base)
    # truncated-count weights sum to 1 only up to round-off
    out = np.clip(out, 0.0, 1.0)
    return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])


def _weak_inst_denominator(
    model: MobilityModel, led: LedGeometry, th: FeedbackThresholds, spec: QuadratureSpec
) -> float:
    static = fov_window_breakpoints(led.theta_fov, model, led) + fov_window_breakpoints(
        th.angle_threshold, model, led
    )
    return integrate_1d(
        lambda r: prob_incidence_within(r, led.theta_fov, model, led)
        - prob_incidence_within(r, th.angle_threshold, model, led),
        th.dist_threshold,
        model.d_max,
        replace(spec, breakpoints=static),
    )


def cdf_weak_twobit_inst(
    x,
    model: MobilityModel,
    led: LedGeometry,
    th: FeedbackThresholds,
    *,
    spec: QuadratureSpec | None = None,
):
    """Gain CDF in the weak set of instantaneous two-bit feedback.

    Membership: distance above the threshold and incidence-angle magnitude
    between the angle threshold and the field-of-view edge, so members always
    have nonzero gain.
    """
    if spec is None:
        spec = QuadratureSpec()
    den = _weak_inst_denominator(model, led, th, spec)
    if den <= 0.0:
        raise DegenerateConditionError("weak selection set has zero probability")
    static = fov_window_breakpoints(led.theta_fov, model, led) + fov_window_breakpoints(
        th.angle_threshold, model, led
    )
    cos_fov_sq = np.cos(led.theta_fov) ** 2
    cos_th_sq = np.cos(th.angle_threshold) ** 2

    def one(xi: float) -> float:
        start = edge_gain_distance(
            xi, led, cos_sq=cos_fov_sq, lo=th.dist_threshold, hi=model.d_max
        )
        if start >= model.d_max:
            return 0.0
        bps = static + (
            edge_gain_distance(xi, led, cos_sq=cos_th_sq, lo=th.dist_threshold, hi=model.d_max),
            edge_gain_distance(xi, led, cos_sq=1.0, lo=th.dist_threshold, hi=model.d_max),
        )

        def below_level(r):
            # Band from the gain half-angle (floored at the threshold) out to the view edge.
            floored = np.maximum(gain_halfangle(xi, r, led), th.angle_threshold)
            return prob_incidence_within(r, led.theta_fov, model, led) - prob_incidence_within(
                r, floored, model, led
            )

        num = integrate_1d(below_level, start, model.d_max, replace(spec, breakpoints=bps))
        return float(np.clip(num / den, 0.0, 1.0))

    return _per_level(x, one)


def cdf_strong_twobit_inst(
    x,
    model: MobilityModel,
    led: LedGeometry,
    th: FeedbackThresholds,
    *,
    spec: QuadratureSpec | None = None,
):
    """Gain CDF in the strong set of instantaneous two-bit feedback.

    Membership: distance at most the threshold and incidence-angle magnitude
    at most the angle threshold.
    """
    if spec is None:
        spec = QuadratureSpec()
    static = fov_window_breakpoints(th.angle_threshold, model, led)
    den = integrate_1d(
        lambda r: prob_incidence_within(r, th.angle_threshold, model, led),
        model.d_min,
        th.dist_threshold,
        replace(spec, breakpoints=static),
    )
    if den <= 0.0:
        raise DegenerateConditionError("strong selection set has zero probability")
    cos_th_sq = np.cos(th.angle_threshold) ** 2

    def one(xi: float) -> float:
        if xi <= 0.0:
            return 0.0
        bps = static + (
            edge_gain_distance(xi, led, cos_sq=cos_th_sq, lo=model.d_min, hi=th.dist_threshold),
            edge_gain_distance(xi, led, cos_sq=1.0, lo=model.d_min, hi=th.dist_threshold),
        )
        survive = integrate_1d(
            lambda r: prob_incidence_within(
                r, np.minimum(gain_halfangle(xi, r, led), th.angle_threshold), model, led
            ),
            model.d_min,
            th.dist_threshold,
            replace(spec, breakpoints=bps),
        )
        return float(np.clip(1.0 - survive / den, 0.0, 1.0))

    return _per_level(x, one)


def _bound_crossing_radius(offset: float, bound: float, ell: float) -> float:
    """Distance where the aim angle plus ``offset`` crosses a mean-angle bound."""
    u = np.pi + offset - bound
    if u <= 0.0:
        return np.inf
    if u >= np.pi / 2:
        return 0.0
    return ell / np.tan(u)


def ramp_cdf_integral(
    offset: float, y: float, z: float, model: MobilityModel, led: LedGeometry
) -> float:
    """Closed form of the mean-angle CDF integrated over distance.

    Computes the integral over ``r`` in [y, z] of the uniform mean-angle CDF
    evaluated at ``pi - arctan(ell / r) + offset``.  The integrand is 0 up to
    the radius where the argument reaches the lower angle bound, ramps while
    it sweeps the uniform range, and is 1 beyond; the ramp piece integrates
    in closed form through the arctangent antiderivative.
    """
    if model.delta_mean <= 0.0:
        raise InvalidParameterError("mean-angle range must be nondegenerate")
    if y > z:
        raise InvalidParameterError(f"integration bounds out of order: {y} > {z}")
    ell = led.ell
    r0 = _bound_crossing_radius(offset, model.mean_angle_min, ell)
    r1 = _bound_crossing_radius(offset, model.mean_angle_max, ell)
    lo = min(max(r0, y), z)
    hi = min(max(r1, y), z)

    def anti(v: float) -> float:
        if v == 0.0:
            return -0.5 * ell * np.log(ell * ell) / model.delta_mean
        return (
            (np.pi + offset - model.mean_angle_min) * v
            - 0.5 * ell * np.log(ell * ell + v * v)
            - v * np.arctan(ell / v)
        ) / model.delta_mean

    return (z - hi) + anti(hi) - anti(lo)


def weak_band_measure(
    y: float, model: MobilityModel, led: LedGeometry, th: FeedbackThresholds
) -> float:
    """Integral over [y, d_max] of the probability the mean incidence angle is in the weak band."""
    fov = led.theta_fov
    tt = th.angle_threshold
    z = model.d_max
    return (
        ramp_cdf_integral(fov, y, z, model, led)
        - ramp_cdf_integral(-fov, y, z, model, led)
        - ramp_cdf_integral(tt, y, z, model, led)
        + ramp_cdf_integral(-tt, y, z, model, led)
    )


def strong_band_measure(
    y: float, model: MobilityModel, led: LedGeometry, th: FeedbackThresholds
) -> float:
    """Integral over [y, d_th] of the probability the mean incidence angle is in the strong band."""
    tt = th.angle_threshold
    z = th.dist_threshold
    return ramp_cdf_integral(tt, y, z, model, led) - ramp_cdf_integral(-tt, y, z, model, led)


def mean_angle_bands(
    r: float, model: MobilityModel, led: LedGeometry, th: FeedbackThresholds, subset: str
):
    """Mean-angle intervals putting a user at distance ``r`` into the given selection set."""
    center = np.pi - np.arctan2(led.ell, r)

    def clip(v):
        return float(np.clip(v, model.mean_angle_min, model.mean_angle_max))

    if subset == "weak":
        bands = (
            (clip(center - led.theta_fov), clip(center - th.angle_threshold)),
            (clip(center + th.angle_threshold), clip(center + led.theta_fov)),
        )
    elif subset == "strong":
        bands = ((clip(center - th.angle_threshold), clip(center + th.angle_threshold)),)
    else:
        raise InvalidParameterError(f"unknown selection subset: {subset!r}")
    return tuple(b for b in bands if b[1] > b[0])


def _split_intervals(intervals, cuts):
    out = []
    for lo, hi in intervals:
        if hi <= lo:
            continue
        pts = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
        out.extend(zip(pts[:-1], pts[1:]))
    return out


def _prob_below_given_mean(xi, r, mean, model: MobilityModel, led: LedGeometry):
    """Probability the squared gain is at most ``xi`` given distance and mean angle.

    The instantaneous angle is uniform in a band around the mean, so this is
    one minus the covered fraction of the window where the gain clears the
    level, capped at the field of view.  Piecewise linear in the mean angle.
    """
    center = np.pi - np.arctan2(led.ell, r)
    psi = np.minimum(gain_halfangle(xi, r, led), led.theta_fov)
    dev = model.max_deviation
    if dev == 0.0:
        inside = (mean >= center - psi) & (mean <= center + psi)
        return 1.0 - inside.astype(float)
    lo = mean - dev
    covered = np.clip((center + psi - lo) / (2 * dev), 0.0, 1.0) - np.clip(
        (center - psi - lo) / (2 * dev), 0.0, 1.0
    )
    return 1.0 - covered


def _cdf_twobit_mean(
    x,
    model: MobilityModel,
    led: LedGeometry,
    th: FeedbackThresholds,
    spec: QuadratureSpec | None,
    subset: str,
):
    if spec is None:
        spec = QuadratureSpec()
    if subset == "weak":
        r_lo, r_hi = th.dist_threshold, model.d_max
        measure = lambda y: weak_band_measure(y, model, led, th)
        offsets = (led.theta_fov, -led.theta_fov, th.angle_threshold, -th.angle_threshold)
    else:
        r_lo, r_hi = model.d_min, th.dist_threshold
        measure = lambda y: strong_band_measure(y, model, led, th)
        offsets = (th.angle_threshold, -th.angle_threshold)
    den = measure(r_lo)
    if den <= 0.0:
        raise DegenerateConditionError(f"{subset} selection set has zero probability")
    # Radii where a band edge crosses a mean-angle bound; band clipping kinks there.
    static = tuple(
        _bound_crossing_radius(off, bound, led.ell)
        for off in offsets
        for bound in (model.mean_angle_min, model.mean_angle_max)
    )
    cos_fov_sq = np.cos(led.theta_fov) ** 2
    dev = model.max_deviation

    def one(xi: float) -> float:
        if xi < 0.0:
            return 0.0
        split = edge_gain_distance(xi, led, cos_sq=1.0, lo=r_lo, hi=r_hi)
        total = measure(split)
        if split > r_lo:

            def integrand(r, mean):
                return _prob_below_given_mean(xi, r, mean, model, led)

            def inner_support(r: float):
                bands = mean_angle_bands(r, model, led, th, subset)
                center = np.pi - np.arctan2(led.ell, r)
                psi = float(np.minimum(gain_halfangle(xi, r, led), led.theta_fov))
                cuts = (
                    center - psi - dev,
                    center - psi + dev,
                    center + psi - dev,
                    center + psi + dev,
                )
                return _split_intervals(bands, cuts)

            bps = static + (edge_gain_distance(xi, led, cos_sq=cos_fov_sq, lo=r_lo, hi=r_hi),)
            dbl = integrate_2d_nested(
                integrand, (r_lo, split), inner_support, replace(spec, breakpoints=bps)
            )
            total += dbl / model.delta_mean
        return float(np.clip(total / den, 0.0, 1.0))

    return _per_level(x, one)


def cdf_weak_twobit_mean(
    x,
    model: MobilityModel,
    led: LedGeometry,
    th: FeedbackThresholds,
    *,
    spec: QuadratureSpec | None = None,
):
    """Gain CDF in the weak set of mean-orientation two-bit feedback.

    Membership uses the mean incidence angle, so the instantaneous angle can
    still fall outside the field of view: the distribution has an atom at
    zero gain.
    """
    return _cdf_twobit_mean(x, model, led, th, spec, "weak")


def cdf_strong_twobit_mean(
    x,
    model: MobilityModel,
    led: LedGeometry,
    th: FeedbackThresholds,
    *,
    spec: QuadratureSpec | None = None,
):
    """Gain CDF in the strong set of mean-orientation two-bit feedback."""
    return _cdf_twobit_mean(x, model, led, th, spec, "strong")
