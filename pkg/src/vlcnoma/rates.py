"""NOMA power-domain pairing: SINR models, outage thresholds, and sum rates.

Two scheduled users share one transmission: the weak user gets the larger
power fraction and treats the strong user's signal as interference; the
strong user first decodes and removes the weak user's signal, then its own.
For a target-rate pair this reduces each user's outage event to its squared
channel gain falling below a fixed threshold, which is where the analytic
CDF families plug in.  An orthogonal time-sharing baseline with the same
user selection is provided for comparison.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .gain_cdf import (
    FeedbackThresholds,
    cdf_gain_ranked,
    cdf_strong_twobit_inst,
    cdf_strong_twobit_mean,
    cdf_weak_twobit_inst,
    cdf_weak_twobit_mean,
)
from .geometry import LedGeometry
from .mobility import MobilityModel, NonzeroCount, nonzero_gain_probability
from .quadrature import QuadratureSpec

__all__ = [
    "INDIVIDUAL_MODES",
    "GROUP_MODES",
    "FEEDBACK_MODES",
    "ANALYTIC_MODES",
    "OMA_MODES",
    "canonical_feedback_mode",
    "NomaConfig",
    "achievable_rate",
    "required_sinr",
    "sinr_cross",
    "sinr_own",
    "outage_gain_thresholds",
    "oma_gain_thresholds",
    "outage_pair_analytic",
    "sum_rate_noma",
    "sum_rate_oma",
]

INDIVIDUAL_MODES = ("FullCSI", "MeanAngle", "DistanceOnly")
GROUP_MODES = ("TwoBitInstantaneous", "TwoBitMean", "OneBitDistance")
FEEDBACK_MODES = INDIVIDUAL_MODES + GROUP_MODES
# Modes whose outage probabilities have a closed-form path.
ANALYTIC_MODES = ("FullCSI", "TwoBitInstantaneous", "TwoBitMean")
OMA_MODES = ("time_shared", "paper_literal")

# Time-sharing splits the period between the two served users.
OMA_TIME_SHARE = 2


def canonical_feedback_mode(name: str) -> str:
    """Map a case-insensitive mode name to its canonical spelling."""
    lookup = {mode.lower(): mode for mode in FEEDBACK_MODES}
    try:
        return lookup[str(name).strip().lower()]
    except KeyError:
        raise InvalidParameterError(
            f"unknown feedback mode {name!r}; expected one of {', '.join(FEEDBACK_MODES)}"
        ) from None


@dataclass(frozen=True)
class NomaConfig:
    """Pairing parameters: power split, target rates, transmit SNR, and user selection.

    ``snr`` is the linear electrical transmit SNR.  ``weak_rank`` and
    ``strong_rank`` select users by ascending-gain rank in the individual
    scheduling modes; ``thresholds`` drives the group modes.  Power
    fractions are taken as given; pass ``normalize_power=True`` to rescale
    them so their squares sum to one, otherwise a deviation beyond 1e-6
    only warns.
    """

    beta_weak: float
    beta_strong: float
    rate_weak: float
    rate_strong: float
    snr: float
    weak_rank: int = 1
    strong_rank: int = 2
    thresholds: FeedbackThresholds | None = None
    feedback_mode: str = "FullCSI"
    normalize_power: bool = False

    def __post_init__(self):
        object.__setattr__(self, "feedback_mode", canonical_feedback_mode(self.feedback_mode))
        if not self.beta_weak > self.beta_strong > 0:
            raise InvalidParameterError("need beta_weak > beta_strong > 0")
        if self.rate_weak <= 0 or self.rate_strong <= 0:
            raise InvalidParameterError("target rates must be positive")
        if self.snr <= 0:
            raise InvalidParameterError("transmit SNR must be positive")
        if not 1 <= self.weak_rank < self.strong_rank:
            raise InvalidParameterError("need 1 <= weak_rank < strong_rank")
        power = self.beta_weak**2 + self.beta_strong**2
        if self.normalize_power:
            scale = 1.0 / np.sqrt(power)
            object.__setattr__(self, "beta_weak", self.beta_weak * scale)
            object.__setattr__(self, "beta_strong", self.beta_strong * scale)
        elif abs(power - 1.0) > 1e-6:
            warnings.warn(
                f"power fractions have squared sum {power:.6f}, not 1; "
                "pass normalize_power=True to rescale",
                stacklevel=2,
            )


def achievable_rate(sinr):
    """Achievable rate in bits/s/Hz for an intensity-modulated optical link."""
    return 0.5 * np.log2(1.0 + np.e / (2.0 * np.pi) * np.asarray(sinr, dtype=float))


def required_sinr(target_rate):
    """SINR at which :func:`achievable_rate` meets the target rate exactly."""
    return (np.exp2(2.0 * np.asarray(target_rate, dtype=float)) - 1.0) * 2.0 * np.pi / np.e


def _sinr(h, betas, numerator_index, interferer_set, snr):
    betas = np.asarray(betas, dtype=float)
    h_sq = np.square(np.asarray(h, dtype=float))
    interference = h_sq * sum(betas[k] ** 2 for k in interferer_set)
    return h_sq * betas[numerator_index] ** 2 / (interference + 1.0 / snr)


def sinr_cross(h, betas, target_index, stronger_set, snr):
    """SINR when decoding a weaker user's message at a receiver with gain ``h``.

    The numerator carries the weaker user's power fraction; every user in
    ``stronger_set`` (those decoded later) contributes interference.
    """
    return _sinr(h, betas, target_index, stronger_set, snr)


def sinr_own(h, betas, index, stronger_set, snr):
    """SINR when a user decodes its own message after removing weaker ones.

    With an empty ``stronger_set`` this reduces to ``h^2 beta^2 snr``.
    """
    return _sinr(h, betas, index, stronger_set, snr)


def outage_gain_thresholds(cfg: NomaConfig):
    """Squared-gain levels below which each user of the pair is in outage.

    Returns ``(threshold_weak, threshold_strong, feasible)``.  The split is
    infeasible when the weak user's target cannot be met at any gain because
    interference scales with the same gain; both thresholds are then
    infinite and callers should report certain outage.
    """
    eps_weak = float(required_sinr(cfg.rate_weak))
    eps_strong = float(required_sinr(cfg.rate_strong))
    margin = cfg.beta_weak**2 - cfg.beta_strong**2 * eps_weak
    if margin <= 0.0:
        return np.inf, np.inf, False
    threshold_weak = eps_weak / cfg.snr / margin
    threshold_strong = max(threshold_weak, eps_strong / (cfg.snr * cfg.beta_strong**2))
    return threshold_weak, threshold_strong, True


def oma_gain_thresholds(cfg: NomaConfig, mode: str = "time_shared"):
    """Squared-gain outage levels for the orthogonal baseline, per user.

    ``time_shared`` gives each user 1/L of the period (L = 2) at full power,
    so the rate inversion uses L-scaled targets and the transmit SNR.  The
    ``paper_literal`` variant inverts the plain rate formula with the gain
    standing in for the whole SINR: no SNR factor, no time split.
    """
    if mode == "time_shared":
        return (
            float(required_sinr(OMA_TIME_SHARE * cfg.rate_weak)) / cfg.snr,
            float(required_sinr(OMA_TIME_SHARE * cfg.rate_strong)) / cfg.snr,
        )
    if mode == "paper_literal":
        return float(required_sinr(cfg.rate_weak)), float(required_sinr(cfg.rate_strong))
    raise InvalidParameterError(f"unknown OMA mode {mode!r}; expected one of {OMA_MODES}")


def _cdf_pair(
    cfg: NomaConfig,
    model: MobilityModel,
    led: LedGeometry,
    x_weak: float,
    x_strong: float,
    total_users: int | None,
    spec: QuadratureSpec | None,
):
    """Evaluate the scheduling mode's per-user gain CDFs at two levels."""
    mode = cfg.feedback_mode
    if mode == "FullCSI":
        if total_users is None:
            raise InvalidParameterError("individual analytic path needs total_users")
        if cfg.strong_rank > total_users:
            raise InvalidParameterError("strong_rank exceeds total_users")
        p = nonzero_gain_probability(model, led)
        count = NonzeroCount(total_users, p, k_min=cfg.strong_rank)
        return (
            float(cdf_gain_ranked(x_weak, cfg.weak_rank, model, led, count, spec=spec)),
            float(cdf_gain_ranked(x_strong, cfg.strong_rank, model, led, count, spec=spec)),
        )
    if mode in ("TwoBitInstantaneous", "TwoBitMean"):
        if cfg.thresholds is None:
            raise InvalidParameterError("group modes need feedback thresholds")
        if mode == "TwoBitInstantaneous":
            weak_cdf, strong_cdf = cdf_weak_twobit_inst, cdf_strong_twobit_inst
        else:
            weak_cdf, strong_cdf = cdf_weak_twobit_mean, cdf_strong_twobit_mean
        return (
            float(weak_cdf(x_weak, model, led, cfg.thresholds, spec=spec)),
            float(strong_cdf(x_strong, model, led, cfg.thresholds, spec=spec)),
        )
    raise InvalidParameterError(
        f"no analytic outage path for mode {mode!r}; use the Monte Carlo engine"
    )


def outage_pair_analytic(
    cfg: NomaConfig,
    model: MobilityModel,
    led: LedGeometry,
    *,
    total_users: int | None = None,
    spec: QuadratureSpec | None = None,
):
    """Closed-form outage probabilities (weak, strong) for the scheduled pair."""
    threshold_weak, threshold_strong, feasible = outage_gain_thresholds(cfg)
    if not feasible:
        return 1.0, 1.0
    return _cdf_pair(cfg, model, led, threshold_weak, threshold_strong, total_users, spec)


def sum_rate_noma(p_out_weak: float, p_out_strong: float, cfg: NomaConfig) -> float:
    """Expected sum rate given the pair's outage probabilities."""
    if not 0.0 <= p_out_weak <= 1.0 or not 0.0 <= p_out_strong <= 1.0:
        raise InvalidParameterError("outage probabilities must lie in [0, 1]")
    return (1.0 - p_out_weak) * cfg.rate_weak + (1.0 - p_out_strong) * cfg.rate_strong


def sum_rate_oma(
    cfg: NomaConfig,
    model: MobilityModel,
    led: LedGeometry,
    mode: str = "time_shared",
    *,
    total_users: int | None = None,
    spec: QuadratureSpec | None = None,
) -> float:
    """Sum rate of the orthogonal baseline serving the same selected pair."""
    t_weak, t_strong = oma_gain_thresholds(cfg, mode)
    p_weak, p_strong = _cdf_pair(cfg, model, led, t_weak, t_strong, total_users, spec)
    return (1.0 - p_weak) * cfg.rate_weak + (1.0 - p_strong) * cfg.rate_strong
