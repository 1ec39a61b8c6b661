"""Monte Carlo trial engine for all six feedback/scheduling modes.

Trials run in vectorized chunks of fixed size.  Each chunk owns a generator
derived from the root seed and the chunk index, and chunk results are
combined in chunk order, so aggregates are bit-identical for a given
(seed, configuration) regardless of the worker count.  The per-trial
operations wrap the same chunk kernels with a chunk of size one.

Observables can be perturbed by measurement noise; scheduling and ranking
then use the noisy values while outage is always judged on the true gains.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateConditionError, InvalidParameterError
from .geometry import LedGeometry, UserState, dc_gain, incidence_angle, mean_dc_gain
from .mobility import MobilityModel, sample_users
from .rates import GROUP_MODES, INDIVIDUAL_MODES, NomaConfig, outage_gain_thresholds

__all__ = [
    "CHUNK_TRIALS",
    "CDF_SAMPLE_FAMILIES",
    "TrialOutcome",
    "NoiseConfig",
    "EstimateResult",
    "apply_noise",
    "run_individual_trial",
    "run_group_trial",
    "collect_scheduled_gains",
    "rate_stats",
    "estimate",
    "nonzero_count_histogram",
]

CHUNK_TRIALS = 1 << 16

CDF_SAMPLE_FAMILIES = (
    "unordered",
    "ordered",
    "twobit_inst_weak",
    "twobit_inst_strong",
    "twobit_mean_weak",
    "twobit_mean_strong",
)


@dataclass(frozen=True)
class NoiseConfig:
    """Feedback measurement noise: distance in meters, angle in degrees."""

    sigma_d: float = 0.0
    sigma_phi: float = 0.0
    enabled: bool = False

    def __post_init__(self):
        if self.sigma_d < 0 or self.sigma_phi < 0:
            raise InvalidParameterError("noise standard deviations must be nonnegative")


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one transmission period.

    Outage flags and user states are None when the trial was not scheduled.
    Gains are the true channel gains of the picked users (0 when a pick does
    not exist).
    """

    scheduled: bool
    weak_user: UserState | None
    strong_user: UserState | None
    outage_weak: bool | None
    outage_strong: bool | None
    gain_weak: float
    gain_strong: float


@dataclass(frozen=True)
class EstimateResult:
    """Aggregate of a Monte Carlo run plus the observed scheduling probability."""

    value: object
    stderr: object
    sched_prob: float
    trials: int
    scheduled_trials: int


class _Batch(NamedTuple):
    scheduled: np.ndarray
    gain_sq_weak: np.ndarray
    gain_sq_strong: np.ndarray
    weak_idx: np.ndarray
    strong_idx: np.ndarray
    dist: np.ndarray
    mean: np.ndarray
    inst: np.ndarray


def _observe(dist, mean, inst, noise: NoiseConfig | None, rng):
    """Noisy copies of the observables; draws three normals per user when enabled."""
    if noise is None or not noise.enabled:
        return dist, mean, inst
    sigma_phi = math.radians(noise.sigma_phi)
    # Observed distance is clamped at zero so the geometry stays on its branch.
    dist_obs = np.maximum(dist + noise.sigma_d * rng.standard_normal(dist.shape), 0.0)
    mean_obs = mean + sigma_phi * rng.standard_normal(mean.shape)
    inst_obs = inst + sigma_phi * rng.standard_normal(inst.shape)
    return dist_obs, mean_obs, inst_obs


def apply_noise(user: UserState, noise: NoiseConfig, rng) -> UserState:
    """Observed state of one user under measurement noise; identity when disabled."""
    d, mean, inst = _observe(
        np.asarray([user.dist]), np.asarray([user.mean_angle]), np.asarray([user.inst_angle]),
        noise, rng,
    )
    return UserState(dist=float(d[0]), mean_angle=float(mean[0]), inst_angle=float(inst[0]))


def _individual_batch(rng, n, total_users, cfg, model, led, noise) -> _Batch:
    d, mean, inst = sample_users(model, rng, (n, total_users))
    gain_sq = np.square(dc_gain(UserState(d, mean, inst), led))
    nonzero = np.count_nonzero(gain_sq > 0.0, axis=1)
    d_obs, mean_obs, inst_obs = _observe(d, mean, inst, noise, rng)
    rows = np.arange(n)
    if cfg.feedback_mode == "DistanceOnly":
        # Farther observed distance = presumed weaker; every trial is scheduled.
        order = np.argsort(-d_obs, axis=1, kind="stable")
        weak_idx = order[:, cfg.weak_rank - 1]
        strong_idx = order[:, cfg.strong_rank - 1]
        scheduled = np.ones(n, dtype=bool)
        have_pick = scheduled
    else:
        if cfg.feedback_mode == "FullCSI":
            metric = np.square(dc_gain(UserState(d_obs, mean_obs, inst_obs), led))
        else:
            metric = np.square(mean_dc_gain(d_obs, mean_obs, led))
        order = np.argsort(metric, axis=1, kind="stable")
        apparent = np.count_nonzero(metric > 0.0, axis=1)
        # Rank among the apparent-nonzero pool; when it is shorter than the
        # requested rank, fall back to the strongest available pick.
        base = total_users - apparent
        weak_pos = base + np.minimum(cfg.weak_rank, np.maximum(apparent, 1)) - 1
        strong_pos = base + np.minimum(cfg.strong_rank, np.maximum(apparent, 1)) - 1
        weak_idx = np.take_along_axis(order, np.clip(weak_pos, 0, total_users - 1)[:, None], 1)[:, 0]
        strong_idx = np.take_along_axis(order, np.clip(strong_pos, 0, total_users - 1)[:, None], 1)[:, 0]
        scheduled = nonzero >= cfg.strong_rank
        have_pick = apparent > 0
    gain_sq_weak = np.where(have_pick, gain_sq[rows, weak_idx], 0.0)
    gain_sq_strong = np.where(have_pick, gain_sq[rows, strong_idx], 0.0)
    return _Batch(scheduled, gain_sq_weak, gain_sq_strong, weak_idx, strong_idx, d, mean, inst)


def _uniform_pick(mask, u):
    """Index of a uniformly chosen True entry per row, and whether one exists."""
    count = mask.sum(axis=1)
    target = (u * np.maximum(count, 1)).astype(np.int64) + 1
    idx = np.argmax(np.cumsum(mask, axis=1) == target[:, None], axis=1)
    return idx, count > 0


def _group_masks(cfg, led, d_obs, mean_obs, inst_obs):
    th = cfg.thresholds
    if cfg.feedback_mode == "OneBitDistance":
        weak_mask = d_obs > th.dist_threshold
        return weak_mask, ~weak_mask
    angle_src = inst_obs if cfg.feedback_mode == "TwoBitInstantaneous" else mean_obs
    theta_obs = np.abs(incidence_angle(d_obs, angle_src, led.ell))
    far = d_obs > th.dist_threshold
    weak_mask = far & (theta_obs > th.angle_threshold) & (theta_obs <= led.theta_fov)
    strong_mask = ~far & (theta_obs <= th.angle_threshold)
    return weak_mask, strong_mask


def _group_batch(rng, n, total_users, cfg, model, led, noise) -> _Batch:
    d, mean, inst = sample_users(model, rng, (n, total_users))
    gain_sq = np.square(dc_gain(UserState(d, mean, inst), led))
    d_obs, mean_obs, inst_obs = _observe(d, mean, inst, noise, rng)
    weak_mask, strong_mask = _group_masks(cfg, led, d_obs, mean_obs, inst_obs)
    u = rng.random((n, 2))
    weak_idx, weak_ok = _uniform_pick(weak_mask, u[:, 0])
    strong_idx, strong_ok = _uniform_pick(strong_mask, u[:, 1])
    scheduled = weak_ok & strong_ok
    rows = np.arange(n)
    gain_sq_weak = np.where(weak_ok, gain_sq[rows, weak_idx], 0.0)
    gain_sq_strong = np.where(strong_ok, gain_sq[rows, strong_idx], 0.0)
    return _Batch(scheduled, gain_sq_weak, gain_sq_strong, weak_idx, strong_idx, d, mean, inst)


def _batch_fn(mode: str):
    if mode in INDIVIDUAL_MODES:
        return _individual_batch
    if mode in GROUP_MODES:
        return _group_batch
    raise InvalidParameterError(f"unknown feedback mode {mode!r}")


def _validate_trial_args(total_users: int, cfg: NomaConfig):
    if total_users < 1:
        raise InvalidParameterError("need at least one user")
    if cfg.strong_rank > total_users:
        raise InvalidParameterError("strong_rank exceeds total_users")
    if cfg.feedback_mode in GROUP_MODES and cfg.thresholds is None:
        raise InvalidParameterError("group modes need feedback thresholds")


def _outcome_from_batch(batch: _Batch, cfg: NomaConfig) -> TrialOutcome:
    threshold_weak, threshold_strong, _ = outage_gain_thresholds(cfg)
    scheduled = bool(batch.scheduled[0])
    wi, si = int(batch.weak_idx[0]), int(batch.strong_idx[0])
    gw_sq, gs_sq = float(batch.gain_sq_weak[0]), float(batch.gain_sq_strong[0])

    def state(k: int) -> UserState:
        return UserState(
            dist=float(batch.dist[0, k]),
            mean_angle=float(batch.mean[0, k]),
            inst_angle=float(batch.inst[0, k]),
        )

    return TrialOutcome(
        scheduled=scheduled,
        weak_user=state(wi) if scheduled else None,
        strong_user=state(si) if scheduled else None,
        outage_weak=(not gw_sq > threshold_weak) if scheduled else None,
        outage_strong=(not gs_sq > threshold_strong) if scheduled else None,
        gain_weak=math.sqrt(gw_sq),
        gain_strong=math.sqrt(gs_sq),
    )


def run_individual_trial(total_users, cfg, model, led, noise, rng) -> TrialOutcome:
    """One trial of rank-based scheduling; consumes draws from ``rng``."""
    if cfg.feedback_mode not in INDIVIDUAL_MODES:
        raise InvalidParameterError(f"not an individual mode: {cfg.feedback_mode!r}")
    _validate_trial_args(total_users, cfg)
    return _outcome_from_batch(
        _individual_batch(rng, 1, total_users, cfg, model, led, noise), cfg
    )


def run_group_trial(total_users, cfg, model, led, noise, rng) -> TrialOutcome:
    """One trial of threshold-feedback group scheduling."""
    if cfg.feedback_mode not in GROUP_MODES:
        raise InvalidParameterError(f"not a group mode: {cfg.feedback_mode!r}")
    _validate_trial_args(total_users, cfg)
    return _outcome_from_batch(_group_batch(rng, 1, total_users, cfg, model, led, noise), cfg)


def _chunk_sizes(trials: int):
    full, rem = divmod(trials, CHUNK_TRIALS)
    return [CHUNK_TRIALS] * full + ([rem] if rem else [])


def _chunk_rng(seed: int, index: int):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _map_chunks(fn, trials: int, workers: int | None):
    sizes = _chunk_sizes(trials)
    if workers is None:
        workers = min(8, os.cpu_count() or 1)
    if workers <= 1 or len(sizes) <= 1:
        return [fn(c, size) for c, size in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def collect_scheduled_gains(
    trials: int,
    cfg: NomaConfig,
    model: MobilityModel,
    led: LedGeometry,
    *,
    total_users: int,
    noise: NoiseConfig | None = None,
    seed: int = 0,
    workers: int | None = None,
):
    """True squared gains of the picked pair over every scheduled trial.

    The picks do not depend on the transmit SNR, so one collection supports
    rate evaluation on a whole SNR grid via :func:`rate_stats`.
    Returns ``(gain_sq_weak, gain_sq_strong, trials)``.
    """
    if trials < 1:
        raise InvalidParameterError("need at least one trial")
    _validate_trial_args(total_users, cfg)
    batch = _batch_fn(cfg.feedback_mode)

    def chunk(c: int, size: int):
        b = batch(_chunk_rng(seed, c), size, total_users, cfg, model, led, noise)
        keep = b.scheduled
        return b.gain_sq_weak[keep], b.gain_sq_strong[keep]

    parts = _map_chunks(chunk, trials, workers)
    gain_sq_weak = np.concatenate([p[0] for p in parts])
    gain_sq_strong = np.concatenate([p[1] for p in parts])
    return gain_sq_weak, gain_sq_strong, trials


def rate_stats(gain_sq_weak, gain_sq_strong, trials: int, cfg: NomaConfig) -> EstimateResult:
    """Mean sum rate over scheduled trials, from collected pick gains."""
    n = gain_sq_weak.size
    if n == 0:
        raise DegenerateConditionError("no scheduled trials")
    threshold_weak, threshold_strong, _ = outage_gain_thresholds(cfg)
    rate = cfg.rate_weak * (gain_sq_weak > threshold_weak) + cfg.rate_strong * (
        gain_sq_strong > threshold_strong
    )
    mean = float(rate.mean())
    stderr = float(np.sqrt(rate.var(ddof=1) / n)) if n > 1 else 0.0
    return EstimateResult(mean, stderr, n / trials, trials, n)


def _outage_stats(gain_sq_weak, gain_sq_strong, trials: int, cfg: NomaConfig) -> EstimateResult:
    n = gain_sq_weak.size
    if n == 0:
        raise DegenerateConditionError("no scheduled trials")
    threshold_weak, threshold_strong, _ = outage_gain_thresholds(cfg)
    p_weak = float(np.mean(gain_sq_weak <= threshold_weak))
    p_strong = float(np.mean(gain_sq_strong <= threshold_strong))

    def se(p):
        return math.sqrt(p * (1.0 - p) / (n - 1)) if n > 1 else 0.0

    return EstimateResult((p_weak, p_strong), (se(p_weak), se(p_strong)), n / trials, trials, n)


def _single_user_condition(family: str, cfg, model, led):
    """Membership test on true observables for single-user conditional sampling."""

    def membership(d, mean, inst, gain_sq):
        if family == "unordered":
            return gain_sq > 0.0
        th = cfg.thresholds
        if th is None:
            raise InvalidParameterError("set-conditioned families need feedback thresholds")
        angle_src = inst if family.startswith("twobit_inst") else mean
        theta = np.abs(incidence_angle(d, angle_src, led.ell))
        if family.endswith("weak"):
            return (d > th.dist_threshold) & (theta > th.angle_threshold) & (
                theta <= led.theta_fov
            )
        return (d <= th.dist_threshold) & (theta <= th.angle_threshold)

    return membership


def _cdf_sample_chunks(family, trials, cfg, model, led, rank, seed, workers, total_users):
    if family == "ordered":
        if rank is None:
            rank = cfg.strong_rank
        if not 1 <= rank <= cfg.strong_rank:
            raise InvalidParameterError("rank must lie in [1, strong_rank]")

        def chunk(c: int, size: int):
            rng = _chunk_rng(seed, c)
            d, mean, inst = sample_users(model, rng, (size, total_users))
            gain_sq = np.square(dc_gain(UserState(d, mean, inst), led))
            nonzero = np.count_nonzero(gain_sq > 0.0, axis=1)
            keep = nonzero >= cfg.strong_rank
            ordered = np.sort(gain_sq[keep], axis=1)
            pos = total_users - nonzero[keep] + rank - 1
            return np.take_along_axis(ordered, pos[:, None], 1)[:, 0]

    else:
        membership = _single_user_condition(family, cfg, model, led)

        def chunk(c: int, size: int):
            rng = _chunk_rng(seed, c)
            d, mean, inst = sample_users(model, rng, (size,))
            gain_sq = np.square(dc_gain(UserState(d, mean, inst), led))
            return gain_sq[membership(d, mean, inst, gain_sq)]

    return np.concatenate(_map_chunks(chunk, trials, workers))


def estimate(
    metric: str,
    trials: int,
    cfg: NomaConfig,
    model: MobilityModel,
    led: LedGeometry,
    *,
    total_users: int,
    noise: NoiseConfig | None = None,
    seed: int = 0,
    workers: int | None = None,
    family: str | None = None,
    rank: int | None = None,
) -> EstimateResult:
    """Monte Carlo estimate of a metric with its standard error.

    ``sum_rate`` and ``outage_pair`` average over scheduled trials, matching
    the conditioning of the analytic path, and report the scheduling
    probability alongside.  ``conditional_cdf_samples`` returns raw squared
    gains drawn under the conditioning of the ``family`` (one of
    ``CDF_SAMPLE_FAMILIES``); ``rank`` applies to the ``ordered`` family.
    """
    if trials < 1:
        raise InvalidParameterError("need at least one trial")
    if metric in ("sum_rate", "outage_pair"):
        collected = collect_scheduled_gains(
            trials, cfg, model, led,
            total_users=total_users, noise=noise, seed=seed, workers=workers,
        )
        stats = rate_stats if metric == "sum_rate" else _outage_stats
        return stats(*collected, cfg)
    if metric == "conditional_cdf_samples":
        if family not in CDF_SAMPLE_FAMILIES:
            raise InvalidParameterError(
                f"family must be one of {CDF_SAMPLE_FAMILIES}, got {family!r}"
            )
        samples = _cdf_sample_chunks(
            family, trials, cfg, model, led, rank, seed, workers, total_users
        )
        if samples.size == 0:
            raise DegenerateConditionError("conditioning event never occurred")
        return EstimateResult(samples, 0.0, samples.size / trials, trials, samples.size)
    raise InvalidParameterError(f"unknown metric {metric!r}")


def nonzero_count_histogram(
    trials: int,
    total_users: int,
    model: MobilityModel,
    led: LedGeometry,
    *,
    seed: int = 0,
    workers: int | None = None,
):
    """Histogram (length ``total_users + 1``) of how many users have nonzero gain per trial."""
    if trials < 1:
        raise InvalidParameterError("need at least one trial")

    def chunk(c: int, size: int):
        rng = _chunk_rng(seed, c)
        d, mean, inst = sample_users(model, rng, (size, total_users))
        theta = np.abs(incidence_angle(d, inst, led.ell))
        # Equivalent to dc_gain > 0: inside the view cone with positive cosine.
        lit = (theta <= led.theta_fov) & (theta < np.pi / 2)
        return np.bincount(lit.sum(axis=1), minlength=total_users + 1)

    counts = _map_chunks(chunk, trials, workers)
    return np.sum(counts, axis=0)
