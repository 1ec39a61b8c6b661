"""Dual-path evaluation of NOMA over visible-light downlinks with randomly oriented receivers.

Closed-form channel-gain distributions and outage/sum-rate expressions are
paired with a vectorized Monte Carlo engine so every analytic result can be
cross-validated against simulation under identical conditioning.
"""

from .errors import DegenerateConditionError, InvalidParameterError, NumericFailureError
from .gain_cdf import (
    FeedbackThresholds,
    cdf_gain_ranked,
    cdf_gain_unordered,
    cdf_strong_twobit_inst,
    cdf_strong_twobit_mean,
    cdf_weak_twobit_inst,
    cdf_weak_twobit_mean,
    edge_gain_distance,
    gain_halfangle,
    mean_angle_bands,
    ramp_cdf_integral,
    strong_band_measure,
    weak_band_measure,
)
from .geometry import (
    LedGeometry,
    UserState,
    channel_constant,
    dc_gain,
    incidence_angle,
    irradiance_angle,
    lambertian_order,
    mean_dc_gain,
)
from .mobility import (
    MobilityModel,
    NonzeroCount,
    cdf_vertical_angle,
    nonzero_gain_probability,
    pmf_nonzero_count,
    pmf_nonzero_count_truncated,
    prob_incidence_within,
    sample_user,
    sample_users,
)
from .quadrature import (
    EmpiricalDistribution,
    QuadratureSpec,
    integrate_1d,
    integrate_2d_nested,
    ks_distance,
    ks_distance_bound,
)
from .rates import (
    ANALYTIC_MODES,
    FEEDBACK_MODES,
    GROUP_MODES,
    INDIVIDUAL_MODES,
    OMA_MODES,
    NomaConfig,
    achievable_rate,
    canonical_feedback_mode,
    oma_gain_thresholds,
    outage_gain_thresholds,
    outage_pair_analytic,
    required_sinr,
    sinr_cross,
    sinr_own,
    sum_rate_noma,
    sum_rate_oma,
)
from .simulate import (
    CDF_SAMPLE_FAMILIES,
    EstimateResult,
    NoiseConfig,
    TrialOutcome,
    apply_noise,
    collect_scheduled_gains,
    estimate,
    nonzero_count_histogram,
    rate_stats,
    run_group_trial,
    run_individual_trial,
)

__version__ = "0.1.0"
