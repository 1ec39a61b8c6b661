"""Monte Carlo engine: trial semantics, conditioning, noise, and determinism."""

import numpy as np
import pytest
from scipy import stats

from vlcnoma import (
    DegenerateConditionError,
    FeedbackThresholds,
    InvalidParameterError,
    LedGeometry,
    MobilityModel,
    NoiseConfig,
    NonzeroCount,
    UserState,
    apply_noise,
    collect_scheduled_gains,
    dc_gain,
    estimate,
    incidence_angle,
    ks_distance,
    nonzero_count_histogram,
    nonzero_gain_probability,
    outage_pair_analytic,
    pmf_nonzero_count,
    prob_incidence_within,
    rate_stats,
    run_group_trial,
    run_individual_trial,
    sum_rate_noma,
)
from vlcnoma.quadrature import QuadratureSpec, integrate_1d
from vlcnoma.gain_cdf import cdf_gain_ranked
from tests.conftest import make_noma


class TestApplyNoise:
    def test_disabled_is_identity(self):
        user = UserState(3.0, 1.2, 1.4)
        out = apply_noise(user, NoiseConfig(0.05, 2.5, enabled=False), np.random.default_rng(0))
        assert out == user

    def test_zero_sigma_is_identity(self):
        user = UserState(3.0, 1.2, 1.4)
        out = apply_noise(user, NoiseConfig(0.0, 0.0, enabled=True), np.random.default_rng(0))
        assert out.dist == user.dist
        assert out.mean_angle == user.mean_angle
        assert out.inst_angle == user.inst_angle

    def test_sample_std_matches_sigma(self):
        noise = NoiseConfig(sigma_d=0.05, sigma_phi=2.5, enabled=True)
        rng = np.random.default_rng(1)
        user = UserState(5.0, 1.3, 1.3)
        draws = np.array([apply_noise(user, noise, rng).dist for _ in range(200_000)])
        assert np.std(draws - 5.0) == pytest.approx(0.05, rel=0.01)

    def test_angle_sigma_in_degrees(self):
        noise = NoiseConfig(sigma_d=0.0, sigma_phi=2.5, enabled=True)
        rng = np.random.default_rng(2)
        user = UserState(5.0, 1.3, 1.3)
        draws = np.array(
            [apply_noise(user, noise, rng).inst_angle for _ in range(100_000)]
        )
        assert np.std(draws - 1.3) == pytest.approx(np.radians(2.5), rel=0.02)

    def test_negative_sigma_rejected(self):
        with pytest.raises(InvalidParameterError):
            NoiseConfig(sigma_d=-0.1)


class TestIndividualTrial:
    def test_outcome_structure(self, model_dev25, led_fov50):
        cfg = make_noma()
        out = run_individual_trial(20, cfg, model_dev25, led_fov50, None, np.random.default_rng(3))
        if out.scheduled:
            assert out.outage_weak is not None and out.outage_strong is not None
            assert out.gain_strong >= out.gain_weak >= 0.0
            assert isinstance(out.weak_user, UserState)
        else:
            assert out.outage_weak is None and out.outage_strong is None

    def test_two_users_huge_snr_no_outage(self):
        # wide-open field of view, feasible split, enormous SNR: whenever both
        # gains are nonzero neither user is in outage
        led = LedGeometry(2.0, np.radians(60), 1e-4, np.radians(90))
        model = MobilityModel(0.0, 10.0, np.radians(25), np.radians(155), np.radians(25))
        cfg = make_noma(snr_db=320.0, weak_rank=1, strong_rank=2)
        rng = np.random.default_rng(4)
        seen = 0
        for _ in range(300):
            out = run_individual_trial(2, cfg, model, led, None, rng)
            if out.scheduled and out.gain_weak > 0.0:
                assert out.outage_weak is False
                assert out.outage_strong is False
                seen += 1
        assert seen > 50

    def test_mean_angle_equals_full_csi_at_zero_deviation(self, led_fov50):
        model = MobilityModel(0.0, 10.0, np.radians(25), np.radians(155), 0.0)
        for seed in range(6):
            a = run_individual_trial(
                20, make_noma(mode="FullCSI"), model, led_fov50, None,
                np.random.default_rng(seed),
            )
            b = run_individual_trial(
                20, make_noma(mode="MeanAngle"), model, led_fov50, None,
                np.random.default_rng(seed),
            )
            assert a.scheduled == b.scheduled
            assert a.gain_weak == b.gain_weak
            assert a.gain_strong == b.gain_strong

    def test_group_mode_rejected(self, model_dev25, led_fov50):
        cfg = make_noma(mode="TwoBitInstantaneous", thresholds=FeedbackThresholds(1.0, 0.1))
        with pytest.raises(InvalidParameterError):
            run_individual_trial(20, cfg, model_dev25, led_fov50, None, np.random.default_rng(0))

    def test_population_must_cover_rank(self, model_dev25, led_fov50):
        with pytest.raises(InvalidParameterError):
            run_individual_trial(
                5, make_noma(), model_dev25, led_fov50, None, np.random.default_rng(0)
            )


class TestGroupTrial:
    def test_outcome_structure(self, model_dev30, led_fov60, thresholds_validation):
        cfg = make_noma(mode="TwoBitInstantaneous", thresholds=thresholds_validation)
        out = run_group_trial(20, cfg, model_dev30, led_fov60, None, np.random.default_rng(5))
        if out.scheduled:
            assert out.outage_weak is not None
        else:
            assert out.outage_weak is None

    def test_strong_pick_always_in_fov_for_inst_mode(self, model_dev30, led_fov60):
        # instantaneous-angle membership guarantees nonzero true gain when
        # the angle threshold sits inside the field of view
        th = FeedbackThresholds(1.0, np.radians(6.0))
        cfg = make_noma(mode="TwoBitInstantaneous", thresholds=th)
        rng = np.random.default_rng(6)
        seen = 0
        for _ in range(400):
            out = run_group_trial(20, cfg, model_dev30, led_fov60, None, rng)
            if out.scheduled:
                assert out.gain_strong > 0.0
                seen += 1
        assert seen > 20

    def test_mean_mode_strong_pick_can_be_zero(self, model_dev30, led_fov60):
        # mean-angle membership tolerates instantaneous angles outside the
        # FOV, so zero-gain picks must appear and count as outage
        th = FeedbackThresholds(dist_threshold=9.5, angle_threshold=np.radians(55.0))
        cfg = make_noma(mode="TwoBitMean", thresholds=th)
        rng = np.random.default_rng(7)
        zero_picked = outaged = 0
        for _ in range(600):
            out = run_group_trial(20, cfg, model_dev30, led_fov60, None, rng)
            if out.scheduled and out.gain_strong == 0.0:
                zero_picked += 1
                outaged += bool(out.outage_strong)
        assert zero_picked > 0
        assert outaged == zero_picked

    def test_one_bit_distance_membership(self, model_dev25, led_fov50):
        th = FeedbackThresholds(dist_threshold=5.0, angle_threshold=np.radians(5.0))
        cfg = make_noma(mode="OneBitDistance", thresholds=th)
        rng = np.random.default_rng(8)
        for _ in range(200):
            out = run_group_trial(20, cfg, model_dev25, led_fov50, None, rng)
            if out.scheduled:
                assert out.weak_user.dist > th.dist_threshold
                assert out.strong_user.dist <= th.dist_threshold

    def test_weak_set_empty_when_threshold_at_dmax(self, model_dev25, led_fov50):
        th = FeedbackThresholds(dist_threshold=10.0, angle_threshold=np.radians(5.0))
        cfg = make_noma(mode="OneBitDistance", thresholds=th)
        rng = np.random.default_rng(9)
        outs = [run_group_trial(20, cfg, model_dev25, led_fov50, None, rng) for _ in range(200)]
        assert not any(o.scheduled for o in outs)

    def test_individual_mode_rejected(self, model_dev25, led_fov50):
        with pytest.raises(InvalidParameterError):
            run_group_trial(20, make_noma(), model_dev25, led_fov50, None, np.random.default_rng(0))


class TestEstimate:
    def test_sum_rate_matches_analytic(self, model_dev25, led_fov50):
        cfg = make_noma(snr_db=200.0)
        res = estimate("sum_rate", 200_000, cfg, model_dev25, led_fov50, total_users=20, seed=7)
        p = outage_pair_analytic(cfg, model_dev25, led_fov50, total_users=20)
        assert res.value == pytest.approx(sum_rate_noma(*p, cfg), abs=0.05)

    def test_scheduling_probability_matches_binomial_tail(self, model_dev25, led_fov50):
        trials = 300_000
        res = estimate(
            "sum_rate", trials, make_noma(), model_dev25, led_fov50, total_users=20, seed=11
        )
        p = nonzero_gain_probability(model_dev25, led_fov50)
        tail = float(stats.binom.sf(9, 20, p))
        se = np.sqrt(tail * (1 - tail) / trials)
        assert abs(res.sched_prob - tail) < 3 * se

    def test_outage_pair_metric(self, model_dev25, led_fov50):
        cfg = make_noma(snr_db=200.0)
        res = estimate("outage_pair", 100_000, cfg, model_dev25, led_fov50, total_users=20, seed=3)
        p_weak, p_strong = outage_pair_analytic(cfg, model_dev25, led_fov50, total_users=20)
        assert res.value[0] == pytest.approx(p_weak, abs=0.01)
        assert res.value[1] == pytest.approx(p_strong, abs=0.01)

    def test_all_outage_configuration(self, model_dev25, led_fov50):
        cfg = make_noma(snr_db=60.0)
        res = estimate("sum_rate", 20_000, cfg, model_dev25, led_fov50, total_users=20, seed=5)
        assert res.value == 0.0
        assert res.stderr == 0.0

    def test_zero_scheduled_trials_degenerate(self, model_dev25, led_fov50):
        th = FeedbackThresholds(dist_threshold=10.0, angle_threshold=np.radians(5.0))
        cfg = make_noma(mode="OneBitDistance", thresholds=th)
        with pytest.raises(DegenerateConditionError):
            estimate("sum_rate", 2_000, cfg, model_dev25, led_fov50, total_users=20, seed=0)

    def test_unknown_metric_and_family(self, model_dev25, led_fov50):
        with pytest.raises(InvalidParameterError):
            estimate("median", 1_000, make_noma(), model_dev25, led_fov50, total_users=20)
        with pytest.raises(InvalidParameterError):
            estimate(
                "conditional_cdf_samples", 1_000, make_noma(), model_dev25, led_fov50,
                total_users=20, family="not_a_family",
            )

    def test_trial_count_validated(self, model_dev25, led_fov50):
        with pytest.raises(InvalidParameterError):
            estimate("sum_rate", 0, make_noma(), model_dev25, led_fov50, total_users=20)


class TestDeterminism:
    def test_worker_count_has_no_effect(self, model_dev25, led_fov50):
        cfg = make_noma(snr_db=210.0)
        kw = dict(total_users=20, seed=13)
        one = estimate("sum_rate", 150_000, cfg, model_dev25, led_fov50, workers=1, **kw)
        four = estimate("sum_rate", 150_000, cfg, model_dev25, led_fov50, workers=4, **kw)
        assert one.value == four.value
        assert one.stderr == four.stderr
        assert one.sched_prob == four.sched_prob

    def test_same_seed_same_gains(self, model_dev30, led_fov60, thresholds_validation):
        cfg = make_noma(mode="TwoBitMean", thresholds=thresholds_validation)
        a = collect_scheduled_gains(
            100_000, cfg, model_dev30, led_fov60, total_users=20, seed=17, workers=2
        )
        b = collect_scheduled_gains(
            100_000, cfg, model_dev30, led_fov60, total_users=20, seed=17, workers=5
        )
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_different_seeds_differ(self, model_dev25, led_fov50):
        cfg = make_noma(snr_db=205.0)
        a = estimate("sum_rate", 50_000, cfg, model_dev25, led_fov50, total_users=20, seed=1)
        b = estimate("sum_rate", 50_000, cfg, model_dev25, led_fov50, total_users=20, seed=2)
        assert a.value != b.value


class TestConditionalSamples:
    def test_ordered_rank_gain_matches_analytic(self, model_dev30, led_fov60):
        res = estimate(
            "conditional_cdf_samples", 150_000, make_noma(), model_dev30, led_fov60,
            total_users=20, seed=19, family="ordered", rank=10,
        )
        count = NonzeroCount(20, nonzero_gain_probability(model_dev30, led_fov60), 10)
        d = ks_distance(
            res.value, lambda x: cdf_gain_ranked(x, 10, model_dev30, led_fov60, count)
        )
        assert d < 0.012

    def test_unordered_samples_are_nonzero_gains(self, model_dev30, led_fov60):
        res = estimate(
            "conditional_cdf_samples", 20_000, make_noma(), model_dev30, led_fov60,
            total_users=20, seed=21, family="unordered",
        )
        assert np.all(res.value > 0.0)

    def test_mean_weak_family_keeps_atom(self, model_dev30, led_fov60, thresholds_validation):
        cfg = make_noma(mode="TwoBitMean", thresholds=thresholds_validation)
        res = estimate(
            "conditional_cdf_samples", 50_000, cfg, model_dev30, led_fov60,
            total_users=20, seed=23, family="twobit_mean_weak",
        )
        zero_frac = np.mean(res.value == 0.0)
        assert zero_frac == pytest.approx(0.1457, abs=0.01)

    def test_inst_weak_family_matches_membership(self, model_dev30, led_fov60, thresholds_validation):
        cfg = make_noma(thresholds=thresholds_validation)
        res = estimate(
            "conditional_cdf_samples", 50_000, cfg, model_dev30, led_fov60,
            total_users=20, seed=25, family="twobit_inst_weak",
        )
        assert np.all(res.value > 0.0)
        # conditioning probability equals the single-user weak-set measure,
        # mixing the incidence-angle band over the distance range past d_th
        def band_prob(r):
            return prob_incidence_within(
                r, led_fov60.theta_fov, model_dev30, led_fov60
            ) - prob_incidence_within(
                r, thresholds_validation.angle_threshold, model_dev30, led_fov60
            )

        span = model_dev30.d_max - model_dev30.d_min
        expected = integrate_1d(
            band_prob, thresholds_validation.dist_threshold, model_dev30.d_max,
            QuadratureSpec(),
        ) / span
        assert res.sched_prob == pytest.approx(expected, abs=0.01)

    def test_rank_validated(self, model_dev30, led_fov60):
        with pytest.raises(InvalidParameterError):
            estimate(
                "conditional_cdf_samples", 5_000, make_noma(), model_dev30, led_fov60,
                total_users=20, family="ordered", rank=11,
            )


class TestNonzeroCountHistogram:
    def test_histogram_matches_binomial(self, model_dev30, led_fov60):
        trials = 400_000
        counts = nonzero_count_histogram(trials, 20, model_dev30, led_fov60, seed=29)
        assert counts.sum() == trials
        p = nonzero_gain_probability(model_dev30, led_fov60)
        pmf = pmf_nonzero_count(np.arange(21), NonzeroCount(20, p, 1))
        tv = 0.5 * np.abs(counts / trials - pmf).sum()
        assert tv < 0.01

    def test_worker_independence(self, model_dev30, led_fov60):
        a = nonzero_count_histogram(100_000, 20, model_dev30, led_fov60, seed=31, workers=1)
        b = nonzero_count_histogram(100_000, 20, model_dev30, led_fov60, seed=31, workers=6)
        np.testing.assert_array_equal(a, b)


class TestNoisyScheduling:
    def test_noise_leaves_true_gains_clean(self, model_dev25, led_fov50):
        # noisy ranking may swap picks, but every reported gain must still be
        # a true gain realizable by some user
        cfg = make_noma(snr_db=250.0)
        noise = NoiseConfig(sigma_d=0.05, sigma_phi=2.5, enabled=True)
        clean = estimate(
            "sum_rate", 150_000, cfg, model_dev25, led_fov50, total_users=20, seed=37
        )
        noisy = estimate(
            "sum_rate", 150_000, cfg, model_dev25, led_fov50, total_users=20, seed=37,
            noise=noise,
        )
        assert noisy.sched_prob == clean.sched_prob  # scheduling uses true gains
        assert abs(noisy.value - clean.value) < 0.5

    def test_rate_stats_empty_rejected(self):
        with pytest.raises(DegenerateConditionError):
            rate_stats(np.array([]), np.array([]), 100, make_noma())
