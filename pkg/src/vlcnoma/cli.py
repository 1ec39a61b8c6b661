"""Experiment driver emitting validation curves and sum-rate sweeps as CSV.

Every subcommand is deterministic given (config, seed): reruns produce
byte-identical output.  Configuration is a flat key=value file with
command-line overrides; angles are degrees and SNR is dB at this boundary
only, converted to radians and linear scale before touching the library.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import DegenerateConditionError, InvalidParameterError, NumericFailureError
from .gain_cdf import (
    FeedbackThresholds,
    cdf_gain_ranked,
    cdf_gain_unordered,
    cdf_strong_twobit_inst,
    cdf_strong_twobit_mean,
    cdf_weak_twobit_inst,
    cdf_weak_twobit_mean,
)
from .geometry import LedGeometry
from .mobility import (
    MobilityModel,
    NonzeroCount,
    cdf_vertical_angle,
    nonzero_gain_probability,
    pmf_nonzero_count_truncated,
    sample_users,
)
from .quadrature import EmpiricalDistribution, ks_distance, ks_distance_bound
from .rates import (
    ANALYTIC_MODES,
    GROUP_MODES,
    OMA_MODES,
    NomaConfig,
    oma_gain_thresholds,
    outage_pair_analytic,
    sum_rate_noma,
    sum_rate_oma,
)
from .simulate import (
    CDF_SAMPLE_FAMILIES,
    NoiseConfig,
    collect_scheduled_gains,
    estimate,
    nonzero_count_histogram,
    rate_stats,
)

CDF_SUBCOMMANDS = ("validate-angle-cdf", "validate-knz", "validate-channel-cdf")
SWEEP_SUBCOMMANDS = ("sweep-snr", "sweep-deviation", "sweep-thresholds", "noisy-compare")

# Empty string means "derive at resolve time" (mean-angle band, trials, workers,
# absolute threshold overrides).
DEFAULTS = {
    "ell": "2.0",
    "phi_hpbw_deg": "60.0",
    "area_r": "1e-4",
    "theta_fov_deg": "50.0",
    "d_min": "0.0",
    "d_max": "10.0",
    "mean_angle_min_deg": "",
    "mean_angle_max_deg": "",
    "max_deviation_deg": "25.0",
    "beta_weak": "0.984375",
    "beta_strong": "0.015625",
    "rate_weak": "2.0",
    "rate_strong": "10.0",
    "snr_db": "200.0",
    "weak_rank": "1",
    "strong_rank": "10",
    "feedback_mode": "FullCSI",
    "normalize_power": "false",
    "total_users": "20",
    "dist_threshold_frac": "0.1",
    "angle_threshold_frac": "0.1",
    "dist_threshold": "",
    "angle_threshold_deg": "",
    "sigma_d": "0.05",
    "sigma_phi_deg": "2.5",
    "noise_enabled": "false",
    "trials": "",
    "seed": "0",
    "workers": "",
    "grid_points": "201",
    "ks_grid_points": "512",
    "snr_grid_db": "140:250:5",
    "deviation_grid_deg": "0:45:5",
    "threshold_frac_grid": "0.1,0.9",
    "family": "unordered",
    "rank": "",
    "oma_mode": "time_shared",
}


def _parse_float(conf: dict, key: str) -> float:
    try:
        return float(conf[key])
    except ValueError as exc:
        raise InvalidParameterError(f"config key {key}: not a number: {conf[key]!r}") from exc


def _parse_int(conf: dict, key: str) -> int:
    try:
        return int(conf[key])
    except ValueError as exc:
        raise InvalidParameterError(f"config key {key}: not an integer: {conf[key]!r}") from exc


def _parse_bool(conf: dict, key: str) -> bool:
    text = conf[key].strip().lower()
    if text in ("true", "1", "yes", "on"):
        return True
    if text in ("false", "0", "no", "off"):
        return False
    raise InvalidParameterError(f"config key {key}: not a boolean: {conf[key]!r}")


def parse_grid(text: str, key: str) -> tuple[float, ...]:
    """Parse ``start:stop:step`` (inclusive) or a comma-separated value list."""
    text = text.strip()
    if not text:
        raise InvalidParameterError(f"config key {key}: empty grid")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError("expected start:stop:step")
            start, stop, step = parts
            if step <= 0:
                raise ValueError("step must be positive")
            values = np.arange(start, stop + step / 2, step)
        else:
            values = np.array([float(p) for p in text.split(",")])
    except ValueError as exc:
        raise InvalidParameterError(f"config key {key}: bad grid {text!r}: {exc}") from exc
    if values.size == 0 or np.any(np.diff(values) <= 0):
        raise InvalidParameterError(f"config key {key}: grid must be non-empty and increasing")
    return tuple(float(v) for v in values)


def parse_config_file(path: str) -> dict:
    """Read a flat key=value file; ``#`` starts a comment, blank lines skip."""
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise InvalidParameterError(f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = value
    return overrides


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and command-line overrides into one dict."""
    conf = dict(DEFAULTS)
    if args.config:
        conf.update(parse_config_file(args.config))
    for item in args.set or []:
        if "=" not in item:
            raise InvalidParameterError(f"--set expects key=value, got {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        if key not in DEFAULTS:
            raise InvalidParameterError(f"--set: unknown config key {key!r}")
        conf[key] = value
    for key, value in (
        ("seed", args.seed),
        ("trials", args.trials),
        ("feedback_mode", args.mode),
        ("oma_mode", args.oma_mode),
        ("family", getattr(args, "family", None)),
        ("rank", getattr(args, "rank", None)),
    ):
        if value is not None:
            conf[key] = str(value)

    # Derived defaults: the mean-angle band tracks the deviation so the
    # instantaneous angle stays inside [0, 180] degrees unless overridden.
    explicit_band = bool(conf["mean_angle_min_deg"] or conf["mean_angle_max_deg"])
    dev = _parse_float(conf, "max_deviation_deg")
    if not conf["mean_angle_min_deg"]:
        conf["mean_angle_min_deg"] = repr(dev)
    if not conf["mean_angle_max_deg"]:
        conf["mean_angle_max_deg"] = repr(180.0 - dev)
    if not conf["trials"]:
        conf["trials"] = "10000000" if args.command in CDF_SUBCOMMANDS else "1000000"
    return conf, explicit_band


def config_hash(conf: dict) -> str:
    payload = "\n".join(f"{k}={conf[k]}" for k in sorted(conf))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def build_geometry(conf: dict) -> LedGeometry:
    return LedGeometry(
        ell=_parse_float(conf, "ell"),
        phi_hpbw=math.radians(_parse_float(conf, "phi_hpbw_deg")),
        area_r=_parse_float(conf, "area_r"),
        theta_fov=math.radians(_parse_float(conf, "theta_fov_deg")),
    )


def build_mobility(conf: dict, deviation_deg: float | None = None) -> MobilityModel:
    dev = _parse_float(conf, "max_deviation_deg") if deviation_deg is None else deviation_deg
    return MobilityModel(
        d_min=_parse_float(conf, "d_min"),
        d_max=_parse_float(conf, "d_max"),
        mean_angle_min=math.radians(_parse_float(conf, "mean_angle_min_deg")),
        mean_angle_max=math.radians(_parse_float(conf, "mean_angle_max_deg")),
        max_deviation=math.radians(dev),
    )


def build_thresholds(conf: dict, model: MobilityModel, led: LedGeometry) -> FeedbackThresholds:
    if conf["dist_threshold"] or conf["angle_threshold_deg"]:
        if not (conf["dist_threshold"] and conf["angle_threshold_deg"]):
            raise InvalidParameterError(
                "absolute thresholds need both dist_threshold and angle_threshold_deg"
            )
        return FeedbackThresholds(
            dist_threshold=_parse_float(conf, "dist_threshold"),
            angle_threshold=math.radians(_parse_float(conf, "angle_threshold_deg")),
        )
    return FeedbackThresholds.from_fractions(
        model,
        led,
        _parse_float(conf, "dist_threshold_frac"),
        _parse_float(conf, "angle_threshold_frac"),
    )


def build_noma(conf: dict, thresholds: FeedbackThresholds) -> NomaConfig:
    return NomaConfig(
        beta_weak=_parse_float(conf, "beta_weak"),
        beta_strong=_parse_float(conf, "beta_strong"),
        rate_weak=_parse_float(conf, "rate_weak"),
        rate_strong=_parse_float(conf, "rate_strong"),
        snr=10.0 ** (_parse_float(conf, "snr_db") / 10.0),
        weak_rank=_parse_int(conf, "weak_rank"),
        strong_rank=_parse_int(conf, "strong_rank"),
        thresholds=thresholds,
        feedback_mode=conf["feedback_mode"],
        normalize_power=_parse_bool(conf, "normalize_power"),
    )


def build_noise(conf: dict) -> NoiseConfig:
    return NoiseConfig(
        sigma_d=_parse_float(conf, "sigma_d"),
        sigma_phi=_parse_float(conf, "sigma_phi_deg"),
        enabled=_parse_bool(conf, "noise_enabled"),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment: model objects plus the sweep grid for one subcommand."""

    command: str
    led: LedGeometry
    model: MobilityModel
    noma: NomaConfig
    noise: NoiseConfig
    total_users: int
    trials: int
    seed: int
    workers: int | None
    grid: tuple[float, ...]
    grid_points: int
    ks_grid_points: int
    oma_mode: str
    family: str
    rank: int | None
    explicit_mean_band: bool
    raw: dict

    def __post_init__(self):
        if len(self.grid) == 0 or np.any(np.diff(self.grid) <= 0):
            raise InvalidParameterError("sweep grid must be non-empty and increasing")
        if self.trials < 1000:
            raise InvalidParameterError("estimate subcommands need at least 1000 trials")
        if self.oma_mode not in OMA_MODES:
            raise InvalidParameterError(f"oma_mode must be one of {OMA_MODES}")
        if self.grid_points < 2 or self.ks_grid_points < 2:
            raise InvalidParameterError("grid_points and ks_grid_points must be at least 2")


def build_experiment(command: str, conf: dict, explicit_mean_band: bool) -> ExperimentConfig:
    led = build_geometry(conf)
    model = build_mobility(conf)
    thresholds = build_thresholds(conf, model, led)
    noma = build_noma(conf, thresholds)
    grid_points = _parse_int(conf, "grid_points")
    if command == "sweep-deviation":
        grid = parse_grid(conf["deviation_grid_deg"], "deviation_grid_deg")
    elif command == "sweep-thresholds":
        grid = parse_grid(conf["threshold_frac_grid"], "threshold_frac_grid")
    elif command in ("sweep-snr", "noisy-compare"):
        grid = parse_grid(conf["snr_grid_db"], "snr_grid_db")
    else:
        grid = tuple(np.linspace(0.0, 1.0, grid_points))
    family = conf["family"]
    if command == "validate-channel-cdf" and family not in CDF_SAMPLE_FAMILIES:
        raise InvalidParameterError(f"family must be one of {CDF_SAMPLE_FAMILIES}, got {family!r}")
    return ExperimentConfig(
        command=command,
        led=led,
        model=model,
        noma=noma,
        noise=build_noise(conf),
        total_users=_parse_int(conf, "total_users"),
        trials=_parse_int(conf, "trials"),
        seed=_parse_int(conf, "seed"),
        workers=_parse_int(conf, "workers") if conf["workers"] else None,
        grid=grid,
        grid_points=grid_points,
        ks_grid_points=_parse_int(conf, "ks_grid_points"),
        oma_mode=conf["oma_mode"],
        family=family,
        rank=_parse_int(conf, "rank") if conf["rank"] else None,
        explicit_mean_band=explicit_mean_band,
        raw=conf,
    )


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def emit_csv(out: str | None, manifest: str, header: list, rows: list, summary: list):
    lines = [manifest, ",".join(header)]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    lines.extend(summary)
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InvalidParameterError(f"cannot write output {out}: {exc}") from exc


def _analytic_channel_cdf(xc: ExperimentConfig):
    """Per-family analytic CDF (scalar callable) and its left limit at the zero atom."""
    model, led, th = xc.model, xc.led, xc.noma.thresholds
    if xc.family == "unordered":
        fn = lambda x: cdf_gain_unordered(x, model, led)
    elif xc.family == "ordered":
        count = NonzeroCount(
            xc.total_users, nonzero_gain_probability(model, led), xc.noma.strong_rank
        )
        rank = xc.noma.strong_rank if xc.rank is None else xc.rank
        fn = lambda x: cdf_gain_ranked(x, rank, model, led, count)
    else:
        table = {
            "twobit_inst_weak": cdf_weak_twobit_inst,
            "twobit_inst_strong": cdf_strong_twobit_inst,
            "twobit_mean_weak": cdf_weak_twobit_mean,
            "twobit_mean_strong": cdf_strong_twobit_mean,
        }
        base = table[xc.family]
        fn = lambda x: base(x, model, led, th)

    def cdf_array(values):
        return np.array([float(fn(float(v))) for v in np.atleast_1d(values)])

    def cdf_left(values):
        vals = np.atleast_1d(values)
        return np.where(vals <= 0.0, 0.0, cdf_array(vals))

    has_atom = xc.family in ("twobit_mean_weak", "twobit_mean_strong")
    return cdf_array, (cdf_left if has_atom else None)


def cmd_validate_angle_cdf(xc: ExperimentConfig, out: str | None, manifest: str):
    rng = np.random.default_rng(xc.seed)
    _, _, inst = sample_users(xc.model, rng, (xc.trials,))
    lo = xc.model.mean_angle_min - xc.model.max_deviation
    hi = xc.model.mean_angle_max + xc.model.max_deviation
    xs = lo + np.asarray(xc.grid) * (hi - lo)
    analytic = cdf_vertical_angle(xs, xc.model)
    emp = EmpiricalDistribution(inst)
    ks = ks_distance(emp, lambda x: cdf_vertical_angle(x, xc.model))
    rows = [
        (math.degrees(x), a, e) for x, a, e in zip(xs, analytic, emp.cdf(xs))
    ]
    summary = [f"# summary ks_distance={fmt(ks)} samples={xc.trials}"]
    emit_csv(out, manifest, ["angle_deg", "analytic_cdf", "empirical_cdf"], rows, summary)


def cmd_validate_knz(xc: ExperimentConfig, out: str | None, manifest: str):
    counts = nonzero_count_histogram(
        xc.trials, xc.total_users, xc.model, xc.led, seed=xc.seed, workers=xc.workers
    )
    j = xc.noma.strong_rank
    kept = counts.copy().astype(float)
    kept[:j] = 0.0
    total = kept.sum()
    if total == 0:
        raise DegenerateConditionError("no trial reached the scheduling rank")
    empirical = kept / total
    count = NonzeroCount(xc.total_users, nonzero_gain_probability(xc.model, xc.led), j)
    ks_vals = np.arange(xc.total_users + 1)
    analytic = pmf_nonzero_count_truncated(ks_vals, count)
    tv = 0.5 * float(np.abs(analytic - empirical).sum())
    rows = list(zip(ks_vals, analytic, empirical))
    summary = [
        f"# summary tv_distance={fmt(tv)} sched_prob={fmt(total / counts.sum())}"
    ]
    emit_csv(out, manifest, ["k_nonzero", "analytic_pmf", "empirical_pmf"], rows, summary)


def cmd_validate_channel_cdf(xc: ExperimentConfig, out: str | None, manifest: str):
    res = estimate(
        "conditional_cdf_samples",
        xc.trials,
        xc.noma,
        xc.model,
        xc.led,
        total_users=xc.total_users,
        seed=xc.seed,
        workers=xc.workers,
        family=xc.family,
        rank=xc.rank,
    )
    emp = EmpiricalDistribution(res.value)
    cdf_array, cdf_left = _analytic_channel_cdf(xc)
    xs = np.unique(emp.quantile(np.asarray(xc.grid)))
    analytic = cdf_array(xs)
    ks_bound = ks_distance_bound(emp, cdf_array, cdf_left, grid_size=xc.ks_grid_points)
    rows = list(zip(xs, analytic, emp.cdf(xs)))
    summary = [
        "# summary"
        f" ks_bound={fmt(ks_bound)} samples={emp.n} conditioning_prob={fmt(res.sched_prob)}"
    ]
    emit_csv(out, manifest, ["gain_sq", "analytic_cdf", "empirical_cdf"], rows, summary)


def _sum_rate_columns(xc: ExperimentConfig, cfg: NomaConfig, gains):
    """Analytic NOMA, MC NOMA, and OMA sum rates at one SNR from collected gains."""
    gain_w, gain_s, trials = gains
    mc = rate_stats(gain_w, gain_s, trials, cfg)
    if cfg.feedback_mode in ANALYTIC_MODES:
        p_weak, p_strong = outage_pair_analytic(cfg, xc.model, xc.led, total_users=xc.total_users)
        analytic = sum_rate_noma(p_weak, p_strong, cfg)
        oma = sum_rate_oma(cfg, xc.model, xc.led, xc.oma_mode, total_users=xc.total_users)
    else:
        analytic = None
        t_weak, t_strong = oma_gain_thresholds(cfg, xc.oma_mode)
        oma = float(
            np.mean(cfg.rate_weak * (gain_w > t_weak) + cfg.rate_strong * (gain_s > t_strong))
        )
    return analytic, mc, oma


def cmd_sweep_snr(xc: ExperimentConfig, out: str | None, manifest: str):
    noise = xc.noise if xc.noise.enabled else None
    gains = collect_scheduled_gains(
        xc.trials,
        xc.noma,
        xc.model,
        xc.led,
        total_users=xc.total_users,
        noise=noise,
        seed=xc.seed,
        workers=xc.workers,
    )
    rows = []
    for snr_db in xc.grid:
        cfg = dataclasses.replace(xc.noma, snr=10.0 ** (snr_db / 10.0))
        analytic, mc, oma = _sum_rate_columns(xc, cfg, gains)
        rows.append((snr_db, analytic, mc.value, mc.stderr, oma, mc.sched_prob))
    header = [
        "snr_db",
        "analytic_sum_rate",
        "mc_sum_rate",
        "mc_stderr",
        "oma_sum_rate",
        "sched_prob",
    ]
    emit_csv(out, manifest, header, rows, [])


def cmd_sweep_deviation(xc: ExperimentConfig, out: str | None, manifest: str):
    auto_band = not xc.explicit_mean_band
    rows = []
    for dev_deg in xc.grid:
        conf = dict(xc.raw)
        if auto_band:
            conf["mean_angle_min_deg"] = repr(dev_deg)
            conf["mean_angle_max_deg"] = repr(180.0 - dev_deg)
        model = build_mobility(conf, deviation_deg=dev_deg)
        thresholds = build_thresholds(conf, model, xc.led)
        cfg = dataclasses.replace(xc.noma, thresholds=thresholds)
        gains = collect_scheduled_gains(
            xc.trials,
            cfg,
            model,
            xc.led,
            total_users=xc.total_users,
            noise=xc.noise if xc.noise.enabled else None,
            seed=xc.seed,
            workers=xc.workers,
        )
        mc = rate_stats(*gains, cfg)
        if cfg.feedback_mode in ANALYTIC_MODES:
            p_weak, p_strong = outage_pair_analytic(cfg, model, xc.led, total_users=xc.total_users)
            analytic = sum_rate_noma(p_weak, p_strong, cfg)
        else:
            analytic = None
        rows.append((dev_deg, analytic, mc.value, mc.stderr, mc.sched_prob))
    header = ["deviation_deg", "analytic_sum_rate", "mc_sum_rate", "mc_stderr", "sched_prob"]
    emit_csv(out, manifest, header, rows, [])


def cmd_sweep_thresholds(xc: ExperimentConfig, out: str | None, manifest: str):
    if xc.noma.feedback_mode not in GROUP_MODES:
        raise InvalidParameterError(
            f"sweep-thresholds needs a group feedback mode, one of {GROUP_MODES}"
        )
    rows = []
    for dist_frac in xc.grid:
        for angle_frac in xc.grid:
            thresholds = FeedbackThresholds.from_fractions(
                xc.model, xc.led, dist_frac, angle_frac
            )
            cfg = dataclasses.replace(xc.noma, thresholds=thresholds)
            gains = collect_scheduled_gains(
                xc.trials,
                cfg,
                xc.model,
                xc.led,
                total_users=xc.total_users,
                noise=xc.noise if xc.noise.enabled else None,
                seed=xc.seed,
                workers=xc.workers,
            )
            mc = rate_stats(*gains, cfg)
            if cfg.feedback_mode in ANALYTIC_MODES:
                p_weak, p_strong = outage_pair_analytic(cfg, xc.model, xc.led)
                analytic = sum_rate_noma(p_weak, p_strong, cfg)
            else:
                analytic = None
            rows.append((dist_frac, angle_frac, analytic, mc.value, mc.stderr, mc.sched_prob))
    header = [
        "dist_frac",
        "angle_frac",
        "analytic_sum_rate",
        "mc_sum_rate",
        "mc_stderr",
        "sched_prob",
    ]
    emit_csv(out, manifest, header, rows, [])


def cmd_noisy_compare(xc: ExperimentConfig, out: str | None, manifest: str):
    noise_on = dataclasses.replace(xc.noise, enabled=True)
    shared = dict(total_users=xc.total_users, seed=xc.seed, workers=xc.workers)
    clean = collect_scheduled_gains(xc.trials, xc.noma, xc.model, xc.led, noise=None, **shared)
    noisy = collect_scheduled_gains(xc.trials, xc.noma, xc.model, xc.led, noise=noise_on, **shared)
    rows = []
    for snr_db in xc.grid:
        cfg = dataclasses.replace(xc.noma, snr=10.0 ** (snr_db / 10.0))
        stat_c = rate_stats(*clean, cfg)
        stat_n = rate_stats(*noisy, cfg)
        rows.append(
            (
                snr_db,
                stat_c.value,
                stat_c.stderr,
                stat_n.value,
                stat_n.stderr,
                stat_c.value - stat_n.value,
                stat_c.sched_prob,
                stat_n.sched_prob,
            )
        )
    header = [
        "snr_db",
        "clean_sum_rate",
        "clean_stderr",
        "noisy_sum_rate",
        "noisy_stderr",
        "gap",
        "clean_sched_prob",
        "noisy_sched_prob",
    ]
    emit_csv(out, manifest, header, rows, [])


COMMANDS = {
    "validate-angle-cdf": cmd_validate_angle_cdf,
    "validate-knz": cmd_validate_knz,
    "validate-channel-cdf": cmd_validate_channel_cdf,
    "sweep-snr": cmd_sweep_snr,
    "sweep-deviation": cmd_sweep_deviation,
    "sweep-thresholds": cmd_sweep_thresholds,
    "noisy-compare": cmd_noisy_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlcnoma",
        description="Analytic and Monte Carlo evaluation of VLC NOMA downlinks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--seed", type=int, help="RNG seed (64-bit)")
        p.add_argument("--trials", type=int, help="Monte Carlo trial count")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--mode", help="feedback mode override")
        p.add_argument("--oma-mode", dest="oma_mode", choices=OMA_MODES)
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override any config key (repeatable)",
        )
        if name == "validate-channel-cdf":
            p.add_argument("--family", choices=CDF_SAMPLE_FAMILIES)
            p.add_argument("--rank", type=int, help="order-statistic rank (ordered family)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        conf, explicit_band = resolve_config(args)
        xc = build_experiment(args.command, conf, explicit_band)
        manifest = (
            f"# manifest config_sha256={config_hash(conf)} seed={xc.seed} version={__version__}"
        )
        COMMANDS[args.command](xc, args.out, manifest)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericFailureError, DegenerateConditionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
