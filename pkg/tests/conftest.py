"""Shared fixtures: reference geometries and mobility models used across suites."""

import numpy as np
import pytest

from vlcnoma import FeedbackThresholds, LedGeometry, MobilityModel, NomaConfig


@pytest.fixture(scope="session")
def led_fov50():
    return LedGeometry(
        ell=2.0, phi_hpbw=np.radians(60.0), area_r=1e-4, theta_fov=np.radians(50.0)
    )


@pytest.fixture(scope="session")
def led_fov60():
    return LedGeometry(
        ell=2.0, phi_hpbw=np.radians(60.0), area_r=1e-4, theta_fov=np.radians(60.0)
    )


@pytest.fixture(scope="session")
def led_fov90():
    return LedGeometry(
        ell=2.0, phi_hpbw=np.radians(60.0), area_r=1e-4, theta_fov=np.radians(90.0)
    )


@pytest.fixture(scope="session")
def model_dev25():
    """Deviation 25 degrees, mean band tracking it."""
    return MobilityModel(
        d_min=0.0,
        d_max=10.0,
        mean_angle_min=np.radians(25.0),
        mean_angle_max=np.radians(155.0),
        max_deviation=np.radians(25.0),
    )


@pytest.fixture(scope="session")
def model_dev30():
    """Deviation 30 degrees over a 30..150 mean band (distribution-validation setup)."""
    return MobilityModel(
        d_min=0.0,
        d_max=10.0,
        mean_angle_min=np.radians(30.0),
        mean_angle_max=np.radians(150.0),
        max_deviation=np.radians(30.0),
    )


@pytest.fixture(scope="session")
def thresholds_validation(model_dev30, led_fov60):
    """Thresholds for the distribution-validation setup: 1 m and 6 degrees."""
    return FeedbackThresholds(dist_threshold=1.0, angle_threshold=np.radians(6.0))


def make_noma(snr_db=200.0, mode="FullCSI", thresholds=None, **kw):
    defaults = dict(
        beta_weak=63 / 64,
        beta_strong=1 / 64,
        rate_weak=2.0,
        rate_strong=10.0,
        snr=10.0 ** (snr_db / 10.0),
        weak_rank=1,
        strong_rank=10,
        feedback_mode=mode,
        thresholds=thresholds,
    )
    defaults.update(kw)
    return NomaConfig(**defaults)


# Acceptance verdicts collected by tests/test_acceptance.py; the terminal
# summary prints them so every run ends with one line per criterion.
ACCEPTANCE_RESULTS = []


def record_acceptance(index: int, label: str, ok: bool, detail: str):
    ACCEPTANCE_RESULTS.append((index, label, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for index, label, ok, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {index:02d} {status} {label}: {detail}")
