"""Shared fixtures: short scenario runs reused across test modules."""
import pytest

from selfsim import experiments

SHORT_SNAPS = [0.0, 0.5, 1.0, 1.5]


@pytest.fixture(scope="session")
def short_right_config():
    return experiments.fig1_right_config(name="short_right", cells=300, snap_times=SHORT_SNAPS)


@pytest.fixture(scope="session")
def short_right_report(short_right_config):
    return experiments.run_scenario(short_right_config)


@pytest.fixture(scope="session")
def short_left_report():
    return experiments.fig1_left(name="short_left", cells=300, snap_times=SHORT_SNAPS)
