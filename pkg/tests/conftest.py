"""Shared fixtures for the marginlab test suite."""

import pytest

from marginlab import SimulatedBackend, default_params, golden_cache


@pytest.fixture(scope="session")
def params():
    """Calibrated device model parameters, shared across the suite."""
    return default_params()


@pytest.fixture(scope="session")
def cache():
    """Process-wide golden value cache."""
    return golden_cache()


@pytest.fixture()
def backend(params, cache):
    """Fresh simulated backend over the shared calibrated model."""
    return SimulatedBackend(params, cache=cache)
