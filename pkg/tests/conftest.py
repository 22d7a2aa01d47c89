"""conftest.py - Pytest configuration and fixtures for testing.

Provides reusable fixtures for channel distributions, ensemble and
pointer parameters, EPR states and gridded wave functions used across
the test modules.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import math

import numpy as np
import pytest

from src import (ChannelDistribution, DiffusionParams, GriddedFunction, MaterialParams, RateSchedule, RunConfig,
                 rotate_pair)
from src.factorization import random_function


@pytest.fixture
def two_channel():
    """Provide an uneven two-channel distribution.

    Returns:
        ChannelDistribution: p = (0.3, 0.7).
    """
    return ChannelDistribution.from_probs([0.3, 0.7])


@pytest.fixture
def three_channel():
    """Provide a three-channel distribution.

    Returns:
        ChannelDistribution: p = (0.2, 0.3, 0.5).
    """
    return ChannelDistribution.from_probs([0.2, 0.3, 0.5])


@pytest.fixture
def small_params():
    """Provide ensemble parameters small enough for unit tests.

    Returns:
        DiffusionParams: 2000 trajectories, tau_red = 1, fixed seed.
    """
    return DiffusionParams(tau_red=1.0, n_trajectories=2000, master_seed=7)


@pytest.fixture
def constant_schedule():
    """Provide the constant-rate schedule.

    Returns:
        RateSchedule: Constant mode.
    """
    return RateSchedule.constant()


@pytest.fixture
def pointer():
    """Provide the reference pointer parameters.

    Returns:
        MaterialParams: NaCl-like pointer at room temperature.
    """
    return MaterialParams.reference_pointer()


@pytest.fixture
def singlet():
    """Provide the singlet pair along z.

    Returns:
        EprState: a = 1/sqrt2, b = -1/sqrt2, theta = 0.
    """
    return rotate_pair(1 / math.sqrt(2.0), -1 / math.sqrt(2.0), 0.0)


@pytest.fixture
def product_psi():
    """Provide an exactly separable two-variable function.

    Returns:
        GriddedFunction: exp(-x^2) sin(3y + 0.2) on a 24 x 20 grid.
    """
    return GriddedFunction.from_function(lambda x, y: np.exp(-x * x) * np.sin(3.0 * y + 0.2),
                                         ((-2.0, 2.0), (0.0, 1.0)), (24, 20))


@pytest.fixture
def random_psi():
    """Provide a normalized random 16 x 16 function.

    Returns:
        GriddedFunction: Real random samples.
    """
    return random_function((16, 16), seed=3)


@pytest.fixture
def run_config(tmp_path):
    """Provide a default configuration writing into a temporary directory.

    Args:
        tmp_path: Pytest temporary directory.

    Returns:
        RunConfig: Defaults with out = tmp_path.
    """
    return RunConfig(out=str(tmp_path))
