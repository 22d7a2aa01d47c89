"""test_material.py - Unit tests for the pointer rate calculators.

Tests the reference pointer numbers, the overlap and orthogonality
formulas, the microscopic aggregation of subsystem fluctuations and the
validation of physical inputs.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import math

import pytest

from src import (MaterialParams, ValidationError, alpha_of, consistency_report, orthogonality_bound, overlap_ground,
                 overlap_thermal, reduction_rate, reduction_rate_microscopic, xi_sweep)
from src.material import (collision_rate, phonon_count, proximity_duration, subsystem_fluctuation,
                          subsystem_position_spread, transfer_count)
from .sample import orthogonality_sample, proximity_sample, reference_pointer_values


def test_reference_pointer(pointer):
    """Test the derived quantities of the reference pointer.

    Args:
        pointer: Reference pointer fixture.
    """
    breakdown = reduction_rate(pointer)

    assert pointer.N_beta == pytest.approx(reference_pointer_values["N_beta"])
    assert (pointer.N / pointer.N_beta ** 2) == pytest.approx(reference_pointer_values["geometry"], rel=1e-4)
    assert pointer.tau == pytest.approx(reference_pointer_values["tau"])
    assert breakdown.xi0 == pytest.approx(reference_pointer_values["xi0"])
    assert breakdown.tau_red == pytest.approx(reference_pointer_values["tau_red"], rel=0.01)
    assert breakdown.e_prime == 1.0


def test_rate_drops_by_e_at_xi0(pointer):
    """Test that the rate at xi = xi0 is exp(-1) times the rate at rest.

    Args:
        pointer: Reference pointer fixture.
    """
    at_rest = reduction_rate(pointer)
    displaced = reduction_rate(pointer.with_xi(at_rest.xi0))

    assert displaced.inv_tau_red / at_rest.inv_tau_red == pytest.approx(math.exp(-1.0))


def test_microscopic_ratio_is_constant(pointer):
    """Test that the microscopic rate is a fixed 1/24 of the normative one.

    Args:
        pointer: Reference pointer fixture.
    """
    xi0 = reduction_rate(pointer).xi0
    for xi in (0.0, 0.5 * xi0, xi0, 2.0 * xi0):
        params = pointer.with_xi(xi)
        ratio = reduction_rate_microscopic(params, params.tau) / reduction_rate(params).inv_tau_red
        assert ratio == pytest.approx(reference_pointer_values["microscopic_ratio"], rel=1e-10)


def test_microscopic_rate_independent_of_dt_and_p(pointer):
    """Test that dt and p1 cancel out of the microscopic rate.

    Args:
        pointer: Reference pointer fixture.
    """
    reference = reduction_rate_microscopic(pointer, pointer.tau)

    assert reduction_rate_microscopic(pointer, 1e-15, p1=0.2) == pytest.approx(reference, rel=1e-12)


def test_consistency_report(pointer):
    """Test the computed-vs-quoted factors.

    Args:
        pointer: Reference pointer fixture.
    """
    report = consistency_report(pointer)

    assert report["microscopic_ratio"] == pytest.approx(1.0 / 24.0)
    assert 0.1 <= report["tau_red_factor"] <= 10.0
    assert report["xi0_factor"] == pytest.approx(0.2)
    assert report["position_spread"] == 0.0
    assert report["position_jitter_negligible"]


def test_overlap_identities():
    """Test the ground-state limit and the squared overlap."""
    N, xi, Delta = 1e6, 1e-12, 1e-9

    assert overlap_thermal(N, xi, Delta, 1.0) == pytest.approx(overlap_ground(N, xi, Delta), rel=1e-14)
    thermal = overlap_thermal(N, xi, Delta, 2.5)
    assert orthogonality_bound(N, xi, Delta, 2.5) == pytest.approx(thermal ** 2, rel=1e-14)
    assert overlap_thermal(N, xi, Delta, 2.5) > overlap_ground(N, xi, Delta)


def test_orthogonality_half_crossing():
    """Test the displacement at which the bound drops to one half."""
    s = orthogonality_sample
    crossing = s["half_crossing"]

    assert orthogonality_bound(s["N"], crossing, s["Delta"], s["alpha"]) == pytest.approx(0.5, rel=1e-12)
    assert crossing == pytest.approx(2.15e-21, rel=0.01)
    assert orthogonality_bound(s["N"], 1e-20, s["Delta"], s["alpha"]) == pytest.approx(math.exp(-15.0), rel=1e-12)


@pytest.mark.parametrize("x, expected", [(1e-3, 2000.0), (1.0, (math.e + 1) / (math.e - 1)), (800.0, 1.0)])
def test_alpha_of(x, expected):
    """Test the thermal factor including the large-gap limit.

    Args:
        x: hbar omega / kT.
        expected: Thermal factor.
    """
    assert alpha_of(x) == pytest.approx(expected, rel=1e-6)


def test_alpha_from_phonon_energy():
    """Test that hbar_omega_over_kT sets alpha."""
    params = MaterialParams(hbar_omega_over_kT=1.0)

    assert params.alpha == pytest.approx(alpha_of(1.0))
    assert params.with_xi(1e-12).alpha == params.alpha


@pytest.mark.parametrize("kwargs", [{"d": 1e-7}, {"L": 0.0}, {"alpha": 0.5}, {"xi": -1e-12},
                                    {"a": 1e-5}, {"c_s": math.inf}, {"alpha": None}])
def test_material_validation(kwargs):
    """Test rejection of unphysical pointer parameters.

    Args:
        kwargs: Invalid parameter override.
    """
    with pytest.raises(ValidationError):
        MaterialParams(**kwargs)


def test_overlap_validation():
    """Test rejection of subatomic counts and alpha below 1."""
    with pytest.raises(ValidationError):
        overlap_ground(0.5, 1e-12, 1e-9)
    with pytest.raises(ValidationError):
        overlap_thermal(1e6, 1e-12, 1e-9, 0.9)
    with pytest.raises(ValidationError):
        alpha_of(0.0)


def test_phonon_counts_and_collisions(pointer):
    """Test phonon number and the matching collision rate.

    Args:
        pointer: Reference pointer fixture.
    """
    assert phonon_count(1e6, 1.0) == 3e6
    assert pointer.n_beta == 3e6
    assert collision_rate(3e6, 1e-12) == pytest.approx(1.0 / 3e-6)
    assert transfer_count(pointer, 0.5, 0.5, pointer.tau) == pytest.approx(0.75e6)


def test_subsystem_fluctuation(pointer):
    """Test the fluctuation size and its validation.

    Args:
        pointer: Reference pointer fixture.
    """
    expected = math.sqrt(0.25 / 3e6)

    assert subsystem_fluctuation(pointer, 0.5, 0.5, pointer.tau) == pytest.approx(expected)
    with pytest.raises(ValidationError):
        subsystem_fluctuation(pointer, 0.5, 0.6, pointer.tau)


def test_position_spread():
    """Test the subsystem center-of-mass jitter."""
    assert subsystem_position_spread(1e6, 1e-9, 1.0) == 0.0
    assert subsystem_position_spread(1e6, 1e-9, 5.0) == pytest.approx(2e-12)


def test_proximity_duration():
    """Test the time needed for the displacement to reach xi0."""
    s = proximity_sample

    assert proximity_duration(s["xi0"], s["xi_init"], s["tau_signal"]) == pytest.approx(1e-10 * math.log(100.0))
    assert proximity_duration(s["xi0"], 0.0, s["tau_signal"]) == math.inf
    assert proximity_duration(s["xi0"], 2.0 * s["xi0"], s["tau_signal"]) == 0.0


def test_xi_sweep_is_decreasing(pointer):
    """Test the displacement sweep.

    Args:
        pointer: Reference pointer fixture.
    """
    rows = xi_sweep(pointer, [0.0, 1e-12, 2e-12, 4e-12])
    rates = [rate for _, rate in rows]

    assert rows[0][0] == 0.0
    assert rates == sorted(rates, reverse=True)
    assert rates[2] / rates[0] == pytest.approx(math.exp(-1.0))
