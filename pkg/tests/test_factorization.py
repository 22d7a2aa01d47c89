"""test_factorization.py - Unit tests for separable factorization of wave functions.

Tests the kernel, the best product approximation against exact
decompositions and a direct SVD, degeneracy reporting, input validation
and the stepwise three-variable factorization.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import logging

import numpy as np
import pytest

from src import (GriddedFunction, ValidationError, build_kernel, compare_orderings, factorize2,
                 factorize3_stepwise)
from src.factorization import example_function, lagrange_values, random_function, trapezoid_weights


def two_term_function(nu, n1=12, n2=10, seed=0):
    """Build psi = sum_i sqrt(nu_i) f_i(x1) g_i(x2) with quadrature-orthonormal f and g."""
    rng = np.random.default_rng(seed)
    axes = (np.linspace(0.0, 1.0, n1), np.linspace(0.0, 1.0, n2))
    w1, w2 = trapezoid_weights(axes[0]), trapezoid_weights(axes[1])
    q1, _ = np.linalg.qr(rng.standard_normal((n1, len(nu))))
    q2, _ = np.linalg.qr(rng.standard_normal((n2, len(nu))))
    f = q1 / np.sqrt(w1)[:, np.newaxis]
    g = q2 / np.sqrt(w2)[:, np.newaxis]
    values = sum(np.sqrt(v) * np.multiply.outer(f[:, i], g[:, i]) for i, v in enumerate(nu))
    return GriddedFunction(axes, values)


def test_trapezoid_weights():
    """Test trapezoid weights on an uneven grid."""
    weights = trapezoid_weights([0.0, 1.0, 3.0])

    assert weights.tolist() == [0.5, 1.5, 1.0]
    with pytest.raises(ValidationError):
        trapezoid_weights([0.0, 0.0, 1.0])
    with pytest.raises(ValidationError):
        trapezoid_weights([1.0])


def test_separable_function(product_psi):
    """Test that an exact product is recovered with a vanishing residual.

    Args:
        product_psi: Separable function fixture.
    """
    result = factorize2(product_psi, 1)

    assert result.eigenvalues[0] == pytest.approx(product_psi.norm2(), rel=1e-12)
    assert result.residual_direct < 1e-12
    assert result.spectrum[1] == pytest.approx(0.0, abs=1e-12)
    assert np.sum(product_psi.weights[0] * result.phi1[0] ** 2) == pytest.approx(1.0)


def test_known_spectrum():
    """Test eigenvalues, residual and Lagrange values of a two-term function."""
    psi = two_term_function((0.8, 0.2))
    result = factorize2(psi, 1)

    assert result.eigenvalues[0] == pytest.approx(0.8, abs=1e-12)
    assert result.spectrum[:2] == pytest.approx([0.8, 0.2], abs=1e-12)
    assert result.residual == pytest.approx(0.2, abs=1e-12)
    assert result.residual_direct == pytest.approx(0.2, abs=1e-12)
    mu, lam = lagrange_values(psi, result)[0]
    assert mu == pytest.approx(0.8, abs=1e-12)
    assert lam == pytest.approx(1.6, abs=1e-12)


def test_full_rank_reconstructs(random_psi):
    """Test that keeping every term reproduces psi.

    Args:
        random_psi: Random function fixture.
    """
    result = factorize2(random_psi, 16)

    assert result.rank == 16
    assert result.residual_direct == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(result.product(), random_psi.values)


@pytest.mark.parametrize("complex_values", [False, True])
def test_against_svd(complex_values):
    """Test eigenvalues and leading factor against a direct SVD.

    Args:
        complex_values: Use complex samples.
    """
    psi = random_function((9, 14), seed=5, complex_values=complex_values)
    result = factorize2(psi, 3)
    w1, w2 = psi.weights
    left, singular, _ = np.linalg.svd(np.sqrt(w1)[:, np.newaxis] * psi.values * np.sqrt(w2)[np.newaxis, :])

    assert np.allclose(result.eigenvalues, singular[:3] ** 2, atol=1e-12)
    assert abs(np.vdot(left[:, 0], np.sqrt(w1) * result.phi1[0])) == pytest.approx(1.0, abs=1e-10)
    assert result.residual == pytest.approx(result.residual_direct, abs=1e-12)


def test_phase_convention():
    """Test real factors for real input and a positive leading component for complex input."""
    real = factorize2(random_function((8, 8), seed=1), 2)
    complex_result = factorize2(random_function((8, 8), seed=1, complex_values=True), 2)

    assert not np.iscomplexobj(real.phi1[0])
    for phi in complex_result.phi1:
        first = phi[np.argmax(np.abs(phi) > 1e-12 * np.abs(phi).max())]
        assert abs(first.imag) < 1e-12 and first.real > 0.0


def test_kernel_properties(random_psi):
    """Test trace, hermiticity and positivity of the kernel.

    Args:
        random_psi: Random function fixture.
    """
    kernel = build_kernel(random_psi)

    assert kernel.trace() == pytest.approx(random_psi.norm2(), abs=1e-12)
    assert np.allclose(kernel.matrix, kernel.matrix.conj().T)
    assert kernel.eigenvalues().min() > -1e-12
    phi = factorize2(random_psi, 1).phi1[0]
    assert np.allclose(kernel.apply(phi), kernel.eigenvalues()[0] * phi)


def test_exchange_symmetry():
    """Test that swapping the variables keeps the nonzero spectrum."""
    psi = random_function((7, 11), seed=9)
    forward = factorize2(psi, 7)
    swapped = factorize2(psi.transposed(), 7)

    assert np.allclose(forward.eigenvalues, swapped.eigenvalues, atol=1e-12)


def test_degenerate_spectrum_warns(caplog):
    """Test that equal leading eigenvalues are reported.

    Args:
        caplog: Pytest log capture.
    """
    psi = two_term_function((0.5, 0.5))
    with caplog.at_level(logging.WARNING, logger="src.factorization"):
        result = factorize2(psi, 2)

    assert result.degenerate_dimension == 2
    assert result.degenerate
    assert "degenerate" in caplog.text
    assert result.residual_direct == pytest.approx(0.0, abs=1e-12)


def test_factorize2_validation(random_psi):
    """Test rejection of bad ranks, vanishing and three-axis inputs.

    Args:
        random_psi: Random function fixture.
    """
    with pytest.raises(ValidationError):
        factorize2(random_psi, 0)
    with pytest.raises(ValidationError):
        factorize2(random_psi, 17)
    with pytest.raises(ValidationError):
        factorize2(GriddedFunction(random_psi.axes, np.zeros((16, 16))), 1)
    with pytest.raises(ValidationError):
        factorize2(random_function((3, 3, 3), seed=0), 1)


@pytest.mark.parametrize("axes, values, weights", [
    ((np.arange(3.0), np.arange(2.0)), np.zeros((2, 3)), None),
    ((np.arange(3.0),), np.zeros(3), None),
    ((np.arange(2.0), np.arange(2.0)), np.array([[1.0, np.nan], [0.0, 1.0]]), None),
    ((np.arange(2.0), np.arange(2.0)), np.ones((2, 2)), (np.ones(2), np.array([1.0, -1.0]))),
])
def test_gridded_function_validation(axes, values, weights):
    """Test rejection of malformed grids.

    Args:
        axes: Node coordinates.
        values: Samples.
        weights: Quadrature weights.
    """
    with pytest.raises(ValidationError):
        GriddedFunction(axes, values, weights)


def test_stepwise_separable_function():
    """Test that a three-variable product is recovered for every outer axis."""
    psi = example_function("product", (6, 7, 8))
    orderings = compare_orderings(psi)

    assert max(orderings["residuals"]) < 1e-12
    for axis in range(3):
        assert factorize3_stepwise(psi, axis).product().shape == (6, 7, 8)


def test_stepwise_random_function():
    """Test residual bounds and ordering dependence on a random function."""
    psi = random_function((5, 6, 7), seed=2)
    orderings = compare_orderings(psi)

    assert all(0.0 < r < psi.norm2() for r in orderings["residuals"])
    assert orderings["residuals"][orderings["best_axis"]] == min(orderings["residuals"])
    assert orderings["spread"] > 1e-6


def test_stepwise_complex_function():
    """Test the stepwise product on complex samples."""
    psi = random_function((4, 5, 3), seed=4, complex_values=True)
    result = factorize3_stepwise(psi, 1)

    assert np.iscomplexobj(result.product())
    assert 0.0 < result.residual < psi.norm2()


def test_stepwise_validation(random_psi):
    """Test rejection of two-axis inputs and bad axes.

    Args:
        random_psi: Random function fixture.
    """
    with pytest.raises(ValidationError):
        factorize3_stepwise(random_psi, 0)
    with pytest.raises(ValidationError):
        factorize3_stepwise(random_function((3, 3, 3), seed=0), 3)


def test_example_functions():
    """Test the built-in inputs."""
    two_term = factorize2(example_function("two-term", (20, 20)), 3)

    assert example_function("random", (4, 4), seed=1).norm2() == pytest.approx(1.0)
    assert two_term.spectrum[2] == pytest.approx(0.0, abs=1e-12)
    assert two_term.spectrum[1] > 1e-3
    with pytest.raises(ValidationError):
        example_function("gaussian", (4, 4))
    with pytest.raises(ValidationError):
        example_function("random", (4,))


def test_complex_copy_matches_real_factorization():
    """Test that complex storage of a real function changes neither spectrum nor residual."""
    psi = random_function((13, 11), seed=3)
    real = factorize2(psi, 2)
    stored = factorize2(psi.as_complex(), 2)

    assert np.allclose(stored.eigenvalues, real.eigenvalues, atol=1e-12)
    assert stored.residual_direct == pytest.approx(real.residual_direct, abs=1e-12)
    for phi_real, phi_complex in zip(real.phi1, stored.phi1):
        assert np.allclose(phi_complex, phi_real, atol=1e-10)

    outer = random_function((4, 5, 3), seed=6)
    assert factorize3_stepwise(outer.as_complex(), 2).residual == pytest.approx(
        factorize3_stepwise(outer, 2).residual, abs=1e-12)


def test_global_phase_is_removed():
    """Test that a constant complex phase leaves real, positive-leading factors."""
    psi = random_function((9, 7), seed=8)
    rotated = GriddedFunction(psi.axes, np.exp(0.7j) * psi.values)
    result = factorize2(rotated, 2)

    assert np.allclose(result.eigenvalues, factorize2(psi, 2).eigenvalues, atol=1e-12)
    for phi in result.phi1:
        first = phi[np.argmax(np.abs(phi) > 1e-12 * np.abs(phi).max())]
        assert np.max(np.abs(phi.imag)) < 1e-10
        assert first.real > 0.0


def test_degenerate_factors_do_not_depend_on_basis():
    """Test that equal functions built from rotated bases give the same degenerate factors."""
    psi = two_term_function((0.5, 0.5))
    angle = 0.9
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    rng = np.random.default_rng(0)
    q1, _ = np.linalg.qr(rng.standard_normal((12, 2)))
    q2, _ = np.linalg.qr(rng.standard_normal((10, 2)))
    w1, w2 = psi.weights
    f = (q1 / np.sqrt(w1)[:, np.newaxis]) @ rotation
    g = (q2 / np.sqrt(w2)[:, np.newaxis]) @ rotation
    rebuilt = GriddedFunction(psi.axes, np.sqrt(0.5) * f @ g.T)

    first = factorize2(psi, 2)
    second = factorize2(rebuilt, 2)

    assert first.degenerate and second.degenerate
    for a, b in zip(first.phi1 + first.phi2, second.phi1 + second.phi2):
        assert np.allclose(a, b, atol=1e-8)
