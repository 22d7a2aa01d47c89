"""factorization.py - Best separable approximations of gridded wave functions.

The best product phi_1(x_1) phi_2(x_2) approximating psi(x_1, x_2) in the
quadrature norm comes from the leading eigenvector of the kernel
K(x_1, x'_1) = int psi(x_1, x_2) psi*(x'_1, x_2) dx_2. Integrals are
quadrature sums, so the problem becomes a Hermitian eigenproblem of the
weighted matrix W_1^1/2 K W_1^1/2.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg

from .errors import ValidationError

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-10
PHASE_CUTOFF = 1e-12


def trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    """Trapezoidal quadrature weights for (possibly uneven) nodes."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2:
        raise ValidationError(f"an axis needs at least 2 nodes, got {nodes.size}")
    gaps = np.diff(nodes)
    if np.any(gaps <= 0.0):
        raise ValidationError("axis nodes must be strictly increasing")
    weights = np.zeros(nodes.size)
    weights[:-1] += 0.5 * gaps
    weights[1:] += 0.5 * gaps
    return weights


@dataclass
class GriddedFunction:
    """Samples of psi on a tensor grid with per-axis quadrature weights.

    Attributes:
        axes (tuple): Node coordinates per axis (2 or 3 axes).
        values (np.ndarray): Real or complex samples, shape = node counts.
        weights (tuple): Quadrature weights per axis, trapezoidal by default.
    """

    axes: tuple
    values: np.ndarray
    weights: Optional[tuple] = field(default=None)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        values = np.asarray(self.values)
        if not np.iscomplexobj(values):
            values = values.astype(float)
        self.values = values
        if len(self.axes) not in (2, 3) or values.ndim != len(self.axes):
            raise ValidationError(f"need 2 or 3 axes matching the value array, got {len(self.axes)} axes "
                                  f"and shape {values.shape}")
        if values.shape != tuple(a.size for a in self.axes):
            raise ValidationError(f"value shape {values.shape} does not match node counts "
                                  f"{tuple(a.size for a in self.axes)}")
        if self.weights is None:
            self.weights = tuple(trapezoid_weights(a) for a in self.axes)
        else:
            self.weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
            if any(w.shape != a.shape or np.any(w <= 0.0) for w, a in zip(self.weights, self.axes)):
                raise ValidationError("weights must be positive and match the axes")
        if not np.all(np.isfinite(values)):
            raise ValidationError("psi samples must be finite")

    @classmethod
    def from_function(cls, func: Callable, ranges: Sequence, counts: Sequence[int]) -> "GriddedFunction":
        """Sample func(x_1, x_2[, x_3]) on uniform grids.

        Args:
            func (Callable): Vectorized function of the coordinates.
            ranges (Sequence): (lo, hi) per axis.
            counts (Sequence[int]): Nodes per axis.

        Returns:
            GriddedFunction: Sampled function with trapezoidal weights.
        """
        axes = tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(ranges, counts))
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(axes, func(*mesh))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def norm2(self) -> float:
        """Quadrature norm ||psi||^2."""
        return float(np.sum(np.abs(self.values) ** 2 * self._weight_tensor()))

    def _weight_tensor(self) -> np.ndarray:
        tensor = self.weights[0]
        for w in self.weights[1:]:
            tensor = np.multiply.outer(tensor, w)
        return tensor

    def normalized(self) -> "GriddedFunction":
        norm2 = self.norm2()
        if norm2 == 0.0:
            raise ValidationError("cannot normalize a vanishing function")
        return GriddedFunction(self.axes, self.values / np.sqrt(norm2), self.weights)

    def transposed(self, order: Optional[Sequence[int]] = None) -> "GriddedFunction":
        """Same function with the axes permuted (reversed by default)."""
        order = tuple(reversed(range(self.ndim))) if order is None else tuple(order)
        return GriddedFunction(tuple(self.axes[i] for i in order), np.transpose(self.values, order),
                               tuple(self.weights[i] for i in order))

    def as_complex(self) -> "GriddedFunction":
        return GriddedFunction(self.axes, self.values.astype(complex), self.weights)

    def distance2(self, approximation: np.ndarray) -> float:
        """Quadrature ||psi - approximation||^2."""
        diff = np.abs(self.values - approximation) ** 2
        return float(np.sum(diff * self._weight_tensor()))


@dataclass
class Kernel:
    """K(x_1, x'_1) sampled on the axis-1 grid.

    Attributes:
        matrix (np.ndarray): Hermitian kernel samples.
        weights (np.ndarray): Axis-1 quadrature weights.
    """

    matrix: np.ndarray
    weights: np.ndarray

    def apply(self, phi: np.ndarray) -> np.ndarray:
        """(K phi)(x_1) = int K(x_1, x'_1) phi(x'_1) dx'_1."""
        return self.matrix @ (self.weights * phi)

    def trace(self) -> float:
        return float(np.real(np.sum(self.weights * np.diag(self.matrix))))

    def weighted(self) -> np.ndarray:
        """W^1/2 K W^1/2, Hermitian in the plain inner product."""
        root = np.sqrt(self.weights)
        return root[:, np.newaxis] * self.matrix * root[np.newaxis, :]

    def eigenvalues(self) -> np.ndarray:
        """Spectrum in decreasing order."""
        return linalg.eigvalsh(self.weighted())[::-1]


@dataclass
class FactorizationResult:
    """Leading product terms of a two-variable function.

    Attributes:
        phi1 (list): Unit-norm factors on axis 1, mutually orthogonal.
        phi2 (list): Factors on axis 2, ||phi2_i||^2 = nu_i.
        eigenvalues (np.ndarray): nu_i of the extracted terms, decreasing.
        spectrum (np.ndarray): Full kernel spectrum, decreasing.
        norm2 (float): ||psi||^2.
        residual (float): ||psi||^2 - sum nu_i.
        residual_direct (float): ||psi - sum phi1_i phi2_i||^2 by quadrature.
        degenerate_dimension (int): Multiplicity of the leading eigenvalue.
        degenerate (bool): True when two extracted eigenvalues are closer than 1e-10 nu_1.
    """

    phi1: list
    phi2: list
    eigenvalues: np.ndarray
    spectrum: np.ndarray
    norm2: float
    residual: float
    residual_direct: float
    degenerate_dimension: int
    degenerate: bool

    @property
    def rank(self) -> int:
        return len(self.phi1)

    def product(self) -> np.ndarray:
        return sum(np.multiply.outer(a, b) for a, b in zip(self.phi1, self.phi2))

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "eigenvalues": self.eigenvalues.tolist(),
            "spectrum": self.spectrum.tolist(),
            "norm2": self.norm2,
            "residual": self.residual,
            "residual_direct": self.residual_direct,
            "degenerate_dimension": self.degenerate_dimension,
            "degenerate": self.degenerate,
        }


def build_kernel(psi: GriddedFunction) -> Kernel:
    """Kernel of a two-variable function, integrated over axis 2.

    Args:
        psi (GriddedFunction): Two-axis function.

    Returns:
        Kernel: K(x_1, x'_1) = sum_x2 w_2 psi(x_1, x_2) conj(psi(x'_1, x_2)).
    """
    if psi.ndim != 2:
        raise ValidationError(f"the kernel needs a two-axis function, got {psi.ndim} axes")
    matrix = (psi.values * psi.weights[1][np.newaxis, :]) @ psi.values.conj().T
    return Kernel(matrix, psi.weights[0])


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Rotate u so its first significant component is real and positive."""
    magnitudes = np.abs(u)
    first = int(np.argmax(magnitudes > PHASE_CUTOFF * magnitudes.max()))
    return u * (np.conj(u[first]) / magnitudes[first])


def _canonical_basis(vectors: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(vectors) that does not depend on the input basis.

    Projected unit vectors are taken in grid order and orthogonalized
    against the ones already kept.
    """
    dimension = vectors.shape[1]
    projector = vectors @ vectors.conj().T
    basis = []
    for column in projector.T:
        for kept in basis:
            column = column - kept * np.vdot(kept, column)
        norm = np.linalg.norm(column)
        if norm > 1e-6:
            basis.append(column / norm)
        if len(basis) == dimension:
            break
    return np.column_stack(basis)


def _canonical_blocks(nu: np.ndarray, vectors: np.ndarray, rank: int) -> np.ndarray:
    """Replace the eigh basis of every degenerate block reaching the first `rank` terms."""
    vectors = vectors.copy()
    gap = DEGENERACY_GAP * nu[0]
    start = 0
    while start < rank and nu[start] > gap:
        stop = start + 1
        while stop < nu.size and nu[start] - nu[stop] <= gap:
            stop += 1
        if stop - start > 1:
            vectors[:, start:stop] = _canonical_basis(vectors[:, start:stop])
        start = stop
    return vectors


def _degenerate_dimension(spectrum: np.ndarray) -> int:
    lead = spectrum[0]
    return int(np.sum(lead - spectrum <= DEGENERACY_GAP * lead))


def factorize2(psi: GriddedFunction, rank: int = 1) -> FactorizationResult:
    """Best rank-`rank` separable approximation of a two-variable function.

    phi1_i are the leading eigenvectors of K normalized on axis 1, and
    phi2_i(x_2) = int conj(phi1_i(x_1)) psi(x_1, x_2) dx_1.
    Within a degenerate eigenvalue block the factors come from a fixed
    basis of the eigenspace (projected grid unit vectors in order, then the
    phase convention), so equal inputs give equal factors whatever basis
    the eigensolver returns.

    Args:
        psi (GriddedFunction): Two-axis function.
        rank (int): Number of product terms.

    Returns:
        FactorizationResult: Factors, eigenvalues and residuals.

    Raises:
        ValidationError: On a bad rank or a vanishing psi.
    """
    if psi.ndim != 2:
        raise ValidationError(f"factorize2 needs a two-axis function, got {psi.ndim} axes")
    if not 1 <= rank <= min(psi.shape):
        raise ValidationError(f"rank must lie in [1, {min(psi.shape)}], got {rank}")
    norm2 = psi.norm2()
    if norm2 == 0.0:
        raise ValidationError("cannot factorize a vanishing function")

    w1 = psi.weights[0]
    nu, vectors = linalg.eigh(build_kernel(psi).weighted())
    nu, vectors = nu[::-1], vectors[:, ::-1]
    nu = np.where(np.abs(nu) < 1e-15 * nu[0], 0.0, nu)
    vectors = _canonical_blocks(nu, vectors, rank)

    phi1, phi2 = [], []
    for i in range(rank):
        factor = _fix_phase(vectors[:, i]) / np.sqrt(w1)
        if not np.iscomplexobj(psi.values):
            factor = factor.real
        phi1.append(factor)
        phi2.append((w1 * np.conj(factor)) @ psi.values)

    extracted = nu[:rank].copy()
    degenerate_dimension = _degenerate_dimension(nu)
    significant = extracted[extracted > DEGENERACY_GAP * nu[0]]
    degenerate = bool(np.any(np.diff(significant) > -DEGENERACY_GAP * nu[0])) if significant.size > 1 else False
    if degenerate_dimension > 1:
        logger.warning("leading eigenvalue %.6g is %d-fold degenerate; the factors are not unique",
                       nu[0], degenerate_dimension)
    elif degenerate:
        logger.warning("near-degenerate eigenvalues among the first %d terms", rank)

    result = FactorizationResult(phi1, phi2, extracted, nu, norm2, max(norm2 - float(extracted.sum()), 0.0),
                                 0.0, degenerate_dimension, degenerate)
    result.residual_direct = psi.distance2(result.product())
    return result


def lagrange_values(psi: GriddedFunction, result: FactorizationResult) -> list:
    """Recompute (mu_i, lambda_i) from the factors.

    mu_i = ||phi2_i||^2 and lambda_i - mu_i = <phi1_i, K phi1_i>, so a
    consistent factorization has mu_i = nu_i and lambda_i = 2 nu_i.
    """
    kernel = build_kernel(psi)
    w1, w2 = psi.weights
    values = []
    for phi1, phi2 in zip(result.phi1, result.phi2):
        mu = float(np.sum(w2 * np.abs(phi2) ** 2))
        k_expect = float(np.real(np.sum(w1 * np.conj(phi1) * kernel.apply(phi1))))
        values.append((mu, k_expect + mu))
    return values


@dataclass
class StepwiseResult:
    """Three-variable stepwise product chi_1 chi_2 chi_3.

    Attributes:
        outer_axis (int): Axis held as the shared variable in the first split.
        chi (tuple): One factor per axis, in the original axis order.
        residual (float): ||psi - chi_1 chi_2 chi_3||^2 by quadrature.
        norm2 (float): ||psi||^2.
    """

    outer_axis: int
    chi: tuple
    residual: float
    norm2: float

    def product(self) -> np.ndarray:
        return np.einsum("i,j,k->ijk", *self.chi)

    def to_dict(self) -> dict:
        return {"outer_axis": self.outer_axis, "residual": self.residual, "norm2": self.norm2}


def _rank1_or_zero(axes, values, weights):
    """Rank-1 factors of a two-axis slice; a vanishing slice gives zeros."""
    piece = GriddedFunction(axes, values, weights)
    if piece.norm2() == 0.0:
        dtype = values.dtype
        return np.zeros(values.shape[0], dtype=dtype), np.zeros(values.shape[1], dtype=dtype)
    result = factorize2(piece, 1)
    return result.phi1[0], result.phi2[0]


def factorize3_stepwise(psi: GriddedFunction, outer_axis: int) -> StepwiseResult:
    """Stepwise product approximation of a three-variable function.

    With (i, j) the remaining axes and k = outer_axis, psi is first split
    as phi_1(x_i, x_k) phi_2(x_j, x_k); the best such split decouples into
    a rank-1 factorization of every x_k slice. Each two-variable factor is
    then rank-1 factorized, phi_1 = chi_i a_k and phi_2 = chi_j b_k, and
    chi_k = a_k b_k.

    Args:
        psi (GriddedFunction): Three-axis function.
        outer_axis (int): 0, 1 or 2.

    Returns:
        StepwiseResult: Factors and quadrature residual.
    """
    if psi.ndim != 3:
        raise ValidationError(f"factorize3_stepwise needs a three-axis function, got {psi.ndim} axes")
    if outer_axis not in (0, 1, 2):
        raise ValidationError(f"outer_axis must be 0, 1 or 2, got {outer_axis}")
    norm2 = psi.norm2()
    if norm2 == 0.0:
        raise ValidationError("cannot factorize a vanishing function")

    i, j = [a for a in range(3) if a != outer_axis]
    k = outer_axis
    block = np.transpose(psi.values, (i, j, k))
    dtype = complex if np.iscomplexobj(block) else float

    first = np.zeros((psi.shape[i], psi.shape[k]), dtype=dtype)
    second = np.zeros((psi.shape[j], psi.shape[k]), dtype=dtype)
    for n in range(psi.shape[k]):
        first[:, n], second[:, n] = _rank1_or_zero((psi.axes[i], psi.axes[j]), block[:, :, n],
                                                   (psi.weights[i], psi.weights[j]))

    chi_i, a_k = _rank1_or_zero((psi.axes[i], psi.axes[k]), first, (psi.weights[i], psi.weights[k]))
    chi_j, b_k = _rank1_or_zero((psi.axes[j], psi.axes[k]), second, (psi.weights[j], psi.weights[k]))

    chi = [None, None, None]
    chi[i], chi[j], chi[k] = chi_i, chi_j, a_k * b_k
    result = StepwiseResult(outer_axis, tuple(chi), 0.0, norm2)
    result.residual = psi.distance2(result.product())
    logger.debug("stepwise factorization with outer axis %d: residual %.6g", outer_axis, result.residual)
    return result


def compare_orderings(psi: GriddedFunction) -> dict:
    """Run the stepwise factorization for every outer axis.

    Returns:
        dict: residual per outer axis, the best axis and the spread between
        the largest and smallest residual.
    """
    results = [factorize3_stepwise(psi, axis) for axis in range(3)]
    residuals = [r.residual for r in results]
    best = int(np.argmin(residuals))
    return {"residuals": residuals, "best_axis": best, "spread": max(residuals) - min(residuals),
            "results": results}


def random_function(shape: Sequence[int], seed: int, complex_values: bool = False) -> GriddedFunction:
    """Normalized random samples on unit intervals, for oracle checks."""
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(tuple(shape))
    if complex_values:
        values = values + 1j * rng.standard_normal(tuple(shape))
    axes = tuple(np.linspace(0.0, 1.0, n) for n in shape)
    return GriddedFunction(axes, values).normalized()


def example_function(kind: str, shape: Sequence[int], seed: int = 0, complex_values: bool = False) -> GriddedFunction:
    """Built-in inputs on unit intervals.

    Args:
        kind (str): 'product' (exactly separable), 'two-term' (sum of two
            products weighted 1 and 1/2) or 'random'.
        shape (Sequence[int]): Node counts, 2 or 3 axes.
        seed (int): Seed of the random samples.
        complex_values (bool): Random complex samples.

    Returns:
        GriddedFunction: Normalized samples.
    """
    if len(shape) not in (2, 3):
        raise ValidationError(f"shape needs 2 or 3 node counts, got {list(shape)}")
    if kind == "random":
        return random_function(shape, seed, complex_values)

    ranges = [(0.0, 1.0)] * len(shape)
    if kind == "product":
        def func(*x):
            return np.prod([np.exp(-((xi - 0.3 - 0.2 * i) ** 2) / 0.1) for i, xi in enumerate(x)], axis=0)
    elif kind == "two-term":
        def func(*x):
            first = np.prod([np.ones_like(xi) for xi in x], axis=0)
            second = np.prod([np.cos(np.pi * xi) for xi in x], axis=0)
            return first + 0.5 * second
    else:
        raise ValidationError(f"unknown example '{kind}'")
    return GriddedFunction.from_function(func, ranges, shape).normalized()
