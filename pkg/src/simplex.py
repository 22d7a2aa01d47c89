"""simplex.py - Channel probability distributions and their fluctuations.

Value types for points on the probability simplex of measurement channels,
the Wright-Fisher covariance A_jk = p_j (delta_jk - p_k) (in units of
1/tau_red) and the Euler step that samples it. The array-level helpers
work on stacked batches of distributions and are shared by the Monte Carlo
and EPR engines.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

ABSORPTION_THRESHOLD = 1e-12
SUM_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ChannelDistribution:
    """Probabilities of the measurement channels with their dead flags.

    Attributes:
        probs (np.ndarray): Channel probabilities, summing to 1.
        dead (np.ndarray): True for channels that have permanently lost their mass.
    """

    probs: np.ndarray
    dead: np.ndarray = field(default=None)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float).copy()
        dead = np.zeros(probs.shape, dtype=bool) if self.dead is None else np.asarray(self.dead, dtype=bool).copy()

        if probs.ndim != 1 or probs.size < 2:
            raise ValidationError(f"need at least 2 channels, got shape {probs.shape}")
        if dead.shape != probs.shape:
            raise ValidationError("dead flags must match the number of channels")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0.0):
            raise ValidationError(f"probabilities must be finite and nonnegative: {probs}")
        if np.any(probs[dead] != 0.0):
            raise ValidationError("dead channels must carry zero probability")
        if abs(probs.sum() - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"probabilities sum to {probs.sum()!r}, not 1")

        probs.setflags(write=False)
        dead.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "dead", dead)

    @classmethod
    def from_probs(cls, probs, tolerance: float = 1e-9) -> "ChannelDistribution":
        """Build a distribution from raw probabilities.

        Values below the absorption threshold are treated as already lost
        channels, and a sum within `tolerance` of 1 is renormalized.

        Args:
            probs: Sequence of channel probabilities.
            tolerance (float): Accepted deviation of the sum from 1.

        Returns:
            ChannelDistribution: Validated distribution.

        Raises:
            ValidationError: If the values are not a probability vector.
        """
        values = np.asarray(probs, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValidationError(f"need at least 2 channels, got {values!r}")
        if not np.all(np.isfinite(values)) or np.any(values < -tolerance):
            raise ValidationError(f"probabilities must be finite and nonnegative: {values}")
        if abs(values.sum() - 1.0) > tolerance:
            raise ValidationError(f"probabilities sum to {values.sum():.12g}, not 1")

        dead = values < ABSORPTION_THRESHOLD
        values = np.where(dead, 0.0, values)
        return cls(values / values.sum(), dead)

    @property
    def n_channels(self) -> int:
        return self.probs.size

    def is_reduced(self, threshold: float = ABSORPTION_THRESHOLD) -> bool:
        """True when a single channel holds (within threshold) all the mass."""
        return bool(self.probs.max() >= 1.0 - threshold)

    def winner(self) -> int:
        return int(np.argmax(self.probs))


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance of channel fluctuations per unit time, times tau_red.

    Attributes:
        matrix (np.ndarray): Symmetric matrix with zero row sums.
    """

    matrix: np.ndarray

    def scaled(self, dt_over_tau: float) -> np.ndarray:
        """Covariance of a step of length dt, in units where tau_red = 1."""
        return self.matrix * dt_over_tau

    def tangent_eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def build_covariance(p: ChannelDistribution) -> CovarianceSpec:
    """Build the reduction covariance diag(p) - p p^T.

    Off-diagonal entries are -p_j p_k, diagonal entries p_j (1 - p_j).
    Dead channels carry zero probability and hence zero rows and columns.

    Args:
        p (ChannelDistribution): Current channel probabilities.

    Returns:
        CovarianceSpec: Covariance in units of 1/tau_red.
    """
    probs = p.probs
    matrix = np.diag(probs) - np.outer(probs, probs)
    matrix[p.dead, :] = 0.0
    matrix[:, p.dead] = 0.0
    return CovarianceSpec(matrix)


def wright_fisher_increment(probs: np.ndarray, dt_over_tau, noise: np.ndarray) -> np.ndarray:
    """Exact square-root construction of a Wright-Fisher fluctuation.

    delta_j = sqrt(dt/tau) * (sqrt(p_j) eta_j - p_j * sum_k sqrt(p_k) eta_k)

    Works on the last axis, so `probs` may be a stack of distributions with
    `dt_over_tau` broadcast over the leading axes. The increments sum to zero.
    """
    root = np.sqrt(probs)
    common = np.sum(root * noise, axis=-1, keepdims=True)
    scale = np.sqrt(np.asarray(dt_over_tau, dtype=float))
    if scale.ndim:
        scale = scale[..., np.newaxis]
    return scale * (root * noise - probs * common)


def step_probs(probs: np.ndarray, dead: np.ndarray, dt_over_tau, noise: np.ndarray,
               threshold: float = ABSORPTION_THRESHOLD):
    """Advance a stack of distributions by one Euler-Maruyama step.

    Components that fall below `threshold` are clamped to zero and marked
    dead; survivors are rescaled proportionally so each row sums to one.

    Returns:
        tuple: (new_probs, new_dead) arrays of the input shape.
    """
    moved = probs + wright_fisher_increment(probs, dt_over_tau, noise)
    new_dead = dead | (moved < threshold)
    moved = np.where(new_dead, 0.0, moved)
    total = moved.sum(axis=-1, keepdims=True)
    # every row keeps at least one live channel, the largest never drops below 1/K
    return moved / total, new_dead


def snap_reduced(probs: np.ndarray, dead: np.ndarray, threshold: float = ABSORPTION_THRESHOLD):
    """Snap rows whose leading channel reached 1 - threshold onto that vertex.

    Returns:
        tuple: (probs, dead, reduced_mask, winners).
    """
    winners = np.argmax(probs, axis=-1)
    reduced = np.take_along_axis(probs, winners[..., np.newaxis], axis=-1)[..., 0] >= 1.0 - threshold
    if np.any(reduced):
        vertex = np.zeros_like(probs[reduced])
        np.put_along_axis(vertex, winners[reduced][:, np.newaxis], 1.0, axis=-1)
        probs = probs.copy()
        dead = dead.copy()
        probs[reduced] = vertex
        dead[reduced] = vertex == 0.0
    return probs, dead, reduced, winners


def sample_step(p: ChannelDistribution, dt_over_tau: float, noise) -> ChannelDistribution:
    """Sample one fluctuation step of the channel probabilities.

    Args:
        p (ChannelDistribution): Current distribution.
        dt_over_tau (float): Step length in units of tau_red, positive.
        noise: Standard normal draws, one per channel.

    Returns:
        ChannelDistribution: Distribution after the step.

    Raises:
        ValidationError: On a non-positive step or malformed noise.
    """
    noise = np.asarray(noise, dtype=float)
    if not dt_over_tau > 0.0:
        raise ValidationError(f"dt_over_tau must be positive, got {dt_over_tau}")
    if noise.shape != p.probs.shape:
        raise ValidationError(f"expected {p.n_channels} noise values, got shape {noise.shape}")
    if not np.all(np.isfinite(noise)):
        raise ValidationError("noise must be finite")

    probs, dead = step_probs(p.probs, p.dead, dt_over_tau, noise)
    return ChannelDistribution(probs, dead)
