"""reduction.py - Monte Carlo simulation of the reduction process.

Trajectories of channel probabilities diffuse on the simplex with the
covariance of simplex.build_covariance / tau_red(t) until one channel holds
all the mass. Trajectories are simulated in fixed-size batches of numpy
arrays; every trajectory draws its noise from its own counter-based stream,
so a path depends only on (master_seed, trajectory_index) and never on the
batch it ran in or on the number of worker threads.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import integrate, stats

from .errors import ValidationError
from .simplex import ABSORPTION_THRESHOLD, ChannelDistribution, snap_reduced, step_probs

logger = logging.getLogger(__name__)

REDUCE_STREAM = 0x5245  # keeps reduce and EPR streams apart for the same seed
NOISE_BLOCK = 128
BATCH_SIZE = 4096
STABILITY_FRACTION = 0.05


@dataclass
class DiffusionParams:
    """Time stepping and ensemble parameters.

    Attributes:
        tau_red (float): Reduction time scale (s).
        dt (float): Time step (s), at most 0.05 tau_red. Defaults to 0.01 tau_red.
        max_time (float): Simulation horizon (s). Defaults to 40 tau_red.
        n_trajectories (int): Ensemble size.
        master_seed (int): Seed every trajectory stream derives from.
        absorption_threshold (float): A channel is lost below this value and
            the process has exited once a channel exceeds 1 minus it.
        n_saved (int): Points of the saved time grid for the mean trajectory.
    """

    tau_red: float = 1.0
    dt: Optional[float] = None
    max_time: Optional[float] = None
    n_trajectories: int = 10000
    master_seed: int = 0
    absorption_threshold: float = ABSORPTION_THRESHOLD
    n_saved: int = 101

    def __post_init__(self):
        if not self.tau_red > 0.0:
            raise ValidationError(f"tau_red must be positive, got {self.tau_red}")
        if self.dt is None:
            self.dt = 0.01 * self.tau_red
        if self.max_time is None:
            self.max_time = 40.0 * self.tau_red
        if not self.dt > 0.0:
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if self.dt > STABILITY_FRACTION * self.tau_red * (1.0 + 1e-12):
            raise ValidationError(f"dt={self.dt} exceeds {STABILITY_FRACTION} tau_red={self.tau_red}")
        if not self.max_time > 0.0:
            raise ValidationError(f"max_time must be positive, got {self.max_time}")
        if self.max_time < 20.0 * self.tau_red:
            logger.warning("max_time %.3g is shorter than 20 tau_red, expect unresolved trajectories", self.max_time)
        if self.n_trajectories < 0:
            raise ValidationError(f"n_trajectories must be >= 0, got {self.n_trajectories}")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ValidationError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if not 0.0 < self.absorption_threshold < 0.5:
            raise ValidationError(f"absorption_threshold out of range: {self.absorption_threshold}")
        if self.n_saved < 2:
            raise ValidationError("n_saved must be at least 2")

    @property
    def n_steps(self) -> int:
        return int(round(self.max_time / self.dt))


@dataclass
class RateSchedule:
    """Time dependence of the reduction rate 1/tau_red(t).

    In `proximity` mode the pointer displacement grows with the signal as
    xi(t) = xi_init exp(t / tau_signal) and the rate is
    exp(-xi(t)^2 / xi0^2) / tau_red_at_zero.
    """

    mode: str = "constant"
    xi0: float = 0.0
    xi_init: float = 0.0
    tau_signal: float = 0.0
    tau_red_at_zero: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "proximity"):
            raise ValidationError(f"unknown rate schedule mode '{self.mode}'")
        if self.mode == "proximity":
            if not (self.xi0 > 0.0 and self.tau_signal > 0.0 and self.tau_red_at_zero > 0.0):
                raise ValidationError("proximity schedule needs positive xi0, tau_signal and tau_red_at_zero")
            if self.xi_init < 0.0:
                raise ValidationError(f"xi_init must be >= 0, got {self.xi_init}")

    @classmethod
    def constant(cls) -> "RateSchedule":
        return cls("constant")

    @classmethod
    def proximity(cls, xi0: float, xi_init: float, tau_signal: float, tau_red_at_zero: float) -> "RateSchedule":
        return cls("proximity", xi0, xi_init, tau_signal, tau_red_at_zero)

    def rate(self, t: float, tau_red: float) -> float:
        """Reduction rate 1/tau_red(t) in 1/s."""
        if self.mode == "constant":
            return 1.0 / tau_red
        return proximity_rate(self, t)

    def peak_rate(self, tau_red: float) -> float:
        # xi(t) only grows, so the rate is largest at t = 0
        return self.rate(0.0, tau_red)


@dataclass
class DecoherenceParams:
    """Decay of the off-diagonal density-matrix terms before reduction."""

    t_deco: float
    initial_offdiag_magnitude: float = 1.0

    def __post_init__(self):
        if not self.t_deco > 0.0:
            raise ValidationError(f"t_deco must be positive, got {self.t_deco}")
        if not 0.0 <= self.initial_offdiag_magnitude <= 1.0:
            raise ValidationError("initial_offdiag_magnitude must lie in [0, 1]")


@dataclass
class TailFit:
    """Exponential fit log S(t) = c - rate * t over a survival window."""

    rate: float
    r2: float
    n_points: int


@dataclass
class EnsembleReport:
    """Aggregated outcome of a trajectory ensemble.

    Attributes:
        n_trajectories (int): Ensemble size.
        absorption_counts (np.ndarray): Number of trajectories reduced onto each channel.
        exit_times (np.ndarray): Exit times (s) of resolved trajectories, by index.
        exit_channels (np.ndarray): Winning channel of each resolved trajectory.
        unresolved_count (int): Trajectories still undecided at max_time.
        time_grid (np.ndarray): Saved times (s).
        mean_trajectory (np.ndarray): Ensemble mean of p_j(t) on the saved grid.
        max_time (float): Simulation horizon (s).
    """

    n_trajectories: int
    absorption_counts: np.ndarray
    exit_times: np.ndarray
    exit_channels: np.ndarray
    unresolved_count: int
    time_grid: np.ndarray
    mean_trajectory: np.ndarray
    max_time: float

    def frequencies(self) -> np.ndarray:
        if self.n_trajectories == 0:
            return np.zeros_like(self.absorption_counts, dtype=float)
        return self.absorption_counts / self.n_trajectories

    def survival(self):
        """Empirical survival S(t) = P(exit time > t) at each observed exit.

        Returns:
            tuple: (sorted exit times, survival just after each exit).
        """
        times = np.sort(self.exit_times)
        remaining = self.n_trajectories - np.arange(1, times.size + 1)
        # exits share the grid times t = k dt, keep the last exit of each tie
        last = np.append(times[1:] != times[:-1], True) if times.size else np.zeros(0, dtype=bool)
        return times[last], remaining[last] / max(self.n_trajectories, 1)

    def tail_fit(self, window=(0.01, 0.1)) -> Optional[TailFit]:
        times, survival = self.survival()
        return fit_exponential_tail(times, survival, window)

    def absorbed_history(self, times) -> np.ndarray:
        """Fraction of the ensemble absorbed in each channel by each time.

        Args:
            times: Times (s) at which to evaluate.

        Returns:
            np.ndarray: Shape (len(times), n_channels).
        """
        times = np.asarray(times, dtype=float)
        history = np.zeros((times.size, self.absorption_counts.size))
        for channel in range(self.absorption_counts.size):
            channel_times = np.sort(self.exit_times[self.exit_channels == channel])
            history[:, channel] = np.searchsorted(channel_times, times, side="right")
        return history / max(self.n_trajectories, 1)

    def mean_exit_time(self) -> Optional[float]:
        return float(self.exit_times.mean()) if self.exit_times.size else None

    def exit_time_quantiles(self) -> dict:
        if not self.exit_times.size:
            return {}
        levels = (0.05, 0.25, 0.5, 0.75, 0.95, 0.99)
        values = np.quantile(self.exit_times, levels)
        return {f"q{int(round(level * 100)):02d}": float(value) for level, value in zip(levels, values)}

    def to_dict(self) -> dict:
        fit = self.tail_fit()
        return {
            "n_trajectories": self.n_trajectories,
            "counts": self.absorption_counts.tolist(),
            "frequencies": self.frequencies().tolist(),
            "unresolved": self.unresolved_count,
            "mean_exit_time": self.mean_exit_time(),
            "exit_time_quantiles": self.exit_time_quantiles(),
            "tail_fit": None if fit is None else {"rate": fit.rate, "r2": fit.r2, "n_points": fit.n_points},
        }


def trajectory_stream(master_seed: int, index: int, tag: int = REDUCE_STREAM) -> np.random.Generator:
    """Counter-based random stream of one trajectory.

    Args:
        master_seed (int): Ensemble seed.
        index (int): Trajectory index.
        tag (int): Separates the streams of different experiment kinds.

    Returns:
        np.random.Generator: Philox generator keyed by (master_seed, tag, index).
    """
    seed = np.random.SeedSequence(entropy=master_seed, spawn_key=(tag, index))
    return np.random.Generator(np.random.Philox(seed))


class NoiseFeed:
    """Standard normal draws for a batch, one block of steps at a time.

    Each row is refilled from its own stream in blocks of NOISE_BLOCK steps
    and only while the row is still running, so the k-th draw of a
    trajectory is the same whatever batch it belongs to.
    """

    def __init__(self, streams: list, width: int, block: int = NOISE_BLOCK):
        self._streams = streams
        self._width = width
        self._block = block
        self._buffer = np.zeros((len(streams), block, width))
        self._cursor = block

    def next(self, running: np.ndarray) -> np.ndarray:
        if self._cursor == self._block:
            for row in np.flatnonzero(running):
                self._buffer[row] = self._streams[row].standard_normal((self._block, self._width))
            self._cursor = 0
        draws = self._buffer[:, self._cursor, :]
        self._cursor += 1
        return draws


def _saved_steps(params: DiffusionParams) -> np.ndarray:
    return np.round(np.linspace(0, params.n_steps, params.n_saved)).astype(int)


def _check_schedule(params: DiffusionParams, schedule: RateSchedule) -> None:
    if params.dt * schedule.peak_rate(params.tau_red) > STABILITY_FRACTION * (1.0 + 1e-12):
        raise ValidationError(
            f"dt={params.dt} exceeds {STABILITY_FRACTION} of the shortest reduction time of the schedule")


def _simulate_batch(p0: ChannelDistribution, params: DiffusionParams, schedule: RateSchedule, indices) -> dict:
    """Run the trajectories `indices` side by side.

    Returns:
        dict: winners (-1 when unresolved), exit_steps (-1 when unresolved) and
        saved_sums, the sum over the batch of p_j at every saved step.
    """
    indices = list(indices)
    n = len(indices)
    threshold = params.absorption_threshold
    saved_steps = _saved_steps(params)

    probs = np.tile(p0.probs, (n, 1))
    dead = np.tile(p0.dead, (n, 1))
    probs, dead, reduced, first = snap_reduced(probs, dead, threshold)
    winners = np.where(reduced, first, -1)
    exit_steps = np.where(reduced, 0, -1)
    running = ~reduced

    saved_sums = np.zeros((params.n_saved, p0.n_channels))
    save_pos = 0
    while save_pos < params.n_saved and saved_steps[save_pos] == 0:
        saved_sums[save_pos] = probs.sum(axis=0)
        save_pos += 1

    feed = NoiseFeed([trajectory_stream(params.master_seed, i) for i in indices], p0.n_channels)
    for step in range(1, params.n_steps + 1):
        if not running.any():
            break
        dt_over_tau = params.dt * schedule.rate((step - 1) * params.dt, params.tau_red)
        noise = feed.next(running)
        rows = np.flatnonzero(running)

        moved, moved_dead = step_probs(probs[rows], dead[rows], dt_over_tau, noise[rows], threshold)
        moved, moved_dead, done, first = snap_reduced(moved, moved_dead, threshold)
        probs[rows] = moved
        dead[rows] = moved_dead

        finished = rows[done]
        winners[finished] = first[done]
        exit_steps[finished] = step
        running[finished] = False

        while save_pos < params.n_saved and saved_steps[save_pos] == step:
            saved_sums[save_pos] = probs.sum(axis=0)
            save_pos += 1

    # absorbed trajectories stay frozen at their vertex
    saved_sums[save_pos:] = probs.sum(axis=0)
    return {"winners": winners, "exit_steps": exit_steps, "saved_sums": saved_sums}


def run_trajectory(p0: ChannelDistribution, params: DiffusionParams, schedule: RateSchedule,
                   trajectory_index: int):
    """Simulate one trajectory until reduction or max_time.

    Args:
        p0 (ChannelDistribution): Initial channel probabilities.
        params (DiffusionParams): Time stepping and seed.
        schedule (RateSchedule): Time dependence of the rate.
        trajectory_index (int): Index of the trajectory's random stream.

    Returns:
        tuple: (final ChannelDistribution, exit time in s or None when unresolved).
    """
    if not 0 <= trajectory_index < params.n_trajectories:
        raise ValidationError(f"trajectory_index {trajectory_index} outside the ensemble")
    _check_schedule(params, schedule)

    n_channels = p0.n_channels
    probs = p0.probs.copy()
    dead = p0.dead.copy()
    stream = trajectory_stream(params.master_seed, trajectory_index)
    feed = NoiseFeed([stream], n_channels)
    running = np.array([True])
    threshold = params.absorption_threshold

    probs, dead, reduced, _ = snap_reduced(probs[np.newaxis], dead[np.newaxis], threshold)
    if reduced[0]:
        return ChannelDistribution(probs[0], dead[0]), 0.0

    for step in range(1, params.n_steps + 1):
        dt_over_tau = params.dt * schedule.rate((step - 1) * params.dt, params.tau_red)
        noise = feed.next(running)
        probs, dead = step_probs(probs, dead, dt_over_tau, noise, threshold)
        probs, dead, reduced, _ = snap_reduced(probs, dead, threshold)
        if reduced[0]:
            return ChannelDistribution(probs[0], dead[0]), step * params.dt

    logger.info("trajectory %d unresolved at max_time %.3g", trajectory_index, params.max_time)
    return ChannelDistribution(probs[0], dead[0]), None


def run_ensemble(p0: ChannelDistribution, params: DiffusionParams, schedule: RateSchedule,
                 threads: int = 1) -> EnsembleReport:
    """Simulate the whole ensemble and aggregate its statistics.

    Batches are fixed slices of the index range and are combined in index
    order, so the report is bit-identical for any `threads`.

    Args:
        p0 (ChannelDistribution): Initial channel probabilities.
        params (DiffusionParams): Ensemble parameters.
        schedule (RateSchedule): Time dependence of the rate.
        threads (int): Worker threads.

    Returns:
        EnsembleReport: Aggregated statistics.
    """
    _check_schedule(params, schedule)
    n = params.n_trajectories
    n_channels = p0.n_channels
    if n == 0:
        return EnsembleReport(0, np.zeros(n_channels, dtype=int), np.zeros(0), np.zeros(0, dtype=int), 0,
                              np.zeros(0), np.zeros((0, n_channels)), params.max_time)

    batches = [range(start, min(start + BATCH_SIZE, n)) for start in range(0, n, BATCH_SIZE)]
    logger.debug("running %d trajectories in %d batches on %d threads", n, len(batches), threads)

    def run(batch):
        return _simulate_batch(p0, params, schedule, batch)

    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, batches))
    else:
        results = [run(batch) for batch in batches]

    winners = np.concatenate([r["winners"] for r in results])
    exit_steps = np.concatenate([r["exit_steps"] for r in results])
    saved_sums = np.zeros((params.n_saved, n_channels))
    for r in results:
        saved_sums += r["saved_sums"]

    resolved = winners >= 0
    unresolved = int(n - resolved.sum())
    if unresolved:
        logger.warning("%d of %d trajectories unresolved at max_time", unresolved, n)

    return EnsembleReport(
        n_trajectories=n,
        absorption_counts=np.bincount(winners[resolved], minlength=n_channels),
        exit_times=exit_steps[resolved] * params.dt,
        exit_channels=winners[resolved],
        unresolved_count=unresolved,
        time_grid=_saved_steps(params) * params.dt,
        mean_trajectory=saved_sums / n,
        max_time=params.max_time,
    )


def offdiag_magnitude(params: DecoherenceParams, t: float) -> float:
    """Magnitude of the off-diagonal density-matrix term after decoherence.

    Decays as exp(-t / t_deco).
    """
    if t < 0.0:
        raise ValidationError(f"t must be >= 0, got {t}")
    return params.initial_offdiag_magnitude * math.exp(-t / params.t_deco)


def proximity_rate(schedule: RateSchedule, t: float) -> float:
    """Reduction rate while the pointer displacement grows with the signal.

    Args:
        schedule (RateSchedule): A schedule in proximity mode.
        t (float): Time since the start of registration (s).

    Returns:
        float: 1/tau_red(t) in 1/s.
    """
    if schedule.mode != "proximity":
        raise ValidationError("proximity_rate needs a proximity schedule")
    ratio = schedule.xi_init / schedule.xi0
    with np.errstate(over="ignore"):
        exponent = ratio * ratio * np.exp(2.0 * t / schedule.tau_signal)
    return float(np.exp(-exponent) / schedule.tau_red_at_zero)


def proximity_window(schedule: RateSchedule) -> dict:
    """Time spent in the proximity stage and the reductions it allows.

    Returns:
        dict: duration (s) for xi to grow from xi_init to xi0, and
        reduction_count, the integral of 1/tau_red(t) over that time.
    """
    from .material import proximity_duration

    duration = proximity_duration(schedule.xi0, schedule.xi_init, schedule.tau_signal)
    if not math.isfinite(duration):
        return {"duration": duration, "reduction_count": math.inf}
    count, _ = integrate.quad(lambda t: proximity_rate(schedule, t), 0.0, duration, limit=200)
    return {"duration": duration, "reduction_count": count}


def fit_exponential_tail(times, survival, window=(0.01, 0.1), min_points: int = 10) -> Optional[TailFit]:
    """Fit log S(t) linearly where S lies inside `window`.

    Args:
        times: Time points.
        survival: Survival probability at those times.
        window (tuple): (lowest, highest) survival values used.
        min_points (int): Fewer points than this gives no fit.

    Returns:
        TailFit or None: Decay rate (1/time unit) and R^2 of the fit.
    """
    times = np.asarray(times, dtype=float)
    survival = np.asarray(survival, dtype=float)
    low, high = window
    mask = (survival >= low) & (survival <= high) & (survival > 0.0)
    if mask.sum() < min_points:
        return None
    fit = stats.linregress(times[mask], np.log(survival[mask]))
    return TailFit(rate=float(-fit.slope), r2=float(fit.rvalue ** 2), n_points=int(mask.sum()))


def born_rule_rows(p0: ChannelDistribution, report: EnsembleReport) -> list:
    """Rows (channel, p0, empirical, 3 sigma, within) comparing outcomes to p0."""
    rows = []
    n = max(report.n_trajectories, 1)
    for channel, (expected, observed) in enumerate(zip(p0.probs, report.frequencies())):
        band = 3.0 * math.sqrt(expected * (1.0 - expected) / n)
        rows.append((channel, f"{expected:.4f}", f"{observed:.4f}", f"{band:.4f}",
                     "yes" if abs(observed - expected) <= band else "NO"))
    return rows


def params_echo(p0: ChannelDistribution, params: DiffusionParams, schedule: RateSchedule) -> dict:
    return {"p0": p0.probs.tolist(), "diffusion": asdict(params), "schedule": asdict(schedule)}
