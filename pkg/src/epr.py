"""epr.py - Two-apparatus measurement of an entangled spin pair.

The pair a|+-> + b|-+> is rewritten in the basis of an axis z' at angle
theta, giving four joint channels ordered (++, +-, -+, --). Each apparatus
reduces only its own outcome marginal: it takes a Wright-Fisher step on the
marginal and rescales the joint probabilities proportionally, leaving the
conditional distribution of the other spin untouched. Runs use the same
per-run stream contract as the reduction engine.
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
from scipy import stats

from .errors import ValidationError
from .reduction import BATCH_SIZE, STABILITY_FRACTION, NoiseFeed, trajectory_stream
from .simplex import ABSORPTION_THRESHOLD, ChannelDistribution, snap_reduced, step_probs

logger = logging.getLogger(__name__)

JOINT_ORDER = ("++", "+-", "-+", "--")
SPIN_PRODUCT = np.array([1.0, -1.0, -1.0, 1.0])
EPR_STREAM = 0x4550
MODES = ("simultaneous", "sequential", "overlapping")


@dataclass(frozen=True)
class EprState:
    """Spin pair expressed in the rotated basis.

    Attributes:
        a (complex): Amplitude of |1z,+>|2z,->.
        b (complex): Amplitude of |1z,->|2z,+>.
        theta (float): Angle between z and the measurement axis z' (rad).
        coefficients (np.ndarray): c_ab in the order (++, +-, -+, --).
    """

    a: complex
    b: complex
    theta: float
    coefficients: np.ndarray

    def to_dict(self) -> dict:
        return {"a": str(self.a), "b": str(self.b), "theta": self.theta,
                "coefficients": [str(c) for c in self.coefficients]}


@dataclass
class EprSchedule:
    """When each apparatus is active.

    Attributes:
        mode (str): 'simultaneous', 'sequential' (the second apparatus starts
            once the first has reduced) or 'overlapping' (it starts after
            start_delay_2).
        tau_red_1 (float): Reduction time of apparatus 1 (s).
        tau_red_2 (float): Reduction time of apparatus 2 (s).
        start_delay_2 (float): Start of apparatus 2 in overlapping mode (s).
        dt (float): Time step, defaults to 0.01 of the shorter tau_red.
        max_time (float): Horizon, defaults to 50 (tau_red_1 + tau_red_2) + start_delay_2.
    """

    mode: str = "simultaneous"
    tau_red_1: float = 1.0
    tau_red_2: float = 1.0
    start_delay_2: float = 0.0
    dt: Optional[float] = None
    max_time: Optional[float] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown EPR schedule '{self.mode}', expected one of {MODES}")
        if not (self.tau_red_1 > 0.0 and self.tau_red_2 > 0.0):
            raise ValidationError("tau_red_1 and tau_red_2 must be positive")
        if self.start_delay_2 < 0.0:
            raise ValidationError(f"start_delay_2 must be >= 0, got {self.start_delay_2}")
        shortest = min(self.tau_red_1, self.tau_red_2)
        if self.dt is None:
            self.dt = 0.01 * shortest
        if self.max_time is None:
            self.max_time = 50.0 * (self.tau_red_1 + self.tau_red_2) + self.start_delay_2
        if not self.dt > 0.0 or self.dt > STABILITY_FRACTION * shortest * (1.0 + 1e-12):
            raise ValidationError(f"dt={self.dt} must be positive and at most {STABILITY_FRACTION} tau_red")
        if not self.max_time > self.dt:
            raise ValidationError(f"max_time={self.max_time} is shorter than one step")

    @property
    def n_steps(self) -> int:
        return int(round(self.max_time / self.dt))


@dataclass
class EprReport:
    """Outcome statistics of an EPR run set.

    Attributes:
        state (EprState): Measured state.
        schedule (EprSchedule): Schedule used.
        n_runs (int): Number of runs.
        outcome_alpha (np.ndarray): +1/-1 per run, 0 when unresolved.
        outcome_beta (np.ndarray): +1/-1 per run, 0 when unresolved.
        exit_time_1 (np.ndarray): Reduction time of apparatus 1 (s), NaN when unresolved.
        exit_time_2 (np.ndarray): Reduction time of apparatus 2 (s), NaN when unresolved.
    """

    state: EprState
    schedule: EprSchedule
    n_runs: int
    outcome_alpha: np.ndarray
    outcome_beta: np.ndarray
    exit_time_1: np.ndarray
    exit_time_2: np.ndarray

    @property
    def resolved(self) -> np.ndarray:
        return (self.outcome_alpha != 0) & (self.outcome_beta != 0)

    @property
    def unresolved_count(self) -> int:
        return int(self.n_runs - self.resolved.sum())

    def joint_counts(self) -> np.ndarray:
        ok = self.resolved
        index = 2 * (self.outcome_alpha[ok] < 0) + (self.outcome_beta[ok] < 0)
        return np.bincount(index.astype(int), minlength=4)

    def frequencies(self) -> np.ndarray:
        counts = self.joint_counts()
        total = counts.sum()
        return counts / total if total else np.zeros(4)

    def marginals(self) -> dict:
        freq = self.frequencies()
        return {"alpha_plus": float(freq[0] + freq[1]), "beta_plus": float(freq[0] + freq[2])}

    def correlation(self) -> float:
        """Empirical spin correlation E = sum_ab a*b*freq_ab."""
        return float(SPIN_PRODUCT @ self.frequencies())

    def chi_square(self) -> dict:
        """Goodness of fit of the joint counts against |c_ab|^2."""
        return chi_square_against(self.joint_counts(), joint_probabilities(self.state).probs)

    def records(self) -> list:
        return [(i, int(a), int(b), t1, t2) for i, (a, b, t1, t2) in enumerate(
            zip(self.outcome_alpha, self.outcome_beta, self.exit_time_1.tolist(), self.exit_time_2.tolist()))]

    def to_dict(self) -> dict:
        return {
            "state": self.state.to_dict(),
            "schedule": asdict(self.schedule),
            "n_runs": self.n_runs,
            "unresolved": self.unresolved_count,
            "order": list(JOINT_ORDER),
            "counts": self.joint_counts().tolist(),
            "frequencies": self.frequencies().tolist(),
            "expected": joint_probabilities(self.state).probs.tolist(),
            "marginals": self.marginals(),
            "correlation": self.correlation(),
            "correlation_exact": spin_correlation_exact(self.state),
            "chi_square": self.chi_square(),
        }


def rotate_pair(a: complex, b: complex, theta: float) -> EprState:
    """Express the pair a|+-> + b|-+> along an axis rotated by theta.

    With c = cos(theta/2), s = sin(theta/2):
    c_++ = -(a+b)cs, c_+- = ac^2 - bs^2, c_-+ = bc^2 - as^2, c_-- = (a+b)cs.

    Raises:
        ValidationError: If |a|^2 + |b|^2 differs from 1 by more than 1e-9.
    """
    a, b = complex(a), complex(b)
    norm = abs(a) ** 2 + abs(b) ** 2
    if abs(norm - 1.0) > 1e-9:
        raise ValidationError(f"|a|^2 + |b|^2 = {norm:.12g}, expected 1")
    if not math.isfinite(theta):
        raise ValidationError(f"theta must be finite, got {theta}")
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    coefficients = np.array([-(a + b) * c * s, a * c * c - b * s * s, b * c * c - a * s * s, (a + b) * c * s],
                            dtype=complex)
    return EprState(a, b, float(theta), coefficients)


def joint_probabilities(state: EprState) -> ChannelDistribution:
    """Joint channel probabilities p_ab = |c_ab|^2 in the order (++, +-, -+, --)."""
    return ChannelDistribution.from_probs(np.abs(state.coefficients) ** 2)


def spin_correlation_exact(state: EprState) -> float:
    return float(SPIN_PRODUCT @ joint_probabilities(state).probs)


def _apparatus_step(joint, dead, axis, dt_over_tau, noise, threshold=ABSORPTION_THRESHOLD):
    """One apparatus acting on its own outcome marginal of (n, 2, 2) joints.

    axis 0 is apparatus 1 (alpha), axis 1 apparatus 2 (beta).

    Returns:
        tuple: (joint, dead, marginal_reduced, marginal_winner).
    """
    marginal = joint.sum(axis=2 if axis == 0 else 1)
    moved, moved_dead = step_probs(marginal, marginal <= 0.0, dt_over_tau, noise, threshold)
    moved, moved_dead, reduced, winners = snap_reduced(moved, moved_dead, threshold)

    ratio = np.divide(moved, marginal, out=np.zeros_like(moved), where=marginal > 0.0)
    if axis == 0:
        joint = joint * ratio[:, :, np.newaxis]
        dead = dead | moved_dead[:, :, np.newaxis]
    else:
        joint = joint * ratio[:, np.newaxis, :]
        dead = dead | moved_dead[:, np.newaxis, :]
    joint = np.where(dead, 0.0, joint)
    joint = joint / joint.sum(axis=(1, 2), keepdims=True)
    return joint, dead, reduced, winners


def two_apparatus_step(p: ChannelDistribution, dt: float, tau1: float, tau2: float, noise1,
                       noise2) -> ChannelDistribution:
    """Advance the joint distribution by one step of both apparatuses.

    Apparatus 1 moves the alpha marginal with time scale tau1, then
    apparatus 2 moves the beta marginal with tau2. An infinite tau leaves
    that apparatus idle.

    Args:
        p (ChannelDistribution): Four joint channels (++, +-, -+, --).
        dt (float): Time step (s).
        tau1 (float): Reduction time of apparatus 1 (s).
        tau2 (float): Reduction time of apparatus 2 (s).
        noise1: Two standard normal draws for apparatus 1.
        noise2: Two standard normal draws for apparatus 2.

    Returns:
        ChannelDistribution: Joint distribution after the step.
    """
    if p.n_channels != 4:
        raise ValidationError(f"expected 4 joint channels, got {p.n_channels}")
    if not (dt > 0.0 and tau1 > 0.0 and tau2 > 0.0):
        raise ValidationError("dt, tau1 and tau2 must be positive")
    noise1 = np.asarray(noise1, dtype=float).reshape(1, 2)
    noise2 = np.asarray(noise2, dtype=float).reshape(1, 2)
    if not (np.all(np.isfinite(noise1)) and np.all(np.isfinite(noise2))):
        raise ValidationError("noise must be finite")

    joint = p.probs.reshape(1, 2, 2)
    dead = p.dead.reshape(1, 2, 2)
    if math.isfinite(tau1):
        joint, dead, _, _ = _apparatus_step(joint, dead, 0, np.array([dt / tau1]), noise1)
    if math.isfinite(tau2):
        joint, dead, _, _ = _apparatus_step(joint, dead, 1, np.array([dt / tau2]), noise2)
    return ChannelDistribution(joint.reshape(4), dead.reshape(4))


def _simulate_runs(p0: ChannelDistribution, schedule: EprSchedule, master_seed: int, indices) -> dict:
    indices = list(indices)
    n = len(indices)
    dt = schedule.dt
    joint = np.tile(p0.probs.reshape(2, 2), (n, 1, 1))
    dead = np.tile(p0.dead.reshape(2, 2), (n, 1, 1))

    alpha = np.zeros(n, dtype=int)
    beta = np.zeros(n, dtype=int)
    exit_1 = np.full(n, np.nan)
    exit_2 = np.full(n, np.nan)
    first_start = {"simultaneous": 0.0, "overlapping": schedule.start_delay_2, "sequential": np.inf}
    start_2 = np.full(n, first_start[schedule.mode])

    def record(done, winners, t, apparatus):
        spins = np.where(winners == 0, 1, -1)
        if apparatus == 1:
            alpha[done], exit_1[done] = spins, t
            if schedule.mode == "sequential":
                start_2[done] = t
        else:
            beta[done], exit_2[done] = spins, t

    # an apparatus whose marginal is already at a vertex when it starts reduces at once
    _, _, at_vertex, winners = snap_reduced(joint.sum(axis=2), dead.all(axis=2))
    record(np.flatnonzero(at_vertex), winners[at_vertex], 0.0, 1)
    _, _, at_vertex, winners = snap_reduced(joint.sum(axis=1), dead.all(axis=1))
    ready = at_vertex & (start_2 <= 0.0)
    record(np.flatnonzero(ready), winners[ready], 0.0, 2)

    feed = NoiseFeed([trajectory_stream(master_seed, i, EPR_STREAM) for i in indices], 4)
    for step in range(1, schedule.n_steps + 1):
        running = np.isnan(exit_1) | np.isnan(exit_2)
        if not running.any():
            break
        t_start = (step - 1) * dt
        noise = feed.next(running)
        rows = np.flatnonzero(running)

        active_1 = np.isnan(exit_1[rows])
        active_2 = np.isnan(exit_2[rows]) & (start_2[rows] <= t_start + 1e-12 * dt)
        j, d = joint[rows], dead[rows]
        j, d, reduced_1, win_1 = _apparatus_step(j, d, 0, np.where(active_1, dt / schedule.tau_red_1, 0.0),
                                                 noise[rows, :2])
        j, d, reduced_2, win_2 = _apparatus_step(j, d, 1, np.where(active_2, dt / schedule.tau_red_2, 0.0),
                                                 noise[rows, 2:])
        joint[rows], dead[rows] = j, d

        t = step * dt
        done_1 = active_1 & reduced_1
        record(rows[done_1], win_1[done_1], t, 1)
        done_2 = active_2 & reduced_2
        record(rows[done_2], win_2[done_2], t, 2)

    return {"alpha": alpha, "beta": beta, "exit_1": exit_1, "exit_2": exit_2}


def run_epr_experiment(state: EprState, schedule: EprSchedule, n_runs: int, master_seed: int,
                       threads: int = 1) -> EprReport:
    """Run n_runs joint reductions of the pair.

    Args:
        state (EprState): Pair in the measurement basis.
        schedule (EprSchedule): Activity windows of the apparatuses.
        n_runs (int): Number of independent runs.
        master_seed (int): Seed of the per-run streams.
        threads (int): Worker threads; results do not depend on it.

    Returns:
        EprReport: Per-run records and joint statistics.
    """
    if n_runs < 0:
        raise ValidationError(f"n_runs must be >= 0, got {n_runs}")
    p0 = joint_probabilities(state)
    batches = [range(start, min(start + BATCH_SIZE, n_runs)) for start in range(0, n_runs, BATCH_SIZE)]

    def run(batch):
        return _simulate_runs(p0, schedule, master_seed, batch)

    if threads > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(run, batches))
    else:
        results = [run(batch) for batch in batches]

    def gather(key, dtype):
        return np.concatenate([r[key] for r in results]) if results else np.zeros(0, dtype=dtype)

    report = EprReport(state, schedule, n_runs, gather("alpha", int), gather("beta", int),
                       gather("exit_1", float), gather("exit_2", float))
    if report.unresolved_count:
        logger.warning("%d of %d EPR runs unresolved at max_time", report.unresolved_count, n_runs)
    return report


def chi_square_against(counts, expected_probs) -> dict:
    """Pearson chi-square of observed counts against expected probabilities.

    Cells with zero expected probability are left out; any count landing in
    one makes the fit fail outright.
    """
    counts = np.asarray(counts, dtype=float)
    expected_probs = np.asarray(expected_probs, dtype=float)
    total = counts.sum()
    possible = expected_probs > 0.0
    if total == 0:
        return {"statistic": 0.0, "dof": 0, "p_value": 1.0}
    if np.any(counts[~possible] > 0):
        return {"statistic": math.inf, "dof": int(possible.sum() - 1), "p_value": 0.0}
    expected = total * expected_probs[possible] / expected_probs[possible].sum()
    statistic = float(np.sum((counts[possible] - expected) ** 2 / expected))
    dof = int(possible.sum() - 1)
    p_value = float(stats.chi2.sf(statistic, dof)) if dof > 0 else 1.0
    return {"statistic": statistic, "dof": dof, "p_value": p_value}


def compare_schedules(first: EprReport, second: EprReport) -> dict:
    """Chi-square contingency test that two run sets share joint frequencies."""
    table = np.vstack([first.joint_counts(), second.joint_counts()])
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2 or np.any(table.sum(axis=1) == 0):
        return {"statistic": 0.0, "dof": 0, "p_value": 1.0}
    result = stats.chi2_contingency(table, correction=False)
    return {"statistic": float(result[0]), "dof": int(result[2]), "p_value": float(result[1])}


def parse_amplitude(text: str) -> complex:
    """Parse an amplitude such as '0.6', '-1/sqrt2' or '0.6+0.2j'."""
    cleaned = text.strip().replace(" ", "")
    sign = -1.0 if cleaned.startswith("-") else 1.0
    if cleaned.lstrip("+-") in ("1/sqrt2", "1/sqrt(2)"):
        return complex(sign / math.sqrt(2.0))
    try:
        return complex(cleaned)
    except ValueError:
        raise ValidationError(f"cannot parse amplitude '{text}'") from None

