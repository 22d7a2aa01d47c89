"""material.py - Reduction rate of a crystalline pointer from its phonons.

Closed-form calculators for the thermal overlap of displaced pointer
states, phonon counts and collision fluctuations in a Gibbs subsystem, and
the resulting reduction rate 1/tau_red. Units are CGS (cm, s); temperature
only enters through T/Theta and hbar*omega/kT.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import logging
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError

logger = logging.getLogger(__name__)

QUOTED_TAU_RED = 1e-22  # s
QUOTED_XI0 = 1e-11  # cm


@dataclass
class MaterialParams:
    """Physical inputs of the pointer model (CGS units).

    Attributes:
        L (float): Side of the cubic pointer (cm).
        a (float): Lattice cell side (cm).
        d (float): Side of a Gibbs subsystem (cm), not smaller than lambda_mfp.
        lambda_mfp (float): Phonon mean free path (cm).
        c_s (float): Sound velocity (cm/s).
        Delta (float): Ground-state position spread of an atom (cm).
        T_over_Theta (float): Temperature over Debye temperature.
        alpha (float): Thermal factor, at least 1. Derived from
            hbar_omega_over_kT when that is given instead.
        hbar_omega_over_kT (float): Optional phonon energy over kT.
        xi (float): Displacement between the two pointer positions (cm).
    """

    L: float = 1.0
    a: float = 3e-8
    d: float = 3e-6
    lambda_mfp: float = 3e-7
    c_s: float = 3e5
    Delta: float = 1e-9
    T_over_Theta: float = 1.0
    alpha: Optional[float] = 1.0
    hbar_omega_over_kT: Optional[float] = None
    xi: float = 0.0

    def __post_init__(self):
        if self.hbar_omega_over_kT is not None:
            self.alpha = alpha_of(self.hbar_omega_over_kT)
        if self.alpha is None:
            raise ValidationError("give either alpha or hbar_omega_over_kT")
        for name in ("L", "a", "d", "lambda_mfp", "c_s", "Delta", "T_over_Theta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be positive, got {value}")
        if self.d < self.lambda_mfp:
            raise ValidationError(
                f"d={self.d} cm is smaller than the phonon mean free path {self.lambda_mfp} cm; "
                "the subsystems must be larger than lambda for their states to be incoherent")
        if self.a > self.d or self.d > self.L:
            raise ValidationError("need a <= d <= L")
        if not self.alpha >= 1.0:
            raise ValidationError(f"alpha must be >= 1, got {self.alpha}")
        if self.xi < 0.0 or not math.isfinite(self.xi):
            raise ValidationError(f"xi must be finite and >= 0, got {self.xi}")

    @classmethod
    def reference_pointer(cls, **overrides) -> "MaterialParams":
        """NaCl-like pointer at room temperature: d = 10 lambda, lambda = 3e-7 cm."""
        return cls(**overrides)

    @property
    def N(self) -> float:
        return (self.L / self.a) ** 3

    @property
    def N_beta(self) -> float:
        return (self.d / self.a) ** 3

    @property
    def n_beta(self) -> float:
        return phonon_count(self.N_beta, self.T_over_Theta)

    @property
    def tau(self) -> float:
        """Phonon mean free time lambda / c_s (s)."""
        return self.lambda_mfp / self.c_s

    def with_xi(self, xi: float) -> "MaterialParams":
        values = asdict(self)
        values.update(xi=xi, hbar_omega_over_kT=None)
        return MaterialParams(**values)


@dataclass
class RateBreakdown:
    """Every intermediate of the reduction-rate estimate.

    delta_p_subsystem is evaluated at p1 = p2 = 1/2 over one phonon mean
    free time; delta_p_total_per_sqrt_dt = sqrt(p1 p2 / tau_red) at p1 = p2 = 1/2.
    """

    N: float
    N_beta: float
    n_beta: float
    tau: float
    e_prime: float
    delta_p_subsystem: float
    delta_p_total_per_sqrt_dt: float
    inv_tau_red: float
    xi0: float

    @property
    def tau_red(self) -> float:
        return math.inf if self.inv_tau_red == 0.0 else 1.0 / self.inv_tau_red

    def rows(self) -> list:
        """Table rows (quantity, value, unit) for the CLI."""
        return [
            ("N", f"{self.N:.4e}", "atoms"),
            ("N_beta", f"{self.N_beta:.4e}", "atoms"),
            ("n_beta", f"{self.n_beta:.4e}", "phonons"),
            ("tau", f"{self.tau:.4e}", "s"),
            ("e_prime", f"{self.e_prime:.6g}", "-"),
            ("delta_p_subsystem", f"{self.delta_p_subsystem:.4e}", "-"),
            ("delta_p_total/sqrt(dt)", f"{self.delta_p_total_per_sqrt_dt:.4e}", "s^-1/2"),
            ("1/tau_red", f"{self.inv_tau_red:.4e}", "1/s"),
            ("tau_red", f"{self.tau_red:.4e}", "s"),
            ("xi0", f"{self.xi0:.4e}", "cm"),
        ]


def alpha_of(hbar_omega_over_kT: float) -> float:
    """Thermal factor alpha = (gamma + 1)/(gamma - 1), gamma = exp(hbar omega / kT).

    Evaluated as coth(x/2), which tends to 1 for large x without overflow.
    """
    if not hbar_omega_over_kT > 0.0:
        raise ValidationError(f"hbar_omega_over_kT must be positive, got {hbar_omega_over_kT}")
    return 1.0 / math.tanh(0.5 * hbar_omega_over_kT)


def overlap_ground(N: float, xi: float, Delta: float) -> float:
    """Overlap exp(-N xi^2 / 8 Delta^2) of two displaced ground states."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    return math.exp(-N * xi * xi / (8.0 * Delta * Delta))


def overlap_thermal(N: float, xi: float, Delta: float, alpha: float) -> float:
    """Overlap exp(-N xi^2 / 8 alpha Delta^2) at finite temperature."""
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if alpha < 1.0:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    return math.exp(-N * xi * xi / (8.0 * alpha * Delta * Delta))


def orthogonality_bound(N: float, xi: float, Delta: float, alpha: float) -> float:
    """Upper bound exp(-N xi^2 / 4 alpha Delta^2) on |<x1|x2>|^2.

    The square of overlap_thermal.
    """
    if N < 1:
        raise ValidationError(f"N must be >= 1, got {N}")
    if alpha < 1.0:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    return math.exp(-N * xi * xi / (4.0 * alpha * Delta * Delta))


def phonon_count(N_beta: float, T_over_Theta: float) -> float:
    """Number of phonons n_beta = 3 N_beta T/Theta in a subsystem."""
    if T_over_Theta < 0.0:
        raise ValidationError(f"T_over_Theta must be >= 0, got {T_over_Theta}")
    return 3.0 * N_beta * T_over_Theta


def collision_rate(n_beta: float, tau: float) -> float:
    """Mean collision probability per unit time w = 1/(n_beta tau) for a phonon pair."""
    return 1.0 / (n_beta * tau)


def transfer_count(params: MaterialParams, p1: float, p2: float, dt: float) -> float:
    """Mean number of phonons moved between the two channel branches in dt."""
    e_prime = overlap_thermal(params.N_beta, params.xi, params.Delta, params.alpha)
    return params.n_beta * dt / params.tau * p1 * p2 * e_prime ** 2


def subsystem_fluctuation(params: MaterialParams, p1: float, p2: float, dt: float) -> float:
    """Standard deviation of the probability exchanged by one subsystem in dt.

    delta_p = (p1 p2 dt / (n_beta tau))^(1/2) exp(-N_beta xi^2 / 8 alpha Delta^2)

    Args:
        params (MaterialParams): Pointer parameters.
        p1 (float): Probability of channel 1.
        p2 (float): Probability of channel 2, with p1 + p2 = 1.
        dt (float): Time interval (s).

    Returns:
        float: Standard deviation of delta_p.
    """
    if abs(p1 + p2 - 1.0) > 1e-9 or min(p1, p2) < 0.0:
        raise ValidationError(f"p1={p1}, p2={p2} do not form a two-channel distribution")
    if dt < 0.0:
        raise ValidationError(f"dt must be >= 0, got {dt}")
    e_prime = overlap_thermal(params.N_beta, params.xi, params.Delta, params.alpha)
    return math.sqrt(p1 * p2 * dt / (params.n_beta * params.tau)) * e_prime


def reduction_rate(params: MaterialParams) -> RateBreakdown:
    """Reduction rate of the pointer.

    1/tau_red = 2 (N/N_beta^2)(Theta/T) exp(-N_beta xi^2 / 4 alpha Delta^2) / tau
    with N/N_beta^2 = (L a / d^2)^3 and xi0 = sqrt(4 alpha Delta^2 / N_beta).

    Args:
        params (MaterialParams): Pointer parameters.

    Returns:
        RateBreakdown: The rate and all its intermediates.
    """
    N_beta = params.N_beta
    e_prime = overlap_thermal(N_beta, params.xi, params.Delta, params.alpha)
    geometry = (params.L * params.a / params.d ** 2) ** 3
    inv_tau_red = 2.0 * geometry / params.T_over_Theta * e_prime ** 2 / params.tau

    return RateBreakdown(
        N=params.N,
        N_beta=N_beta,
        n_beta=params.n_beta,
        tau=params.tau,
        e_prime=e_prime,
        delta_p_subsystem=subsystem_fluctuation(params, 0.5, 0.5, params.tau),
        delta_p_total_per_sqrt_dt=math.sqrt(0.25 * inv_tau_red),
        inv_tau_red=inv_tau_red,
        xi0=math.sqrt(4.0 * params.alpha * params.Delta ** 2 / N_beta),
    )


def reduction_rate_microscopic(params: MaterialParams, dt: float, p1: float = 0.5) -> float:
    """Reduction rate implied by adding up independent subsystem fluctuations.

    The N/N_beta subsystems each exchange subsystem_fluctuation() and the
    pointer probability moves by half their sum, so the total standard
    deviation is (1/2) sqrt(N/N_beta) delta_p. Matching it with
    (p1 p2 dt / tau_red)^(1/2) gives the returned 1/tau_red.
    """
    if not dt > 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    p2 = 1.0 - p1
    if not 0.0 < p1 < 1.0:
        raise ValidationError(f"p1 must lie strictly between 0 and 1, got {p1}")
    total = 0.5 * math.sqrt(params.N / params.N_beta) * subsystem_fluctuation(params, p1, p2, dt)
    return total * total / (p1 * p2 * dt)


def subsystem_position_spread(N_beta: float, Delta: float, alpha: float) -> float:
    """Center-of-mass jitter Delta' = sqrt((alpha - 1) Delta^2 / N_beta) of a subsystem (cm)."""
    if alpha < 1.0:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    return math.sqrt((alpha - 1.0) * Delta * Delta / N_beta)


def proximity_duration(xi0: float, xi_init: float, tau_signal: float) -> float:
    """Time for xi(t) = xi_init exp(t/tau_signal) to reach xi0 (s).

    Infinite when the displacement starts at zero.
    """
    if not (xi0 > 0.0 and tau_signal > 0.0):
        raise ValidationError("xi0 and tau_signal must be positive")
    if xi_init <= 0.0:
        return math.inf
    return max(0.0, tau_signal * math.log(xi0 / xi_init))


def consistency_report(params: MaterialParams, dt: Optional[float] = None) -> dict:
    """Compare the microscopic aggregation with the normative rate.

    Returns:
        dict: Both rates, their ratio, and the computed-vs-quoted factors of
        tau_red(xi = 0) and xi0.
    """
    dt = params.tau if dt is None else dt
    breakdown = reduction_rate(params)
    at_rest = reduction_rate(params.with_xi(0.0))
    microscopic = reduction_rate_microscopic(params, dt)
    spread = subsystem_position_spread(params.N_beta, params.Delta, params.alpha)
    ratio = microscopic / breakdown.inv_tau_red if breakdown.inv_tau_red > 0.0 else math.nan

    report = {
        "inv_tau_red": breakdown.inv_tau_red,
        "inv_tau_red_microscopic": microscopic,
        "microscopic_ratio": ratio,
        "tau_red_at_rest": at_rest.tau_red,
        "tau_red_quoted": QUOTED_TAU_RED,
        "tau_red_factor": at_rest.tau_red / QUOTED_TAU_RED,
        "xi0": breakdown.xi0,
        "xi0_quoted": QUOTED_XI0,
        "xi0_factor": breakdown.xi0 / QUOTED_XI0,
        "position_spread": spread,
        "position_jitter_negligible": spread < 0.1 * breakdown.xi0,
    }
    if abs(ratio - 1.0) > 1e-6:
        logger.info("microscopic aggregation differs from the normative rate by a factor %.6g", ratio)
    return report


def xi_sweep(params: MaterialParams, xis) -> list:
    """Rows (xi, 1/tau_red) over a displacement sweep."""
    return [(float(xi), reduction_rate(params.with_xi(float(xi))).inv_tau_red) for xi in np.asarray(xis, dtype=float)]
