"""src package - Wave-function reduction laboratory modules.

Main package of the laboratory providing the channel-probability
diffusion engine, the Fokker-Planck solver, material reduction rates,
two-apparatus EPR experiments, separable factorization of gridded wave
functions, configuration, file export and the command-line driver.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

from .errors import ValidationError, ConservationError, AcceptanceError
from .simplex import ChannelDistribution, CovarianceSpec, build_covariance, sample_step
from .reduction import (DiffusionParams, RateSchedule, DecoherenceParams, EnsembleReport, run_trajectory,
                        run_ensemble, offdiag_magnitude, proximity_rate, proximity_window, fit_exponential_tail)
from .fokker_planck import FpGrid, FpSolution, fp_step, fp_solve, oracle_deviation
from .material import (MaterialParams, RateBreakdown, alpha_of, overlap_ground, overlap_thermal,
                       orthogonality_bound, phonon_count, subsystem_fluctuation, reduction_rate,
                       reduction_rate_microscopic, consistency_report, xi_sweep)
from .epr import (EprState, EprSchedule, EprReport, rotate_pair, joint_probabilities, two_apparatus_step,
                  run_epr_experiment, spin_correlation_exact)
from .factorization import (GriddedFunction, Kernel, FactorizationResult, build_kernel, factorize2,
                            factorize3_stepwise, compare_orderings)
from .config import RunConfig, load_config, apply_overrides
from .files import prettify, write_json, write_csv, write_report, read_grid, write_grid
from .cli import main
