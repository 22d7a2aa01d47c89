"""selfcheck.py - Acceptance checks of the whole laboratory.

Each check runs one statistical or numerical property end to end and
returns a dict with its name, a pass flag and the measured numbers. The
report never contains timings or thread counts, so two runs with the same
seed serialize to identical bytes.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import json
import logging
import math
import time

import numpy as np

from .epr import EprSchedule, compare_schedules, rotate_pair, run_epr_experiment, spin_correlation_exact
from .factorization import GriddedFunction, build_kernel, compare_orderings, factorize2, random_function
from .fokker_planck import fp_solve, oracle_deviation
from .material import (MaterialParams, consistency_report, orthogonality_bound, overlap_ground, overlap_thermal,
                       reduction_rate, reduction_rate_microscopic)
from .reduction import DiffusionParams, RateSchedule, run_ensemble
from .simplex import ChannelDistribution

logger = logging.getLogger(__name__)

SCALES = {
    "quick": {"born": 20000, "oracle": 20000, "cells": 200, "tail": 50000, "channels": 4000, "epr": 5000},
    "full": {"born": 100000, "oracle": 100000, "cells": 400, "tail": 100000, "channels": 10000, "epr": 100000},
}
BORN_CASES = ((0.3, 0.7), (0.1, 0.9), (0.2, 0.3, 0.5))
EPR_PAIRS = ((1 / math.sqrt(2.0), -1 / math.sqrt(2.0)), (1.0, 0.0), (0.8, 0.6))
EPR_THETAS = (0.0, math.pi / 6, math.pi / 3, math.pi / 2)
EPR_FIT_LEVEL = 1e-3


def _ensemble(p0, n, seed, threads):
    params = DiffusionParams(tau_red=1.0, n_trajectories=n, master_seed=seed)
    return run_ensemble(ChannelDistribution.from_probs(p0), params, RateSchedule.constant(), threads)


def check_born_rule(seed, sizes, threads):
    rows = []
    for p0 in BORN_CASES:
        report = _ensemble(p0, sizes["born"], seed, threads)
        n = report.n_trajectories
        for channel, (expected, observed) in enumerate(zip(p0, report.frequencies())):
            sigma = math.sqrt(expected * (1.0 - expected) / n)
            rows.append({"p0": list(p0), "channel": channel, "expected": expected, "observed": float(observed),
                         "z": float((observed - expected) / sigma)})
    return {"name": "born_rule", "passed": all(abs(r["z"]) <= 3.0 for r in rows), "details": rows}


def check_fp_oracle(seed, sizes, threads):
    p0 = (0.3, 0.7)
    solution = fp_solve(p0[0], sizes["cells"], t_end=15.0)
    report = _ensemble(p0, sizes["oracle"], seed, threads)
    comparison = oracle_deviation(solution, report, tau_red=1.0)
    final_error = abs(float(solution.absorbed_1[-1]) - p0[0])
    details = {"sup_norm": comparison["sup_norm"], "fp_final_absorbed_1": float(solution.absorbed_1[-1]),
               "fp_final_error": final_error}
    return {"name": "fp_mc_oracle", "passed": comparison["sup_norm"] < 0.02 and final_error < 1e-3,
            "details": details}


def check_exit_time_law(seed, sizes, threads):
    report = _ensemble((0.5, 0.5), sizes["tail"], seed, threads)
    mc_fit = report.tail_fit()
    fp_fit = fp_solve(0.5, sizes["cells"], t_end=15.0).tail_fit()
    if mc_fit is None or fp_fit is None:
        return {"name": "exit_time_law", "passed": False, "details": {"reason": "survival tail too short to fit"}}
    agreement = abs(mc_fit.rate - fp_fit.rate) / fp_fit.rate
    details = {"mc_rate": mc_fit.rate, "mc_r2": mc_fit.r2, "fp_rate": fp_fit.rate, "fp_r2": fp_fit.r2,
               "relative_difference": agreement}
    passed = min(mc_fit.r2, fp_fit.r2) > 0.99 and agreement < 0.05 and 0.25 <= mc_fit.rate <= 4.0
    return {"name": "exit_time_law", "passed": passed, "details": details}


def check_channel_count(seed, sizes, threads):
    means = {}
    for k in (2, 4, 8):
        means[k] = _ensemble(np.full(k, 1.0 / k), sizes["channels"], seed, threads).mean_exit_time()
    ratio = max(means.values()) / min(means.values())
    return {"name": "channel_count", "passed": ratio <= 2.0,
            "details": {"mean_exit_times": {str(k): v for k, v in means.items()}, "max_over_min": ratio}}


def check_physical_rates(seed, sizes, threads):
    params = MaterialParams.reference_pointer()
    report = consistency_report(params)
    xi0 = reduction_rate(params).xi0
    ratios = [reduction_rate_microscopic(params.with_xi(x), params.tau) / reduction_rate(params.with_xi(x)).inv_tau_red
              for x in (0.0, 0.5 * xi0, xi0, 2.0 * xi0)]
    spread = max(abs(r / ratios[0] - 1.0) for r in ratios)
    passed = 0.1 <= report["tau_red_factor"] <= 10.0 and 0.1 <= report["xi0_factor"] <= 10.0 and spread <= 1e-10
    details = {"tau_red_at_rest": report["tau_red_at_rest"], "xi0": report["xi0"],
               "tau_red_factor": report["tau_red_factor"], "xi0_factor": report["xi0_factor"],
               "microscopic_ratio": ratios[0], "ratio_spread": spread}
    return {"name": "physical_rates", "passed": passed, "details": details}


def check_overlap_identities(seed, sizes, threads):
    rng = np.random.default_rng(seed)
    worst_ground = worst_square = 0.0
    for _ in range(1000):
        N = 10.0 ** rng.uniform(0.0, 24.0)
        Delta = 10.0 ** rng.uniform(-10.0, -7.0)
        alpha = rng.uniform(1.0, 5.0)
        xi = Delta * math.sqrt(8.0 * alpha * rng.uniform(0.0, 20.0) / N)

        ground = overlap_ground(N, xi, Delta)
        at_zero_temperature = overlap_thermal(N, xi, Delta, 1.0)
        worst_ground = max(worst_ground, abs(at_zero_temperature - ground) / ground)
        thermal = overlap_thermal(N, xi, Delta, alpha)
        worst_square = max(worst_square, abs(orthogonality_bound(N, xi, Delta, alpha) - thermal ** 2) / thermal ** 2)
    return {"name": "overlap_identities", "passed": worst_ground <= 1e-12 and worst_square <= 1e-12,
            "details": {"ground_relative_error": worst_ground, "square_relative_error": worst_square}}


def check_epr(seed, sizes, threads):
    rows = []
    for a, b in EPR_PAIRS:
        for theta in EPR_THETAS:
            state = rotate_pair(a, b, theta)
            report = run_epr_experiment(state, EprSchedule(), sizes["epr"], seed, threads)
            fit = report.chi_square()
            rows.append({"a": a, "b": b, "theta": theta, "correlation": report.correlation(),
                         "correlation_exact": spin_correlation_exact(state),
                         "p_value": fit["p_value"], "unresolved": report.unresolved_count})

    state = rotate_pair(1.0, 0.0, math.pi / 3)
    simultaneous = run_epr_experiment(state, EprSchedule("simultaneous"), sizes["epr"], seed, threads)
    sequential = run_epr_experiment(state, EprSchedule("sequential"), sizes["epr"], seed + 1, threads)
    schedules = compare_schedules(simultaneous, sequential)

    passed = all(r["p_value"] > EPR_FIT_LEVEL and r["unresolved"] == 0 for r in rows) and schedules["p_value"] > 0.01
    return {"name": "epr_correlations", "passed": passed, "details": {"grid": rows, "schedule_comparison": schedules}}


def check_factorization(seed, sizes, threads):
    rng = np.random.default_rng(seed)
    worst_values = worst_vectors = worst_trace = 0.0
    for case in range(20):
        shape = tuple(int(n) for n in rng.integers(2, 33, size=2))
        psi = random_function(shape, seed + case, complex_values=bool(case % 2))
        result = factorize2(psi, min(shape))

        w1, w2 = psi.weights
        weighted = np.sqrt(w1)[:, np.newaxis] * psi.values * np.sqrt(w2)[np.newaxis, :]
        left, singular, _ = np.linalg.svd(weighted)
        worst_values = max(worst_values, float(np.max(np.abs(result.eigenvalues - singular ** 2))))
        gaps = np.abs(np.diff(singular ** 2))
        for i, phi in enumerate(result.phi1):
            if min(gaps[i - 1] if i else np.inf, gaps[i] if i < gaps.size else np.inf) < 1e-4 * singular[0] ** 2:
                continue
            overlap = abs(np.vdot(left[:, i], np.sqrt(w1) * phi))
            worst_vectors = max(worst_vectors, abs(overlap - 1.0))
        worst_trace = max(worst_trace, abs(build_kernel(psi).trace() - psi.norm2()))

    product = GriddedFunction.from_function(lambda x, y: np.exp(-x * x) * np.sin(3.0 * y + 0.2),
                                            ((-2.0, 2.0), (0.0, 1.0)), (24, 20))
    separable_residual = factorize2(product, 1).residual_direct
    orderings = compare_orderings(random_function((6, 6, 6), seed))

    details = {"eigenvalue_error": worst_values, "factor_error": worst_vectors, "trace_error": worst_trace,
               "separable_residual": separable_residual, "three_axis_residuals": orderings["residuals"],
               "best_axis": orderings["best_axis"], "ordering_spread": orderings["spread"]}
    passed = (worst_values <= 1e-10 and worst_vectors <= 1e-10 and worst_trace <= 1e-12
              and separable_residual < 1e-12 and orderings["spread"] > 1e-6)
    return {"name": "factorization", "passed": passed, "details": details}


def check_determinism(seed, sizes, threads):
    n = 2 * 4096 + 100
    single = json.dumps(_ensemble((0.2, 0.3, 0.5), n, seed, 1).to_dict(), sort_keys=True)
    pooled = json.dumps(_ensemble((0.2, 0.3, 0.5), n, seed, max(threads, 3)).to_dict(), sort_keys=True)
    return {"name": "determinism", "passed": single == pooled, "details": {"trajectories": n}}


CHECKS = (check_born_rule, check_fp_oracle, check_exit_time_law, check_channel_count, check_physical_rates,
          check_overlap_identities, check_epr, check_factorization, check_determinism)


def run_selfcheck(seed: int, scale: str = "quick", threads: int = 1, sizes: dict = None) -> dict:
    """Run every acceptance check.

    Args:
        seed (int): Master seed.
        scale (str): 'quick' or 'full' ensemble sizes.
        threads (int): Worker threads for the ensembles.
        sizes (dict): Explicit ensemble sizes, overriding `scale`.

    Returns:
        dict: Per-check results and the overall pass flag.
    """
    sizes = SCALES[scale] if sizes is None else sizes
    results = []
    for check in CHECKS:
        started = time.perf_counter()
        print(f"Checking {check.__name__[len('check_'):]}...")
        result = check(seed, sizes, threads)
        logger.info("%s %s in %.1f s", result["name"], "passed" if result["passed"] else "FAILED",
                    time.perf_counter() - started)
        results.append(result)
    return {"scale": scale, "sizes": sizes, "checks": results, "passed": all(r["passed"] for r in results)}
