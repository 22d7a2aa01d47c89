"""cli.py - Command-line driver of the reduction laboratory.

Subcommands reduce, fp, rate, epr, factorize and selfcheck. Every run is
deterministic given its resolved configuration and seed; JSON outputs
carry the schema version and echo the configuration.

Exit codes: 0 success, 2 invalid input, 3 acceptance bound violated.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import argparse
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import FORMATS, LOG_LEVELS, SCHEMA_VERSION, RunConfig, apply_overrides, load_config
from .epr import JOINT_ORDER, EprSchedule, compare_schedules, rotate_pair, run_epr_experiment, spin_correlation_exact
from .errors import AcceptanceError, ConservationError, ValidationError
from .factorization import compare_orderings, example_function, factorize2, factorize3_stepwise
from .files import prettify, read_grid, write_csv, write_json
from .fokker_planck import fp_solve, oracle_deviation
from .material import QUOTED_TAU_RED, QUOTED_XI0, MaterialParams, consistency_report, reduction_rate, xi_sweep
from .reduction import DiffusionParams, RateSchedule, born_rule_rows, params_echo, proximity_window, run_ensemble
from .selfcheck import run_selfcheck
from .simplex import ChannelDistribution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ACCEPTANCE = 3


class Outputs:
    """Writes the files of one subcommand into the output directory."""

    def __init__(self, config: RunConfig, name: str):
        self.config = config
        self.name = name
        self.directory = Path(config.out)
        self.directory.mkdir(parents=True, exist_ok=True)

    @property
    def wants_json(self) -> bool:
        return self.config.format in ("json", "both")

    @property
    def wants_csv(self) -> bool:
        return self.config.format in ("csv", "both")

    def json(self, payload: dict, force: bool = False) -> None:
        if self.wants_json or force:
            path = self.directory / f"{self.name}.json"
            body = {"schema_version": SCHEMA_VERSION, "command": self.name,
                    "config": self.config.echo(self.name), **payload}
            if write_json(path, body):
                print(f"Wrote {path}")

    def csv(self, suffix: str, header, rows) -> None:
        if self.wants_csv:
            path = self.directory / f"{self.name}_{suffix}.csv"
            if write_csv(path, header, rows):
                print(f"Wrote {path}")


def cmd_reduce(config: RunConfig) -> int:
    """Run a trajectory ensemble and compare outcomes with the Born rule."""
    section = config.reduce
    p0 = ChannelDistribution.from_probs(section.p0)
    params = DiffusionParams(tau_red=section.tau_red, dt=section.dt, max_time=section.max_time,
                             n_trajectories=section.n_trajectories, master_seed=config.seed,
                             absorption_threshold=section.absorption_threshold, n_saved=section.n_saved)
    schedule = RateSchedule(section.schedule, section.xi0, section.xi_init, section.tau_signal,
                            section.tau_red_at_zero)

    print(f"Running {params.n_trajectories} trajectories over {p0.n_channels} channels...")
    report = run_ensemble(p0, params, schedule, config.threads)

    print("\nBorn rule comparison:")
    print(prettify(born_rule_rows(p0, report), ("channel", "p0", "empirical", "3 sigma", "within")))

    payload = {"params": params_echo(p0, params, schedule), "report": report.to_dict()}
    if schedule.mode == "proximity":
        payload["proximity_window"] = proximity_window(schedule)

    outputs = Outputs(config, "reduce")
    outputs.json(payload)
    outputs.csv("exits", ("exit_time", "channel"), zip(report.exit_times.tolist(), report.exit_channels.tolist()))
    outputs.csv("mean", ("t",) + tuple(f"p{j}" for j in range(p0.n_channels)),
                ([t] + row for t, row in zip(report.time_grid.tolist(), report.mean_trajectory.tolist())))
    times, survival = report.survival()
    outputs.csv("survival", ("t", "survival"), zip(times.tolist(), survival.tolist()))

    fraction = report.unresolved_count / max(report.n_trajectories, 1)
    if fraction > section.max_unresolved_fraction:
        raise AcceptanceError(f"{report.unresolved_count} unresolved trajectories ({fraction:.2%}) exceed the "
                              f"bound {section.max_unresolved_fraction:.2%}; raise reduce.max_time")
    return EXIT_OK


def cmd_fp(config: RunConfig) -> int:
    """Solve the two-channel Fokker-Planck equation, optionally against Monte Carlo."""
    section = config.fp
    print(f"Solving on {section.cells} cells up to t = {section.t_end} tau_red ({section.scheme})...")
    solution = fp_solve(section.p_start, section.cells, section.t_end, section.dt, section.scheme,
                        section.startup_steps, section.diffusion_scale, section.record_every)

    rows = [("absorbed at p=1", f"{solution.absorbed_1[-1]:.6f}"),
            ("absorbed at p=0", f"{solution.absorbed_0[-1]:.6f}"),
            ("survival", f"{solution.survival[-1]:.3e}")]
    fit = solution.tail_fit()
    if fit is not None:
        rows.append(("tail rate (1/tau_red)", f"{fit.rate:.4f}"))
    print(prettify(rows))

    payload = {"solution": solution.to_dict()}
    comparison = None
    if section.compare:
        print(f"\nRunning {section.compare_trajectories} trajectories for comparison...")
        params = DiffusionParams(tau_red=1.0, n_trajectories=section.compare_trajectories, master_seed=config.seed)
        p0 = ChannelDistribution.from_probs([section.p_start, 1.0 - section.p_start])
        report = run_ensemble(p0, params, RateSchedule.constant(), config.threads)
        comparison = oracle_deviation(solution, report, tau_red=1.0)
        print(f"Sup-norm deviation of the absorbed masses: {comparison['sup_norm']:.4f}")
        payload["comparison"] = comparison

    outputs = Outputs(config, "fp")
    outputs.json(payload)
    outputs.csv("history", ("t", "survival", "absorbed_0", "absorbed_1"), solution.rows())
    outputs.csv("density", ("p", "q"), zip(solution.final.p_nodes.tolist(), solution.final.q_values.tolist()))

    if comparison is not None and comparison["sup_norm"] >= section.max_deviation:
        raise AcceptanceError(f"Fokker-Planck and Monte Carlo differ by {comparison['sup_norm']:.4f} "
                              f"(bound {section.max_deviation})")
    return EXIT_OK


def cmd_rate(config: RunConfig) -> int:
    """Tabulate the reduction rate of a pointer and its intermediates."""
    section = config.rate
    params = MaterialParams(L=section.L, a=section.a, d=section.d, lambda_mfp=section.lambda_mfp, c_s=section.c_s,
                            Delta=section.Delta, T_over_Theta=section.T_over_Theta, alpha=section.alpha,
                            hbar_omega_over_kT=section.hbar_omega_over_kT, xi=section.xi)
    breakdown = reduction_rate(params)
    consistency = consistency_report(params, section.dt)

    rows = [(name, value, unit, f"{QUOTED_XI0:.0e}" if name == "xi0" else "") for name, value, unit in breakdown.rows()]
    rows.append(("tau_red (xi = 0)", f"{consistency['tau_red_at_rest']:.4e}", "s", f"{QUOTED_TAU_RED:.0e}"))
    rows.append(("microscopic / normative", f"{consistency['microscopic_ratio']:.6g}", "-", ""))
    print(prettify(rows, ("quantity", "value", "unit", "quoted")))

    sweep = xi_sweep(params, section.xi_sweep) if section.xi_sweep else []
    outputs = Outputs(config, "rate")
    outputs.json({"breakdown": asdict(breakdown),
                  "inv_tau_red": breakdown.inv_tau_red, "tau_red": breakdown.tau_red, "xi0": breakdown.xi0,
                  "consistency": consistency, "xi_sweep": [list(row) for row in sweep]})
    outputs.csv("breakdown", ("quantity", "value", "unit"), breakdown.rows())
    if sweep:
        outputs.csv("sweep", ("xi", "inv_tau_red"), sweep)
    return EXIT_OK


def cmd_epr(config: RunConfig) -> int:
    """Sweep the measurement axis of an EPR pair and report joint statistics."""
    section = config.epr
    schedule = EprSchedule(section.schedule, section.tau_red_1, section.tau_red_2, section.start_delay_2)
    other = None
    if section.compare_schedule is not None:
        other = EprSchedule(section.compare_schedule, section.tau_red_1, section.tau_red_2, section.start_delay_2)

    table, points, records = [], [], []
    for theta in section.thetas:
        state = rotate_pair(section.a, section.b, theta)
        print(f"Running {section.n_runs} pairs at theta = {theta:.4f}...")
        report = run_epr_experiment(state, schedule, section.n_runs, config.seed, config.threads)
        point = report.to_dict()
        row = [theta, *report.joint_counts().tolist(), report.correlation(), spin_correlation_exact(state),
               point["chi_square"]["p_value"]]
        if other is not None:
            # independent streams for the second schedule
            second = run_epr_experiment(state, other, section.n_runs, config.seed + 1, config.threads)
            point["schedule_comparison"] = compare_schedules(report, second)
            row.append(point["schedule_comparison"]["p_value"])
        table.append(row)
        points.append(point)
        records.extend((theta,) + record for record in report.records())

    headers = ["theta", *(f"n{s}" for s in JOINT_ORDER), "correlation", "correlation_exact", "fit_p"]
    if other is not None:
        headers.append("schedule_p")
    print(prettify([tuple(f"{v:.4f}" if isinstance(v, float) else v for v in row) for row in table], headers))

    outputs = Outputs(config, "epr")
    outputs.json({"points": points})
    outputs.csv("correlations", headers, table)
    outputs.csv("runs", ("theta", "run", "alpha", "beta", "exit_time_1", "exit_time_2"), records)
    return EXIT_OK


def cmd_factorize(config: RunConfig) -> int:
    """Factorize a gridded function read from a file or built in."""
    section = config.factorize
    if section.input is not None:
        psi = read_grid(section.input)
    else:
        psi = example_function(section.example, section.shape, config.seed, section.complex_values)
    outputs = Outputs(config, "factorize")

    if psi.ndim == 2:
        result = factorize2(psi, section.rank)
        print(prettify([(i, f"{nu:.6e}") for i, nu in enumerate(result.eigenvalues)], ("term", "nu")))
        print(f"Residual J: {result.residual:.3e} (direct quadrature {result.residual_direct:.3e})")
        outputs.json({"factorization": result.to_dict()})
        rows = []
        for term, (phi1, phi2) in enumerate(zip(result.phi1, result.phi2)):
            for axis, factor in ((0, phi1), (1, phi2)):
                for x, value in zip(psi.axes[axis].tolist(), factor.tolist()):
                    rows.append((term, axis, x, np.real(value), np.imag(value)))
        outputs.csv("factors", ("term", "axis", "x", "real", "imag"), rows)
        return EXIT_OK

    if section.outer_axis is None:
        comparison = compare_orderings(psi)
        results = comparison["results"]
        print(prettify([(r.outer_axis, f"{r.residual:.6e}") for r in results], ("outer axis", "residual")))
        print(f"Best outer axis: {comparison['best_axis']}")
        payload = {"residuals": comparison["residuals"], "best_axis": comparison["best_axis"],
                   "spread": comparison["spread"]}
        best = results[comparison["best_axis"]]
    else:
        best = factorize3_stepwise(psi, section.outer_axis)
        print(f"Residual with outer axis {best.outer_axis}: {best.residual:.6e}")
        payload = {"residuals": {str(best.outer_axis): best.residual}}
    payload["norm2"] = best.norm2
    outputs.json(payload)
    rows = [(axis, x, np.real(value), np.imag(value))
            for axis, chi in enumerate(best.chi) for x, value in zip(psi.axes[axis].tolist(), chi.tolist())]
    outputs.csv("factors", ("axis", "x", "real", "imag"), rows)
    return EXIT_OK


def cmd_selfcheck(config: RunConfig) -> int:
    """Run the acceptance suite and fail with exit code 3 on any violation."""
    report = run_selfcheck(config.seed, config.selfcheck.scale, config.threads)
    print(prettify([(c["name"], "pass" if c["passed"] else "FAIL") for c in report["checks"]], ("check", "result")))
    outputs = Outputs(config, "selfcheck")
    outputs.json({"report": report}, force=True)
    if not report["passed"]:
        failed = ", ".join(c["name"] for c in report["checks"] if not c["passed"])
        raise AcceptanceError(f"acceptance checks failed: {failed}")
    return EXIT_OK


COMMANDS = {
    "reduce": cmd_reduce,
    "fp": cmd_fp,
    "rate": cmd_rate,
    "epr": cmd_epr,
    "factorize": cmd_factorize,
    "selfcheck": cmd_selfcheck,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed of all random streams")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--format", choices=FORMATS, default=argparse.SUPPRESS, help="output format")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    common.add_argument("--config", default=argparse.SUPPRESS, help="config file of section.key = value lines")
    common.add_argument("--set", action="append", default=argparse.SUPPRESS, metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    common.add_argument("--log-level", choices=LOG_LEVELS, default=argparse.SUPPRESS, help="logging level")

    parser = argparse.ArgumentParser(prog="reduction-lab", parents=[common],
                                     description="Numerical laboratory for stochastic wave-function reduction.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, command in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=command.__doc__.splitlines()[0])
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Layer defaults, config file, --set overrides and global flags."""
    config = RunConfig()
    if getattr(args, "config", None):
        config = load_config(args.config, config)
    config = apply_overrides(config, getattr(args, "set", []))
    flags = {name: getattr(args, name) for name in ("seed", "out", "format", "threads", "log_level")
             if hasattr(args, name)}
    return replace(config, **flags)


def main(argv=None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = resolve_config(args)
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID

    logging.basicConfig(level=getattr(logging, config.log_level.upper()),
                        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    logger.debug("resolved config: %s", config.echo())

    try:
        status = COMMANDS[args.command](config)
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (AcceptanceError, ConservationError) as e:
        print(f"Acceptance failure: {e}", file=sys.stderr)
        return EXIT_ACCEPTANCE

    print("\nDone!")
    return status
