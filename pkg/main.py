"""Command-line entry point: converge, sweep, scale, oracle, validate"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from config.presets import PRESETS
from config.run_config import COMMANDS, FORMATS, RunConfig, load_run_config
from config.settings import DEFAULT_LOG_LEVEL, VERSION, configure_logging
from engine.distributed import run
from experiments.convergence import fit_geometric, iterations_to_settle
from experiments.scaling import DEFAULT_LEVELS, run_scaling_seeds
from experiments.sweep import DEFAULT_SWEEP_DB, sweep_interference, sweep_points
from experiments.validation import all_passed, run_validation
from models.errors import ConfigError, ExperimentError, PowerControlError
from models.state import RunStatus, TraceRecord
from models.utility import UtilitySet
from persistence.outputs import write_json, write_resolved_config, write_rows
from solver.oracle import solve_centralized
from ui.svg_plot import LinePlot, plot_columns

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSTABLE = 2


def banner(title: str):
    print("=" * 70)
    print(title)
    print("=" * 70)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Full-duplex massive-MIMO power control simulator")
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="JSON run configuration")
        cmd.add_argument("--scenario", help="scenario JSON file (dB-suffixed fields)")
        cmd.add_argument("--preset", help=f"one of {', '.join(sorted(PRESETS))}, fig2 or fig3")
        cmd.add_argument("--gamma", type=float, help="step size of the distributed algorithm")
        cmd.add_argument("--max-iters", type=int, dest="max_iters")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--seeds", type=int, help="number of scenario draws (scale, validate)")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--C", type=float, dest="C", help="antennas per uplink-downlink user pair")
        cmd.add_argument("--levels", type=int, help="number of nested levels (scale, validate)")
        cmd.add_argument("--rho", type=float)
        cmd.add_argument("--ul-utility", dest="ul_utility", help='e.g. "log:w=1" or "afair:alpha=2,w=1"')
        cmd.add_argument("--dl-utility", dest="dl_utility")
        cmd.add_argument("--format", choices=FORMATS, dest="output_format")
        cmd.add_argument("--log-level", dest="log_level", default=DEFAULT_LOG_LEVEL)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Config file (if any) overlaid with explicit flags, validated"""
    config = load_run_config(args.config, args.command) if args.config else RunConfig(command=args.command)
    if args.scenario is not None:
        config.scenario_path = args.scenario
        config.scenario = None
        config.generator = None
    for name in ("preset", "seed", "seeds", "C", "levels", "rho", "ul_utility", "dl_utility", "output_format"):
        value = getattr(args, name)
        if value is not None:
            setattr(config, name, value)
    if args.out is not None:
        config.output_dir = args.out
    if args.gamma is not None:
        config.algo["gamma"] = args.gamma
    if args.max_iters is not None:
        config.algo["max_iters"] = args.max_iters
    return config.validate()


def cmd_converge(config: RunConfig) -> int:
    """Distributed runs against the oracle; trace CSV and fit JSON per case"""
    out = Path(config.output_dir)
    exit_code = EXIT_OK
    for label, s, utils, params in config.resolve_cases():
        oracle = solve_centralized(s, utils)
        state = run(s, utils, params, utility_star=oracle.utility_star)
        header = TraceRecord.header(s.K_ul, s.K_dl)
        rows = [dict(zip(header, rec.to_row())) for rec in state.trace]
        write_rows(out, f"trace_{label}", rows, config.output_format)
        try:
            fit = fit_geometric(state.eps_series()).to_dict()
        except ExperimentError as exc:
            logger.warning("%s: %s", label, exc)
            fit = None
        write_json(out / f"fit_{label}.json", {
            "status": state.status.value,
            "message": state.message,
            "rounds": state.t,
            "gamma": params.gamma,
            "final_utility": state.final_utility,
            "utility_star": oracle.utility_star,
            "relative_gap": abs(state.final_utility - oracle.utility_star) / abs(oracle.utility_star),
            "settle_round": iterations_to_settle(state.utility_series()),
            "fit": fit,
        })
        plot_columns(rows, "iter", ["eps"], f"Error to optimum, {label}", log_y=True).save(
            out / f"trace_{label}.svg")
        print(f"{label}: {state.status.value} after {state.t} rounds, "
              f"U={state.final_utility:.10g}, U*={oracle.utility_star:.10g}")
        if state.status == RunStatus.UNSTABLE:
            print(f"{label}: {state.message}")
            exit_code = EXIT_UNSTABLE
    return exit_code


def cmd_sweep(config: RunConfig) -> int:
    """Optimal versus full-power uplink over a range of interference gains"""
    out = Path(config.output_dir)
    for label, s, utils, _ in config.resolve_cases():
        low, high, count = config.sweep_db or (PRESETS[label].sweep_db if label in PRESETS else DEFAULT_SWEEP_DB)
        points = sweep_interference(s, utils, sweep_points(low, high, count))
        rows = [p.to_row() for p in points]
        write_rows(out, f"sweep_{label}", rows, config.output_format)
        plot_columns(rows, "g_i_db", ["p_ul_star"], f"Optimal uplink power, {label}").save(
            out / f"sweep_power_{label}.svg")
        plot_columns(rows, "g_i_db", ["utility_optimal", "utility_naive"], f"Sum utility, {label}").save(
            out / f"sweep_utility_{label}.svg")
        print(f"{label}: {len(points)} points, p_ul* from {points[0].p_ul_star:.6g} W "
              f"to {points[-1].p_ul_star:.6g} W, largest gap {max(p.gap for p in points):.6g}")
    return EXIT_OK


def cmd_scale(config: RunConfig) -> int:
    """Theta fractions over nested scenario sequences"""
    out = Path(config.output_dir)
    levels = DEFAULT_LEVELS[:config.levels]
    K_ul, K_dl = levels[-1]
    utils = UtilitySet.uniform(config.ul_utility or "log:w=1", config.dl_utility or "log:w=1", K_ul, K_dl)
    seeds = range(config.seed, config.seed + config.seeds)
    report = run_scaling_seeds(utils, seeds, C=config.C, levels=levels, loss=config.loss_model(),
                               rho=config.rho)
    write_rows(out, "scaling", report.to_rows(), config.output_format)

    rhos = sorted(report.rows[0].theta)
    summary = []
    for idx, level in enumerate(report.level_indices()):
        row = {"level": level, "K_ul": levels[idx][0], "K_dl": levels[idx][1]}
        row.update({f"median_theta_{r:g}": report.median_theta(r)[idx] for r in rhos})
        summary.append(row)
    write_rows(out, "scaling_summary", summary, config.output_format)
    chart = LinePlot("Median share of uplink users below rho P_max", "level", "theta")
    for r in rhos:
        chart.add(f"rho={r:g}", [row["level"] for row in summary], [row[f"median_theta_{r:g}"] for row in summary])
    chart.save(out / "scaling.svg")
    for row in summary:
        print(f"level {row['level']} ({row['K_ul']}x{row['K_dl']}): "
              f"median theta({config.rho:g}) = {row[f'median_theta_{config.rho:g}']:.3f}")
    return EXIT_OK


def cmd_oracle(config: RunConfig) -> int:
    """Certified optimum of each case"""
    out = Path(config.output_dir)
    for label, s, utils, _ in config.resolve_cases():
        result = solve_centralized(s, utils)
        write_json(out / f"certificate_{label}.json", result.to_certificate())
        write_rows(out, f"oracle_{label}", [result.to_row()], config.output_format)
        print(f"{label}: U*={result.utility_star:.10g}, gap={result.duality_gap:.3e}, "
              f"status {result.status.value}")
    return EXIT_OK


def cmd_validate(config: RunConfig) -> int:
    """Run every invariant check; exit code 0 iff all pass"""
    results = run_validation(seeds=config.seeds, levels=config.levels, C=config.C, rho=config.rho,
                             seed=config.seed)
    write_rows(config.output_dir, "validation", [r.to_row() for r in results], config.output_format)
    for r in results:
        print(f"{'✓' if r.passed else '✗'} {r.name}: {r.value:.6g} (threshold {r.threshold:.6g}) {r.detail}")
    return EXIT_OK if all_passed(results) else EXIT_ERROR


HANDLERS = {
    "converge": cmd_converge,
    "sweep": cmd_sweep,
    "scale": cmd_scale,
    "oracle": cmd_oracle,
    "validate": cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    banner(f"{args.command} (version {VERSION})")
    write_resolved_config(config.output_dir, config.to_dict())
    try:
        code = HANDLERS[args.command](config)
    except PowerControlError as exc:
        logger.error("%s failed: %s", args.command, exc)
        code = EXIT_ERROR
    banner(f"outputs in {config.output_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
