#!/usr/bin/env python3
"""
LZ Spectator Simulator - Main Entry Point

Spectra, trajectories, parameter sweeps, regime classification and
robustness studies of a Landau-Zener qubit coupled to a quantum spectator.
"""
import argparse
import json
import logging
import os
import sys
import time
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeRemainingColumn
from rich.table import Table

from src.models.run_config import RunConfig
from src.models.sweep_result import PipelineSettings, SweepPoint
from src.simulation.dynamics import (
    PropagationError,
    evolve_bare_lz,
    evolve_lindblad,
    evolve_unitary,
    initial_state,
    lz_infidelity_analytic,
)
from src.simulation.spectrum import (
    branch_curvatures,
    branch_energies,
    classify_regime,
    minimal_gap,
    track_branches,
)
from src.simulation.sweep import robustness_study, run_sweep
from src.utils.config_loader import ConfigError, default_output_path, resolve_config
from src.utils.logging_config import set_run_id, setup_logging
from src.utils.manifest import build_manifest, config_hash, run_id, write_manifest
from src.utils.run_journal import RunJournal
from src.utils.table_writer import (
    PARTIAL_COLUMNS,
    SWEEP_COLUMNS,
    append_csv_row,
    partial_row,
    point_from_partial,
    read_csv,
    sweep_row,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_PROPAGATION = 3
EXIT_PARTIAL_SWEEP = 4

SUBCOMMANDS = ("spectrum", "evolve", "sweep", "classify", "robustness")

# Flag dest -> RunConfig field (identical names)
CONFIG_FLAGS = (
    "g", "epsilon", "x0", "omega_c", "spectator", "truncation", "initial",
    "coupling_axis", "ti", "tf", "samples", "tol", "kappa", "channel",
    "grid_x0", "grid_wc", "workers", "seed", "out", "resume", "baseline",
    "rel_sigma", "n_samples", "distribution", "log_level",
)

console = Console(stderr=True)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser (flag defaults are None so config files can fill them)."""
    common = argparse.ArgumentParser(add_help=False)

    model = common.add_argument_group("model")
    model.add_argument('--g', type=float, help='Minimum LZ gap (default: 1)')
    model.add_argument('--epsilon', type=float, help='Sweep rate (default: 2)')
    model.add_argument('--x0', type=float, help='Qubit-spectator coupling (default: 0)')
    model.add_argument('--omega-c', dest='omega_c', type=float, help='Spectator frequency (default: 0)')
    model.add_argument('--spectator', choices=['qubit', 'oscillator'], help='Spectator kind (default: qubit)')
    model.add_argument('--truncation', type=int, help='Oscillator Fock truncation (default: 20)')
    model.add_argument('--initial', help='Spectator initial state: ground, excited, tau_x_plus, tau_x_minus, fock(n)')
    model.add_argument('--coupling-axis', dest='coupling_axis', choices=['x', 'y'],
                       help='Qubit-side Pauli of the interaction (default: x)')

    propagation = common.add_argument_group("propagation")
    propagation.add_argument('--ti', type=float, help='Start time (default: -10 g/epsilon)')
    propagation.add_argument('--tf', type=float, help='End time (default: +10 g/epsilon)')
    propagation.add_argument('--samples', type=int, help='Output samples (default: 2001)')
    propagation.add_argument('--tol', type=float, help='Integrator tolerance (default: 1e-9)')
    propagation.add_argument('--kappa', type=float, help='Spectator dissipation rate (default: 0)')
    propagation.add_argument('--channel', choices=['spectator_decay', 'spectator_dephasing'],
                             help='Dissipation channel (default: spectator_decay)')
    propagation.add_argument('--baseline', action='store_true', default=None,
                             help='Add the bare LZ probability column P_lz')

    sweep = common.add_argument_group("sweep and robustness")
    sweep.add_argument('--grid-x0', dest='grid_x0', help='x0/g axis lo:hi:n:log (default: 0.05:8:81:log)')
    sweep.add_argument('--grid-wc', dest='grid_wc', help='omega_c/x0 axis lo:hi:n:log (default: 0.05:8:81:log)')
    sweep.add_argument('--workers', type=int, help='Worker processes (default: 1)')
    sweep.add_argument('--resume', action='store_true', default=None,
                       help='Resume an interrupted sweep from its partial output')
    sweep.add_argument('--seed', type=int, help='Random seed (default: 0)')
    sweep.add_argument('--rel-sigma', dest='rel_sigma', type=float, help='Relative parameter noise (default: 0.1)')
    sweep.add_argument('--n-samples', dest='n_samples', type=int, help='Robustness samples (default: 100)')
    sweep.add_argument('--distribution', choices=['uniform', 'gaussian'], help='Noise distribution (default: uniform)')

    output = common.add_argument_group("output")
    output.add_argument('--out', help='Output file (default: $LZSPEC_OUTPUT_DIR/<subcommand>.csv|json)')
    output.add_argument('--config', help='JSON config file or run manifest')
    output.add_argument('--log-level', dest='log_level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level (default: INFO)')

    parser = argparse.ArgumentParser(
        description="Landau-Zener qubit with a quantum spectator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Branch-tracked spectrum with x0=0 reference branches
  python -m src.main spectrum --x0 1.8 --omega-c 1.8

  # Trajectory in the superadiabatic regime with the bare LZ baseline
  python -m src.main evolve --x0 2 --omega-c 0.5 --baseline --out run/evolve.csv

  # Infidelity map on 8 workers, resumable
  python -m src.main sweep --workers 8 --resume --out run/sweep.csv

  # Regime of a point (JSON on stdout)
  python -m src.main classify --x0 4 --omega-c 12

  # 10% parameter noise around an optimum
  python -m src.main robustness --x0 2 --omega-c 0.5 --rel-sigma 0.1 --n-samples 100
        """
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        subparsers.add_parser(name, parents=[common], help=f"Run the {name} computation")
    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    return build_parser().parse_args(argv)


def _output_path(config: RunConfig, command: str, extension: str) -> str:
    return config.out or default_output_path(command, extension)


def cmd_spectrum(config: RunConfig, out: str, journal: RunJournal) -> Dict[str, Any]:
    """
    Branch-tracked spectrum with the x0=0 reference branches.

    Columns: t, E_1..E_n, E0_1..E0_n, flags ("degenerate" where gauge fixing was skipped).
    """
    p = config.model_params()
    grid = config.time_grid()
    times = grid.times

    slices = track_branches(p, times)
    reference = branch_energies(p.replace(x0=0.0), times)
    dim = p.dim

    header = [f"E_{k + 1}" for k in range(dim)] + [f"E0_{k + 1}" for k in range(dim)]
    rows = [
        [s.t, *s.eigenvalues.tolist(), *reference[i].tolist(), "degenerate" if s.is_degenerate else ""]
        for i, s in enumerate(slices)
    ]
    # nothing is written until every analysis has succeeded
    report = minimal_gap(p, (grid.t_start, grid.t_end))
    curvature = np.abs(branch_curvatures(p, 0.0)).max()
    bare_curvature = np.abs(branch_curvatures(p.replace(x0=0.0), 0.0)).max()
    write_csv(out, ["t", *header, "flags"], rows)
    logger.info(f"Central minimal gap {report.gap:.6g} at t={report.t_at:.6g}")

    table = Table(title="Spectrum")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    table.add_row("central minimal gap", f"{report.gap:.6g}")
    table.add_row("at t", f"{report.t_at:.6g}")
    table.add_row("max |d2E/dt2| at t=0", f"{curvature:.6g}")
    table.add_row("max |d2E/dt2| at t=0 (x0=0)", f"{bare_curvature:.6g}")
    console.print(table)

    return {
        "minimal_gap": report.gap,
        "t_at_minimal_gap": report.t_at,
        "max_curvature_t0": float(curvature),
        "max_curvature_t0_bare": float(bare_curvature)
    }


def cmd_evolve(config: RunConfig, out: str, journal: RunJournal) -> Dict[str, Any]:
    """
    Trajectory table t, P, gamma, S2, norm_defect (+ P_lz with --baseline).

    Lindblad propagation is used when kappa > 0.
    """
    p = config.model_params()
    grid = config.time_grid()
    psi0 = initial_state(p, grid.t_start)

    diss = config.dissipation()
    if diss.rate > 0:
        traj = evolve_lindblad(p, grid, psi0.projector(), diss, config.tol)
    else:
        traj = evolve_unitary(p, grid, psi0, config.tol)

    columns = [traj.times, traj.p_of_t, traj.purity_of_t, traj.renyi_of_t, traj.norm_defect]
    header = ["t", "P", "gamma", "S2", "norm_defect"]
    if config.baseline:
        columns.append(evolve_bare_lz(p.g, p.epsilon, grid, config.tol).p_of_t)
        header.append("P_lz")
    write_csv(out, header, zip(*(column.tolist() for column in columns)))

    table = Table(title="Trajectory")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    table.add_row("P(t_f)", f"{traj.final_probability:.6g}")
    table.add_row("min purity", f"{traj.purity_of_t.min():.6g}")
    table.add_row("bare LZ exp(-pi g^2/2eps)", f"{lz_infidelity_analytic(p.g, p.epsilon):.6g}")
    table.add_row("flags", ", ".join(traj.flags) or "-")
    console.print(table)

    return {"final_probability": traj.final_probability, "flags": list(traj.flags)}


def _load_partial(partial: str, sidecar: str, expected_hash: str) -> Dict[tuple, SweepPoint]:
    if not (os.path.exists(partial) and os.path.exists(sidecar)):
        return {}
    with open(sidecar, "r") as handle:
        stored = json.load(handle).get("config_hash")
    if stored != expected_hash:
        logger.warning("Partial sweep output belongs to a different configuration; starting over")
        return {}

    points = {}
    for row in read_csv(partial):
        try:
            point = point_from_partial(row)
        except (KeyError, ValueError, TypeError):
            # interrupted mid-write
            continue
        points[(point.row, point.col)] = point
    return points


def cmd_sweep(config: RunConfig, out: str, journal: RunJournal) -> Dict[str, Any]:
    """
    Infidelity/purity map over (x0/g, omega_c/x0), resumable.

    Points are appended to <out>.partial.csv as they complete; the final
    CSV is written in grid order and the partial files are removed.
    """
    grid = config.sweep_grid()
    settings = PipelineSettings(tol=config.tol)
    partial = out + ".partial.csv"
    sidecar = out + ".partial.json"
    expected_hash = config_hash(config.computational_dict())

    completed = _load_partial(partial, sidecar, expected_hash) if config.resume else {}
    if completed:
        journal.log_resumed(len(completed))
        logger.info(f"Resuming sweep with {len(completed)} completed points")
    else:
        for stale in (partial, sidecar):
            if os.path.exists(stale):
                os.remove(stale)
        write_json(sidecar, {"config_hash": expected_hash})

    rows, cols = grid.shape
    with Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeRemainingColumn(),
        console=console
    ) as progress:
        task = progress.add_task("Sweep", total=rows * cols, completed=len(completed))

        def on_point(point: SweepPoint) -> None:
            append_csv_row(partial, PARTIAL_COLUMNS, partial_row(point))
            if point.failed:
                journal.log_point_failed(point.row, point.col, point.message)
            progress.advance(task)

        result = run_sweep(
            grid, settings, config.workers, on_point=on_point, completed=completed,
            manifest={"config": config.computational_dict(), "config_hash": expected_hash, "seed": config.seed}
        )

    write_csv(out, SWEEP_COLUMNS, (sweep_row(grid, point) for point in result.points))
    for leftover in (partial, sidecar):
        if os.path.exists(leftover):
            os.remove(leftover)

    infidelities = result.infidelity_map()
    regimes: Dict[str, int] = {}
    for point in result.points:
        label = point.regime.value if point.regime else "failed"
        regimes[label] = regimes.get(label, 0) + 1

    table = Table(title=f"Sweep {rows}x{cols}")
    table.add_column("Quantity")
    table.add_column("Value", justify="right")
    table.add_row("best infidelity", f"{np.nanmin(infidelities):.3e}" if result.n_failed < rows * cols else "-")
    table.add_row("points below 5e-3", str(int(np.sum(infidelities < 5e-3))))
    for label in sorted(regimes):
        table.add_row(f"regime {label}", str(regimes[label]))
    table.add_row("failed points", str(result.n_failed))
    console.print(table)

    return {
        "failed_points": result.n_failed,
        "pipeline": result.manifest["settings"],
        "thresholds": result.manifest["thresholds"],
        "reused_points": result.manifest["reused_points"]
    }


def cmd_classify(config: RunConfig, out: Optional[str], journal: RunJournal) -> Dict[str, Any]:
    """Regime of a single point; JSON on stdout (and in --out when given)."""
    classification = classify_regime(config.model_params())
    payload = classification.to_dict()
    print(json.dumps(payload, sort_keys=True))
    if out:
        write_json(out, payload)

    table = Table(title="Regime")
    table.add_column("Delta", justify="right")
    table.add_column("Delta_c1", justify="right")
    table.add_column("Delta_c2", justify="right")
    table.add_column("Regime")
    c2 = payload["delta_c2"]
    table.add_row(
        f"{classification.delta:.6g}",
        f"{classification.delta_c1:.6g}",
        "above window" if c2 is None else f"{c2:.6g}",
        classification.regime.value
    )
    console.print(table)
    return payload


def cmd_robustness(config: RunConfig, out: str, journal: RunJournal) -> Dict[str, Any]:
    """Infidelity statistics under relative parameter noise (JSON)."""
    report = robustness_study(
        config.model_params(),
        config.rel_sigma,
        config.n_samples,
        config.seed,
        distribution=config.noise_distribution(),
        settings=PipelineSettings(tol=config.tol),
        workers=config.workers
    )
    write_json(out, report.to_dict())

    table = Table(title=f"Robustness ({report.n_samples} samples, rel_sigma={report.rel_sigma})")
    table.add_column("Statistic")
    table.add_column("Infidelity", justify="right")
    table.add_row("mean", f"{report.mean:.3e}")
    table.add_row("max", f"{report.maximum:.3e}")
    for label, value in report.quantiles.items():
        table.add_row(label, f"{value:.3e}")
    table.add_row("failed", str(report.n_failed))
    console.print(table)
    return {"failed_samples": report.n_failed}


COMMANDS: Dict[str, Callable[[RunConfig, Optional[str], RunJournal], Dict[str, Any]]] = {
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "classify": cmd_classify,
    "robustness": cmd_robustness,
}


def run_command(command: str, config: RunConfig) -> int:
    """
    Run one subcommand with manifest and journal bookkeeping.

    Args:
        command: Subcommand name
        config: Resolved configuration

    Returns:
        Exit code
    """
    extension = "json" if command in ("classify", "robustness") else "csv"
    out = config.out if command == "classify" else _output_path(config, command, extension)

    set_run_id(run_id(config))
    journal_dir = os.path.dirname(os.path.abspath(out)) if out else os.environ.get("LZSPEC_OUTPUT_DIR", ".")
    os.makedirs(journal_dir, exist_ok=True)
    journal = RunJournal(journal_dir, run_id(config))
    journal.log_start(command, config_hash(config.computational_dict()))

    started = time.monotonic()
    try:
        summary = COMMANDS[command](config, out, journal)

        elapsed = time.monotonic() - started
        if out:
            manifest_path = write_manifest(out, build_manifest(config, command, elapsed, summary))
            logger.info(f"Wrote {out} and {manifest_path} in {elapsed:.2f}s")

        failed = summary.get("failed_points", 0)
        journal.log_complete(command, out or "stdout", failed)

    except PropagationError as e:
        logger.error(f"Propagation failed at t={e.t_fail:.6g}: {e}")
        journal.log_error(command, str(e))
        return EXIT_PROPAGATION

    except KeyboardInterrupt:
        logger.info("User cancelled operation (Ctrl+C)")
        journal.log_error(command, "interrupted")
        return EXIT_FAILURE

    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        journal.log_error(command, str(e))
        return EXIT_FAILURE

    finally:
        journal.close()

    if failed:
        logger.warning(f"Sweep finished with {failed} failed points")
        return EXIT_PARTIAL_SWEEP
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        Exit code (0 ok, 2 config error, 3 propagation failure, 4 partial sweep)
    """
    # Parse arguments
    args = parse_args(argv)

    # Setup logging before the config is resolved so config errors are reported
    setup_logging(level=args.log_level or "INFO")

    flags = {name: getattr(args, name) for name in CONFIG_FLAGS}
    try:
        config = resolve_config(flags, args.config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG

    setup_logging(level=config.log_level)
    return run_command(args.command, config)


if __name__ == '__main__':
    sys.exit(main())
