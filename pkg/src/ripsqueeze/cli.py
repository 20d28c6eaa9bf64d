"""Command-line entry point.

Subcommands write their data into ``--out`` together with the resolved
configuration (``config.json``) and a manifest.  Exit status is 0 on success,
1 when a result falls outside its tolerance and 2 for configuration errors.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .config import ConfigError, config_hash, emit_config, load_config, parse_grid
from .experiments import SweepSpec, calibrate_drive, reproduce_table1, sweep
from .results import ResultManifest, write_json, write_rows, write_sweep_csv
from .trajectory import adiabatic_parity_phase, parity_phase, propagate_sectors, write_csv

log = logging.getLogger("ripsqueeze")

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2


def _drive(cfg, args):
    drive = cfg.drive_params()
    if getattr(args, "calibrate", False):
        drive = replace(drive, eps0=calibrate_drive(cfg.system_params(), drive.tau, dt=cfg.numerics.dt_trajectory))
        log.info("calibrated eps0 = %.6f MHz", drive.eps0)
    return drive


def cmd_calibrate(cfg, args, out):
    system, tau = cfg.system_params(), cfg.drive.tau
    eps0 = calibrate_drive(system, tau, dt=cfg.numerics.dt_trajectory)
    drive = replace(cfg.drive_params(), eps0=eps0)
    result = {
        "eps0_mhz": eps0,
        "tau_ns": tau,
        "area_rad": parity_phase(system, drive, dt=cfg.numerics.dt_trajectory),
        "adiabatic_area_rad": adiabatic_parity_phase(system, drive),
        "configured_eps0_mhz": cfg.drive.eps0,
    }
    print(f"eps0 = {eps0:.4f} MHz (area {result['area_rad']:.6f} rad)")
    return [write_json(out / "calibration.json", result)], result, EXIT_OK


def cmd_trajectory(cfg, args, out):
    system, drive = cfg.system_params(), _drive(cfg, args)
    traj = propagate_sectors(system, drive, dt=cfg.numerics.dt_trajectory)
    path = out / "trajectory.csv"
    write_csv(traj, path)
    summary = {
        "max_abs2_alpha": traj.max_photons(0),
        "closure_ratio": traj.closure_ratio(0),
        "area_rad": float(traj.area[-1]),
        "eps0_mhz": drive.eps0,
    }
    print(f"max |alpha|^2 = {summary['max_abs2_alpha']:.4f}, closure = {summary['closure_ratio']:.3e}")
    return [path], summary, EXIT_OK


def _sweep_spec(cfg, args, engine, default_grid):
    axis, grid = cfg.sweep.axis, default_grid if default_grid is not None else cfg.sweep.grid
    if args.grid:
        g_axis, grid = parse_grid(args.grid)
        axis = g_axis or axis
    try:
        return SweepSpec(
            system=cfg.system_params(),
            drive=_drive(cfg, args),
            squeeze=cfg.squeeze_params(),
            dpa=cfg.dpa_params(),
            axis=axis,
            grid=tuple(grid),
            engine=engine,
            n_cav=cfg.numerics.n_cav,
            n_src=cfg.numerics.n_src,
            dt_trajectory=cfg.numerics.dt_trajectory,
            dt_cascaded=cfg.numerics.dt_cascaded,
            pump_from_squeeze=cfg.dpa.pump is None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), path="sweep") from exc


def _emit_sweep(spec, out, workers):
    records = sweep(spec, workers=workers)
    paths = [write_sweep_csv(out / "sweep.csv", records), write_json(out / "records.json", [r.to_dict() for r in records])]
    for r in records:
        if r.ok:
            print(f"{r.engine:>9} {spec.axis}={r.value:<10.6g} error={r.error:.6e} F_avg={100 * r.f_avg:.4f}%")
        else:
            print(f"{r.engine:>9} {spec.axis}={r.value:<10.6g} FAILED {r.failure}")
    failed = sum(not r.ok for r in records)
    summary = {"points": len(records), "failed": failed}
    return paths, summary, EXIT_TOLERANCE if failed else EXIT_OK


def cmd_analytic_sweep(cfg, args, out):
    spec = _sweep_spec(cfg, args, args.engine or "analytic", None)
    return _emit_sweep(spec, out, args.workers)


def cmd_cascaded_run(cfg, args, out):
    # a single point at the configured squeezing unless a grid is given
    spec = _sweep_spec(cfg, args, args.engine or "cascaded", None if args.grid else [cfg.squeeze.db])
    if not args.grid:
        spec = replace(spec, axis="db")
    return _emit_sweep(spec, out, args.workers)


def cmd_table1(cfg, args, out):
    engine = args.engine or "analytic"
    engines = ("analytic", "cascaded") if engine == "both" else (engine,)
    report = reproduce_table1(engines=engines, dt=cfg.numerics.dt_trajectory, n_cav=cfg.numerics.n_cav,
                              n_src=cfg.numerics.n_src, dt_cascaded=cfg.numerics.dt_cascaded)
    text = report.format()
    print(text)
    rows = [
        {"row": c.row, "column": c.column, "engine": c.engine, "reference_pct": c.reference,
         "computed_pct": c.computed, "deviation_pp": c.deviation, "tolerance_pp": c.tolerance, "ok": c.ok}
        for c in report.cells
    ]
    cols = ("row", "column", "engine", "reference_pct", "computed_pct", "deviation_pp", "tolerance_pp", "ok")
    paths = [write_rows(out / "table1.csv", rows, cols)]
    (out / "table1.txt").write_text(text + "\n")
    paths.append(out / "table1.txt")
    summary = {"all_within_tolerance": report.ok, "eps0_mhz": report.eps0, "wall_clock_s": report.wall_clock}
    return paths, summary, EXIT_OK if report.ok else EXIT_TOLERANCE


COMMANDS = {
    "calibrate": cmd_calibrate,
    "trajectory": cmd_trajectory,
    "analytic-sweep": cmd_analytic_sweep,
    "cascaded-run": cmd_cascaded_run,
    "table1": cmd_table1,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="ripsqueeze", description="Resonator-induced phase gate with squeezed drive.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "calibrate": "find the drive amplitude that closes the gate condition",
        "trajectory": "export the cavity field trajectories",
        "analytic-sweep": "gate error versus squeezing power, angle or detuning",
        "cascaded-run": "full master-equation simulation of one or more points",
        "table1": "recompute the fidelity table with tolerances",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="JSON configuration (defaults to table row 1)")
        p.add_argument("--out", type=Path, default=Path("results"), help="output directory")
        p.add_argument("--engine", choices=("analytic", "cascaded", "both"), help="engine selector")
        p.add_argument("--grid", help="sweep grid, 'axis=start:stop:step' or 'axis=v1,v2,...'")
        p.add_argument("--calibrate", action="store_true", help="recalibrate eps0 before running")
        p.add_argument("--workers", type=int, default=1, help="parallel workers for sweeps")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        paths, summary, code = COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg_path = write_json(out / "config.json", emit_config(cfg))
    manifest = ResultManifest(
        config_hash=config_hash(cfg),
        config_path=str(args.config) if args.config else None,
        outputs=[str(p) for p in [cfg_path, *paths]],
        diagnostics=summary,
        command=args.command,
    )
    manifest.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
