"""Command-line entry point: ``maedsim {sweep,figure,selftest}``."""

import argparse
import logging
import sys
from dataclasses import replace

from . import selftest
from .errors import MaedError
from .harness import (
    DEFAULT_FIGURE_GRID,
    ExperimentSpec,
    emit_csv,
    figure_presets,
    figure_spec,
    load_config,
    parse_grid,
    run_experiment,
    spec_from_entries,
)


def _add_run_flags(p):
    p.add_argument("--snr-db", help="comma list or start:stop:step (stop inclusive)")
    p.add_argument("--frames", type=int, help="frames per SNR point")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--tmax", type=int, help="MAED/JL-JED iterations")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="CSV output path (default: stdout summary only)")
    p.add_argument("--no-wallclock", action="store_true", help="omit the wallclock_s column")
    p.add_argument("-q", "--quiet", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="maedsim", description="MU-MIMO jammer mitigation BER simulator")
    sub = parser.add_subparsers(dest="command")

    sw = sub.add_parser("sweep", help="run an experiment from a config file and/or flags")
    sw.add_argument("--config", help="flat key = value config file")
    sw.add_argument("--jammer", help="none, barrage, pilot, data, sparse, impersonate_single, impersonate_average")
    sw.add_argument("--constellation", choices=("gaussian", "qpsk"))
    strength = sw.add_mutually_exclusive_group()
    strength.add_argument("--rho-e-db", type=float, help="jammer/UE total receive energy ratio in dB")
    strength.add_argument("--rho-p-db", type=float, help="jammer/UE receive power ratio while active, in dB")
    sw.add_argument("--duty", type=float, help="sparse jammer duty cycle")
    sw.add_argument("--target-ue", type=int)
    sw.add_argument("--target-count", type=int)
    sw.add_argument("--detectors", help="comma list of lmmse, geniepos, maed[:tmax], jljed[:tmax]")
    sw.add_argument("--per-ue", action="store_true", help="add per-UE BER columns")
    sw.add_argument("--exclude-ues", help="comma list of UEs for an extra '<det>-excl' record")
    _add_run_flags(sw)

    fg = sub.add_parser("figure", help="run a named figure preset")
    fg.add_argument("name", choices=sorted(figure_presets()))
    _add_run_flags(fg)

    sub.add_parser("selftest", help="run the built-in property checks")
    return parser


def _sweep_spec(args):
    entries = load_config(args.config) if args.config else {}
    flag_map = {
        "snr_db": "snr_grid_db",
        "jammer": "jammer.kind",
        "constellation": "jammer.constellation",
        "duty": "jammer.sparse_duty",
        "target_ue": "jammer.target_ue",
        "target_count": "jammer.target_count",
        "detectors": "detectors",
        "frames": "frames_per_point",
        "seed": "master_seed",
        "tmax": "solver.t_max",
        "workers": "workers",
        "exclude_ues": "exclude_ues",
    }
    for flag, key in flag_map.items():
        value = getattr(args, flag)
        if value is not None:
            entries[key] = value
    if args.rho_e_db is not None:
        entries["jammer.strength_db"] = args.rho_e_db
        entries["jammer.strength_mode"] = "energy"
    if args.rho_p_db is not None:
        entries["jammer.strength_db"] = args.rho_p_db
        entries["jammer.strength_mode"] = "power"
    if args.per_ue:
        entries["per_ue_report"] = True
    return spec_from_entries(entries)


def _figure_spec(args):
    spec = figure_spec(
        args.name,
        frames=args.frames or 1000,
        snr_grid_db=parse_grid(args.snr_db) if args.snr_db else DEFAULT_FIGURE_GRID,
        master_seed=args.seed or 0,
        workers=args.workers or 1,
    )
    if args.tmax is not None:
        spec = replace(spec, solver=replace(spec.solver, t_max=args.tmax))
    return spec


def _run(spec: ExperimentSpec, args):
    def progress(point):
        if not args.quiet:
            for r in point:
                print(f"{r.detector:>14s}  snr={r.snr_db:6.2f} dB  ber={r.ber:.3e}  "
                      f"({r.bit_errors}/{r.bits_total})", file=sys.stderr)

    records = run_experiment(spec, progress=progress)
    if args.out:
        emit_csv(records, args.out, include_wallclock=not args.no_wallclock)
    return records


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.WARNING)
    try:
        if args.command == "selftest":
            return 0 if selftest.run() else 1
        spec = _sweep_spec(args) if args.command == "sweep" else _figure_spec(args)
        _run(spec, args)
    except MaedError as exc:
        print(f"maedsim: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"maedsim: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
