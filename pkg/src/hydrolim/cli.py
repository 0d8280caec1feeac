"""Command-line front end.

Subcommands: generate, simulate, analyze, verify, sweep, report.  Exit codes:
0 success, 2 validation failure, 3 runtime failure (a coincident pair), 4 I/O
failure.  HYDROLIM_THREADS caps kernel parallelism without changing results.
"""

import argparse
import sys
from pathlib import Path

from . import io, pipeline
from .config import apply_overrides, load_config
from .errors import DomainError


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hydrolim",
        description="Rescaled N-body simulator and hydrodynamic-limit verification harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("generate", "build the initial configuration and scaling certificate"),
        ("simulate", "integrate the system from the stored initial configuration"),
        ("analyze", "coarse-grain the stored trajectory into hydrodynamic fields"),
        ("verify", "evaluate weak-form residuals for the stored trajectory"),
        ("sweep", "run the full pipeline over a list of N values"),
        ("report", "emit per-figure plot data from a sweep report"),
    ]:
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to the run configuration file")
        cmd.add_argument("--out", help="override the [output] dir")
        cmd.add_argument("--n", type=int, help="override [ic] n")
        cmd.add_argument("--seed", type=int, help="override [ic] seed")
        cmd.add_argument("--h", type=float, help="override [integrator] h")
        cmd.add_argument("--stride", type=int, help="override [integrator] stride")
        if name == "generate":
            cmd.add_argument(
                "--allow-uncertified",
                action="store_true",
                help="write the configuration even when the certificate fails",
            )
    return parser


def _run_config(args):
    cfg = load_config(args.config)
    return apply_overrides(cfg, n=args.n, seed=args.seed, h=args.h, stride=args.stride, out=args.out)


def _cmd_report(args):
    cfg = load_config(args.config, allow_sweep=True)
    sweep_dir = Path(args.out if args.out else cfg.base.out_dir)
    report_path = sweep_dir / pipeline.SWEEP_REPORT_FILE
    meta, header, rows = io.read_csv(report_path)
    ok_rows = [dict(zip(header, row)) for row in rows if row[-1] == "ok"]
    if not ok_rows:
        raise ValueError(f"{report_path} has no successful rows to plot")
    figures = {
        "fig_interaction_decay.csv": ("n", "sup_interaction"),
        "fig_b_n.csv": ("n", "b_n"),
        "fig_sigma_n.csv": ("n", "sigma_n"),
        "fig_char_distance.csv": ("n", "char_dist_to_ref"),
        "fig_field_distance.csv": ("n", "field_dist_to_ref"),
        "fig_energy_drift.csv": ("n", "energy_drift"),
    }
    for fname, (cx, cy) in figures.items():
        io._write_csv(
            sweep_dir / fname,
            f"hydrolim figure v{io.SWEEP_VERSION}",
            {"source": pipeline.SWEEP_REPORT_FILE},
            [cx, cy],
            [[r[cx], r[cy]] for r in ok_rows],
        )
    print(f"wrote {len(figures)} figure files to {sweep_dir}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg = _run_config(args)
            ic, plan = pipeline.run_generate(cfg, allow_uncertified=args.allow_uncertified)
            print(f"generated n={ic.n} b_n={plan.B_N:.6g} sigma_n={plan.sigma_N:.6g} "
                  f"certified={str(plan.certified).lower()}")
        elif args.command == "simulate":
            cfg = _run_config(args)
            traj = pipeline.run_simulate(cfg)
            print(f"simulated n={traj.n} samples={traj.n_samples} h={traj.h:.6g}")
        elif args.command == "analyze":
            cfg = _run_config(args)
            flds = pipeline.run_analyze(cfg)
            print(f"analyzed into {flds.nt} time bins x {flds.grid.n_cells} cells")
        elif args.command == "verify":
            cfg = _run_config(args)
            analysis = pipeline.run_verify(cfg)
            print(f"verified {len(analysis.rows)} test functions; "
                  f"sup|I| = {analysis.sup_interaction:.6g}")
        elif args.command == "sweep":
            sweep_cfg = load_config(args.config, allow_sweep=True)
            if args.out:
                from dataclasses import replace

                sweep_cfg = replace(sweep_cfg, base=replace(sweep_cfg.base, out_dir=args.out))
            analyses, slope = pipeline.run_sweep(sweep_cfg)
            print(f"sweep complete over N = {sorted(analyses)}; "
                  f"interaction decay slope = {slope:.4f}")
        elif args.command == "report":
            _cmd_report(args)
    except DomainError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
