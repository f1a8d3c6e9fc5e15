"""The ``mhd`` command: ``init``, ``run``, ``plot`` and ``spectrum``."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from matrixhydro import simulation
from matrixhydro.integrators import StageSolverError
from matrixhydro.storage import RunLockedError

__all__ = ["main", "build_parser"]

log = logging.getLogger("matrixhydro")


def cmd_init(args) -> int:
    cfg = simulation.load_config(args.config)
    store = simulation.init_run(cfg)
    print(f"initialized {store.root}")
    return 0


def cmd_run(args) -> int:
    cfg = simulation.load_config(args.config)
    try:
        store = simulation.run(cfg, resume=args.resume, deterministic=args.deterministic)
    except StageSolverError as err:
        print(f"error: {err}; checkpoint written", file=sys.stderr)
        return 3
    print(f"finished {store.root}")
    return 0


def cmd_plot(args) -> int:
    out = simulation.plot_snapshot(
        args.run_dir, args.t, args.o, width=args.width, global_scale=args.global_scale
    )
    print(out)
    return 0


def cmd_spectrum(args) -> int:
    out = simulation.export_spectrum(args.run_dir, args.t, args.ell_star, args.o)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mhd", description="Quantized Euler flow on the sphere.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a run directory with the seeded initial state")
    p.add_argument("config")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="integrate to simtime, or continue a run with --resume")
    p.add_argument("config")
    p.add_argument("--resume", action="store_true")
    p.add_argument("--deterministic", action="store_true", help="single-threaded linear algebra")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render a snapshot as a Hammer-projection PPM")
    p.add_argument("run_dir")
    p.add_argument("-t", type=int, default=-1, metavar="IDX", help="snapshot index (-1 = last)")
    p.add_argument("-o", default=None, metavar="FILE")
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--global-scale", action="store_true", help="colour range over all snapshots")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("spectrum", help="export the enstrophy spectrum of a snapshot as CSV")
    p.add_argument("run_dir")
    p.add_argument("-t", type=int, default=-1, metavar="IDX")
    p.add_argument("--ell-star", type=int, default=None, metavar="L")
    p.add_argument("-o", default=None, metavar="FILE")
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError, RunLockedError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
