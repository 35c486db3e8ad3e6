"""Command line entry point: ``rydpump <subcommand> [--config ...]``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments
from .config import load_config
from .errors import RydpumpError

log = logging.getLogger("rydpump")

# subcommand -> (default preset, runner, takes jobs/seed)
COMMANDS = {
    "fig2": ("fig2", experiments.run_fig2_sweep),
    "fig3": ("fig3", experiments.run_fig3),
    "fig3-inset": ("fig3_inset", experiments.run_fig3_inset),
    "triangle": ("triangle", experiments.run_triangle),
    "master": ("fig2_trace", experiments.run_master),
    "mcwf": ("mcwf", experiments.run_mcwf),
    "rates": ("fig2", experiments.run_rates),
    "ising": ("fig3_inset", experiments.run_ising),
}
STOCHASTIC = {"fig3", "fig3-inset", "triangle", "mcwf"}
PARALLEL = STOCHASTIC | {"fig2"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rydpump", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (preset, fn) in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
        p.add_argument("--config", default=preset,
                       help=f"config file or preset name (default: {preset})")
        p.add_argument("--out", type=Path, help="output CSV path (default: config output.path)")
        p.add_argument("--seed", type=int, help="override run.seed")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    _, fn = COMMANDS[args.command]
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.run["seed"] = args.seed
        kwargs = {"jobs": args.jobs} if args.command in PARALLEL else {}
        table = fn(cfg, **kwargs)
        out = args.out or Path(cfg.output.get("path", f"{args.command}.csv"))
        for path in table.write(out):
            log.info("wrote %s", path)
        print(out)
    except RydpumpError as exc:
        print(f"rydpump {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
