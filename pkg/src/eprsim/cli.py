"""Command-line entry point: ``eprsim --mode MODE [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import dataclasses
import sys

from . import experiments
from .experiments import MODES, ConfigError, ExperimentConfig


def _taus(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad window list {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep usage errors on the same one-line format as runtime errors
        self.exit(2, f"error: UsageError: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="eprsim",
        description="Analytic CHSH surfaces and coincidence-window Monte Carlo experiments.",
    )
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV path (default: $EPRSIM_OUTPUT_DIR/<mode>.csv)")
    p.add_argument("--tau", type=_taus, dest="taus", help="window width(s), comma separated")
    p.add_argument("--y", type=float, help="excess factor of legitimate coincidences")
    p.add_argument("--rate", type=float)
    p.add_argument("--pulse-length", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--efficiency", type=float)
    p.add_argument("--grid-w", type=int)
    p.add_argument("--grid-v", type=int)
    p.add_argument("--zl", type=float)
    p.add_argument("--zr", type=float)
    p.add_argument("--w", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--plot", action="store_true", help="also write SVG plots next to the CSVs")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    config = experiments.load_config(args.config) if args.config else ExperimentConfig()
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in names and v is not None}
    return dataclasses.replace(config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        if args.dump_config:
            sys.stdout.write(experiments.serialize(config))
            return 0
        paths = experiments.run(config)
        if args.plot:
            from .plotting import plot_outputs

            paths += plot_outputs(config.mode, paths)
    except (ConfigError, ValueError, OSError) as exc:
        # single machine-parseable line
        msg = str(exc).replace("\n", " ")
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
