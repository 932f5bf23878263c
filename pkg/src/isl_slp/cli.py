"""Command-line front end.

    isl-slp <experiment> --config <file> [--seed N] [--out DIR]
            [--override key=value ...]

Exit codes: 0 success, 2 infeasible QoS/power combination, 1 usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, build_system_config, load_config, parse_config_text
from .experiments import EXPERIMENT_DEFAULTS, EXPERIMENTS, run_experiment
from .subsolver import InfeasibleError


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this project reserves 2 for
    infeasibility, so usage errors exit 1 instead."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="isl-slp",
        description="Radar-sidelobe-shaped multicarrier waveform experiments.",
    )
    p.add_argument("experiment", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, help="base RNG seed (overrides rng_seed)")
    p.add_argument("--out", help="output directory (default runs/<experiment>)")
    p.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="config override, repeatable; dotted keys scope to one experiment",
    )
    return p


def assemble_config(name: str, config_path: str | None, overrides: list[str]):
    """Merge built-in experiment defaults, the config file, its dotted
    per-experiment section, and CLI overrides (last wins)."""
    merged = dict(EXPERIMENT_DEFAULTS.get(name, {}))
    if config_path is not None:
        base, sections = load_config(config_path)
        merged.update(base)
        merged.update(sections.get(name, {}))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--override expects KEY=VALUE, got {item!r}")
    obase, osections = parse_config_text("\n".join(overrides))
    merged.update(obase)
    merged.update(osections.get(name, {}))
    return build_system_config(merged)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = assemble_config(args.experiment, args.config, args.override)
    except (ConfigError, OSError) as exc:
        print(f"isl-slp: config error: {exc}", file=sys.stderr)
        return 1
    out_dir = args.out if args.out else os.path.join("runs", args.experiment)
    try:
        run_experiment(args.experiment, cfg, out_dir, seed=args.seed)
    except InfeasibleError as exc:
        print(f"isl-slp: infeasible: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"isl-slp: config error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
