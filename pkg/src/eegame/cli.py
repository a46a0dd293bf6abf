"""Command-line entry point: ``eegame <verb> [flags]``.

Exit codes: 0 success, 1 a tolerance or summary check failed, 2 bad
configuration or arguments.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import EXPERIMENTS, to_csv

VERBS = list(EXPERIMENTS) + ["oracle-suite"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eegame", description="Energy-efficient power control experiments.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", metavar="PATH", help="TOML scenario file (defaults reproduce the reference setting)")
    p.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    p.add_argument("--samples", type=int, help="override the Monte Carlo sample count")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="worker processes (output does not depend on this)")
    p.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="oracle-suite only: multiply every tolerance (0 forces failures)")
    p.add_argument("--full", action="store_true", help="oracle-suite only: more random cases")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors, 0 for --help
        return int(exc.code or 0)

    try:
        cfg = load_config(args.config)
        changes = {}
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
            changes["seed"] = args.seed
        if args.samples is not None:
            changes["samples"] = args.samples
            changes["game_samples"] = args.samples
        if args.out is not None:
            changes["out"] = args.out
        if changes:
            cfg = cfg.replace(**changes)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1", "workers")
    except ConfigError as exc:
        print(f"eegame: config error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "oracle-suite":
        from .oracles import format_report, run_oracle_suite

        results = run_oracle_suite(seed=cfg.seed, tol_scale=args.tolerance_scale, quick=not args.full)
        print(format_report(results))
        return 0 if all(r.passed for r in results) else 1

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            table = EXPERIMENTS[args.verb](cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"eegame: config error: {exc}", file=sys.stderr)
        return 2

    text = to_csv(table, cfg)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    for line in table.summary:
        print(line, file=sys.stderr)
    return 1 if any("FAIL" in line for line in table.summary) else 0


if __name__ == "__main__":
    sys.exit(main())
