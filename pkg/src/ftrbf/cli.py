"""Command-line experiment runner: ftrbf --config <file> --out <dir>."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .experiment import read_config, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ftrbf",
        description="Run a fault-tolerant RBF center-selection experiment "
                    "described by a flat key-value config file.",
    )
    parser.add_argument("--config", required=True, help="experiment config file")
    parser.add_argument("--out", default=None,
                        help="output directory (overrides the config's out key)")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker processes for parallel trials")
    parser.add_argument("--verbose", action="store_true",
                        help="print one line per finished cell")
    args = parser.parse_args(argv)

    config = read_config(args.config)
    if args.out is not None:
        config = dataclasses.replace(config, out_dir=args.out)

    results = run_experiment(config, jobs=args.jobs, verbose=args.verbose)
    failed = [r for r in results if r.status != "ok"]
    print(f"{len(results)} cells finished, {len(failed)} failed; "
          f"results in {config.out_dir}")
    return 1 if failed and len(failed) == len(results) else 0


if __name__ == "__main__":
    sys.exit(main())
