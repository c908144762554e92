"""Command-line entry point: ``maxdissent --config cfg.json --out results/``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiment import ConfigError, load_config, run_experiment

log = logging.getLogger("maxdissent")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="maxdissent",
        description="Run distributed subgradient experiments with state-dependent gossip.")
    ap.add_argument("--config", required=True,
                    help="path to a JSON config (or the JSON text itself)")
    ap.add_argument("--out", default=None, help="output directory (overrides output_path)")
    ap.add_argument("--trace", action="store_true", help="write per-run mixing-event JSONL")
    ap.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    ap.add_argument("--jobs", type=int, default=1, help="parallel (scheme, run) workers")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        log.error("--jobs must be >= 1")
        return 2
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        log.error("config: %s", exc)
        return 2
    if args.dry_run:
        print(f"config ok: {len(cfg.schemes)} scheme(s) x {cfg.runs} run(s), {cfg.steps} steps")
        return 0
    status = run_experiment(cfg, args.out, trace=args.trace or None, jobs=args.jobs)
    if status:
        log.error("one or more runs diverged")
    return status


if __name__ == "__main__":
    sys.exit(main())
