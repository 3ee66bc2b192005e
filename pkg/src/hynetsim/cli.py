"""Command-line entry point: run a scenario over one seed or a seed range."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .scenario import ScenarioError, parse_scenario
from .runner import run_batch, run_single


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _parse_times(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hynetsim",
                                     description="hybrid ground/aerial vehicular network simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a scenario")
    run.add_argument("--scenario", required=True, help="scenario file path")
    group = run.add_mutually_exclusive_group(required=True)
    group.add_argument("--seed", type=int, help="single seed")
    group.add_argument("--seeds", help="inclusive seed range a..b")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--duration", type=float, default=None, help="override duration in seconds")
    run.add_argument("--snapshot-at", default=None, help="comma-separated snapshot times in seconds")
    run.add_argument("--strict", action="store_true",
                     help="escalate unused-declaration warnings to errors")
    run.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 2
    try:
        scenario = parse_scenario(text, strict=args.strict)
    except ScenarioError as exc:
        for line, msg in exc.issues:
            print(f"error: {args.scenario}:{line}: {msg}", file=sys.stderr)
        return 2

    snapshots = _parse_times(args.snapshot_at) if args.snapshot_at else None
    try:
        if args.seed is not None:
            result = run_single(scenario, args.seed, args.out,
                                duration_s=args.duration, snapshot_times_s=snapshots)
            report = result["report"]
            print(f"seed {args.seed}: {report.events_processed} events, "
                  f"{report.wall_seconds:.2f} s wall -> {args.out}")
            return 0
        seeds = _parse_seeds(args.seeds)
        batch = run_batch(scenario, seeds, args.out, duration_s=args.duration,
                          workers=args.workers)
        for seed, err in sorted(batch["failures"].items()):
            print(f"seed {seed} failed: {err}", file=sys.stderr)
        print(f"{len(batch['seeds'])}/{len(seeds)} seeds completed -> {args.out}")
        return 1 if batch["failures"] else 0
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
