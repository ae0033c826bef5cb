"""Command-line entry: one subcommand per experiment kind.

Exit codes: 0 success, 2 invalid configuration, 3 run failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import EXPERIMENT_KINDS, ConfigError, RunError, run, validate_config

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinning",
        description="Build and verify pinning barriers over random media, "
                    "simulate interface dynamics, and sweep parameters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", type=Path, required=True, help="TOML experiment config")
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
        p.add_argument("--seeds", type=int, default=None,
                       help="use this many seeds from the config's base (overrides count)")
        p.add_argument("--jobs", type=int, default=None, help="parallel workers for sweeps")
        p.add_argument("--svg", action="store_true", help="emit figures")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        print(f"config error: file not found: {args.config}", file=sys.stderr)
        return 2
    except tomllib.TOMLDecodeError as exc:
        print(f"config error: invalid TOML: {exc}", file=sys.stderr)
        return 2

    raw.setdefault("kind", args.command)
    if raw["kind"] != args.command:
        print(f"config error: kind: config says {raw['kind']!r} but subcommand is "
              f"{args.command!r}", file=sys.stderr)
        return 2
    if args.seeds is not None:
        seeds = raw.get("seeds", {})
        base = seeds.get("base", 0) if isinstance(seeds, dict) else (seeds[0] if seeds else 0)
        raw["seeds"] = {"base": base, "count": args.seeds}
    if args.out is not None:
        raw["out"] = str(args.out)
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    if args.svg:
        raw["emit_svg"] = True

    try:
        config = validate_config(raw, base_dir=args.config.parent)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        manifest = run(config)
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # unexpected
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    print(json.dumps({"out": str(config.out_dir), "files": len(manifest["files"])}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
