"""Command-line entry point."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import PedAccessError
from .pipeline import STAGES, ValidationInputs, run_pipeline


def _radii(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid radii {text!r}") from exc
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("radii must be non-negative numbers")
    return vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, help="project TOML file")
    common.add_argument("--region", action="append", help="restrict to a region (repeatable)")
    common.add_argument("--out", type=Path, help="output directory (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for network searches")
    common.add_argument("--seed", type=int, default=0, help="seed for the validation sample")

    parser = argparse.ArgumentParser(prog="pedaccess", description="Pedestrian accessibility indicators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "run-all"):
        p = sub.add_parser(name, parents=[common])
        if name in ("validate", "run-all"):
            p.add_argument("--official-edges", type=Path, help="official street network (GeoJSON lines)")
            p.add_argument("--official-dests", type=Path, help="official destinations (GeoJSON points)")
            p.add_argument("--radii", type=_radii, default=(10.0, 50.0), help="comma-separated radii in metres")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    if not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    stages = STAGES if args.command == "run-all" else (args.command,)
    vin = ValidationInputs(seed=args.seed)
    if hasattr(args, "radii"):
        vin = ValidationInputs(args.official_edges, args.official_dests, args.radii, args.seed)
    try:
        cfg = load_config(args.config)
        manifest = run_pipeline(cfg, stages, args.region, args.out, args.threads, vin)
    except PedAccessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(manifest.outputs)} files", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
