"""Command line entry point: ``vcselrng <command> --config <path> [--out <dir>]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config, preset_path
from .pipeline import COMMANDS, EXIT_ERROR

OUT_ENV = "VCSELRNG_OUT"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vcselrng", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="INI run configuration")
    src.add_argument("--preset", help="bundled configuration, e.g. desk_scale")
    ap.add_argument("--out", help=f"output directory (overrides the config and ${OUT_ENV})")
    ap.add_argument("--bits", nargs="+", metavar="FILE",
                    help="nist only: raw bit files to test instead of extracted streams")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.bits and args.command != "nist":
        print("error: --bits applies to the nist command only", file=sys.stderr)
        return EXIT_ERROR
    try:
        cfg = load_config(args.config if args.config else preset_path(args.preset))
    except ConfigError as exc:
        out = Path(args.out or os.environ.get(OUT_ENV) or ".")
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "error.json", "w") as fh:
            json.dump({"command": args.command, "error": "ConfigError", "message": str(exc),
                       "field": exc.key, "line": exc.line}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        cfg = cfg.with_output(out)
    kw = {"bits": args.bits} if args.command == "nist" else {}
    code = COMMANDS[args.command](cfg, **kw)
    err = Path(cfg.output.directory) / "error.json"
    if code == EXIT_ERROR and err.exists():
        print(f"error: {json.loads(err.read_text())['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
