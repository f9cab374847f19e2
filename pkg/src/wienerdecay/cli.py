"""Command-line entry point: ``wienerdecay {run,compare,validate-config,list-bundled-examples}``.

Exit codes: 0 success, 2 configuration error, 3 a stage failed (the partial
bundle and its manifest are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import PreconditionError, RefusedError
from .experiment import (ConfigError, bundled_examples, compare, dump_json, load_config, run,
                         write_compare)

EXIT_OK, EXIT_CONFIG, EXIT_STAGE = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wienerdecay", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run an experiment and write its bundle")
    r.add_argument("--config", required=True, help="config file or bundled example name")
    r.add_argument("--out", help="output directory (default: the config's 'output' or ./out/<name>)")
    r.add_argument("--rungs", type=int, help="override the number of ladder rungs")
    r.add_argument("--seed", type=int, default=0, help="seed for randomized property checks")
    c = sub.add_parser("compare", help="rung-wise ratios between two bundles")
    c.add_argument("bundles", nargs=2, metavar="BUNDLE")
    c.add_argument("--out", help="write the table to this CSV file instead of stdout")
    v = sub.add_parser("validate-config", help="check a config and print its normalized form")
    v.add_argument("--config", required=True)
    v.add_argument("--rungs", type=int)
    sub.add_parser("list-bundled-examples", help="names of the configs shipped with the package")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "list-bundled-examples":
        for name in bundled_examples():
            print(name)
        return EXIT_OK
    if args.verb == "validate-config":
        try:
            cfg = load_config(args.config, rungs=args.rungs)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        sys.stdout.write(dump_json(cfg.normalized()))
        return EXIT_OK
    if args.verb == "run":
        try:
            cfg = load_config(args.config, rungs=args.rungs)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        out = Path(args.out or cfg.output or Path("out") / cfg.name)
        res = run(cfg, out, seed=args.seed)
        for name, st in res.stages.items():
            line = f"{name:14s} {st['status']}"
            if st["status"] == "failed":
                line += f"  ({st['error']})"
            print(line)
        print(f"bundle written to {out}")
        return EXIT_OK if not res.failed else EXIT_STAGE
    if args.verb == "compare":
        try:
            header, rows = compare(*args.bundles)
        except (RefusedError, PreconditionError) as exc:
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        text = write_compare(header, rows)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
