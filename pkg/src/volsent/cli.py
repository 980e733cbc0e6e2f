"""Command-line entry point: ``volsent {ingest,train-sentiment,forecast,evaluate,plot,all}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import VolsentError

log = logging.getLogger("volsent")

COMMANDS = {
    "ingest": pipeline.ingest,
    "train-sentiment": pipeline.train_sentiment,
    "forecast": pipeline.forecast,
    "evaluate": pipeline.evaluate,
    "plot": pipeline.plot,
    "all": pipeline.run_all,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volsent", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--out", type=Path, default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, seed=args.seed, out=args.out)
        cfg.paths.out.mkdir(parents=True, exist_ok=True)
        result = COMMANDS[args.command](cfg)
    except VolsentError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ArithmeticError as exc:
        print(f"error: NumericError: {exc}", file=sys.stderr)
        return 4
    if args.command == "forecast" and result:
        for stem, msg in result.items():
            print(f"warning: ModelFailed: {stem}: {msg}", file=sys.stderr)
        if len(result) == len(pipeline.enabled_models(cfg)):
            return 4
    if args.command in ("evaluate", "all"):
        print((cfg.paths.out / "report.txt").read_text(encoding="utf-8"), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
