"""Command-line driver: run staged training from a config file, or generate
predictions from a saved checkpoint."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .data import TrainerDataError
from .harness import TrainerConfig, TrainerError, predict, run_stages
from .vocab import TokenRegistrationError


def _cmd_run(args: argparse.Namespace) -> int:
    config = TrainerConfig.from_json(json.loads(Path(args.config).read_text(encoding="utf-8")))
    checkpoints = run_stages(config, args.data, args.out)
    for path in checkpoints:
        print(path)
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    count = predict(args.checkpoint, args.eval, args.out, beam_width=args.beam_width)
    print(f"wrote {count} predictions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seltrain", description="Staged fine-tuning driver for compiled stage files."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train all configured stages sequentially")
    p.add_argument("--config", required=True, help="trainer config JSON")
    p.add_argument("--data", required=True, help="directory with <stage>.jsonl files")
    p.add_argument("--out", required=True, help="checkpoint output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("predict", help="generate raw outputs from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--eval", required=True, help="compiled JSONL file to decode")
    p.add_argument("--out", required=True, help="prediction JSONL output path")
    p.add_argument("--beam-width", type=int, default=None)
    p.set_defaults(func=_cmd_predict)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrainerError, TrainerDataError, TokenRegistrationError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
