"""Command-line entry point: ``pmudetect <subcommand> --config run.json``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from pmudetect import pipeline
from pmudetect.config import load_config
from pmudetect.errors import PipelineError

logger = logging.getLogger("pmudetect")

STAGES = {
    "ingest": pipeline.ingest,
    "preprocess": pipeline.preprocess,
    "analyze": pipeline.analyze,
    "evaluate": pipeline.evaluate,
    "tune": pipeline.tune,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmudetect",
        description="Classify PMU measurement rows into Attack / Natural / NoEvent.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "load and merge input CSVs, write the working sample",
        "preprocess": "drop non-finite rows and isolation-forest outliers",
        "analyze": "feature correlation / mutual-information rankings and histograms",
        "evaluate": "cross-validate the configured models",
        "tune": "grid-search random-forest hyperparameters",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="run configuration (JSON)")
        p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--output-dir", help="override the output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap; results do not depend on it")
    p = sub.add_parser("predict", help="label a CSV with a saved model artifact")
    p.add_argument("--model", required=True, help="model.json or best_model.json")
    p.add_argument("--input", required=True, help="CSV with the model's feature columns")
    p.add_argument("--output", required=True, help="where to write predictions.csv")
    return parser


def _print_summary(command: str, summary: dict) -> None:
    if command == "ingest":
        print(f"sampled {summary['sample_rows']} of {summary['total_rows']} rows")
        for label, count in summary["class_counts"].items():
            print(f"  {label}: {count}")
    elif command == "preprocess":
        for step in summary["steps"]:
            print(f"{step['step']}: removed {step['removed']}, {step['rows_out']} rows remain")
    elif command == "analyze":
        print("top correlated:", ", ".join(summary["top_correlated"][:5]), "...")
    elif command == "evaluate":
        for name, f1 in summary["ranking"]:
            print(f"{name:<32} f1_macro={f1:.4f}")
    elif command == "tune":
        print(f"baseline accuracy {summary['baseline_accuracy']:.4f} -> "
              f"tuned {summary['tuned_accuracy']:.4f}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "predict":
            n = pipeline.predict(args.model, args.input, args.output)
            print(f"wrote {n} predictions to {args.output}")
            return 0
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        config = load_config(args.config, seed=args.seed, output_dir=args.output_dir)
        run = pipeline.Run(config, threads=args.threads)
        summary = STAGES[args.command](run)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_summary(args.command, summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
