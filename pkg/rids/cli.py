"""
Command-line entry point.

    rids generate --config scenarios/deauth.conf --out data/deauth
    rids train --dataset data/deauth data/baseline --model tree --out tree.rids
    rids eval --model tree.rids --dataset data/composite
    rids replay --config scenarios/composite.conf --model tree.rids --assert
    rids inspect data/deauth

Verbosity comes from the RIDS_LOG environment variable (DEBUG, INFO, WARNING,
ERROR; default WARNING).
"""

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from . import __version__
from ._types import AttackLabel
from .classifier import MODEL_KINDS, fit_model, load_model, save_model, serialize_model
from .config import load_config
from .controller import VOTE_THRESHOLD
from .errors import RidsError
from .evaluation import evaluate, format_report, stratified_split, write_report_csv
from .frames import frame_to_csv_row, label_counts, read_csv, read_stream
from .pipeline import (
    MANIFEST_FILE, STREAM_FILE, acceptance_corpus, dataset_vectors,
    format_run_report, load_dataset, replay, write_dataset, write_run_reports_csv,
)

logger = logging.getLogger(__name__)

LOG_ENV = "RIDS_LOG"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}

EXIT_OK = 0
EXIT_ASSERT_FAILED = 1
EXIT_ERROR = 2


def configure_logging():
    level = LOG_LEVELS.get(os.environ.get(LOG_ENV, "WARNING").strip().upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger("rids").setLevel(level)


def _training_vectors(datasets: Optional[List[str]], seed: int, quiet: bool):
    if datasets:
        return dataset_vectors(datasets)
    if not quiet:
        print("No --dataset given: generating the acceptance corpus...")
    return acceptance_corpus(seed, progress=not quiet)


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    manifest = write_dataset(cfg, args.out)
    if not args.quiet:
        print(f"Wrote {manifest['n_frames']} frames to {args.out}")
        for label, count in manifest["label_counts"].items():
            print(f"  {label:<12} {count}")
    return EXIT_OK


def cmd_train(args) -> int:
    seed = args.seed if args.seed is not None else 0
    vectors = _training_vectors(args.dataset, seed, args.quiet)
    train, test = stratified_split(vectors, seed=seed)
    if not args.quiet:
        print(f"Training {args.model} on {len(train)} vectors, testing on {len(test)}...")
    start = time.perf_counter()
    model = fit_model(args.model, train, seed=seed, progress=not args.quiet)
    elapsed = time.perf_counter() - start
    report = evaluate(model, test)
    size = save_model(args.out, model)

    text = format_report({args.model: report})
    Path(str(args.out) + ".report.txt").write_text(text, encoding="utf-8")
    write_report_csv(str(args.out) + ".report.csv", {args.model: report})
    if not args.quiet:
        print(text, end="")
        print(f"Model: {args.out} ({size} bytes), trained in {elapsed:.1f} s")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    seed = args.seed if args.seed is not None else 0
    if args.dataset:
        test = dataset_vectors(args.dataset)
    else:
        _, test = stratified_split(_training_vectors(None, seed, args.quiet), seed=seed)
    report = evaluate(model, test)
    name = Path(args.model).stem
    if args.report:
        write_report_csv(args.report, {name: report})
    print(format_report({name: report}), end="")
    print(f"Model size: {len(serialize_model(model))} bytes")
    return EXIT_OK


def cmd_replay(args) -> int:
    model = load_model(args.model)
    reports = []
    for path in args.config:
        cfg = load_config(path)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        report = replay(cfg, model, threshold=args.threshold, alarm_log=args.alarm_log)
        reports.append(report)
        if not args.quiet:
            print(format_run_report(report))
    if args.report:
        write_run_reports_csv(args.report, reports)
    failed = [r for r in reports if not r.passed()]
    if args.assert_ and failed:
        for r in failed:
            print(f"FAILED {r.scenario}: {'; '.join(r.failures())}", file=sys.stderr)
        return EXIT_ASSERT_FAILED
    return EXIT_OK


def cmd_inspect(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        _, frames = load_dataset(path)
        manifest = path / MANIFEST_FILE
        if manifest.exists():
            print(manifest.read_text(encoding="utf-8"), end="")
    elif path.suffix == ".csv":
        frames = read_csv(path)
    else:
        frames = read_stream(path)
    print(f"{len(frames)} frames", end="")
    if frames:
        print(f", {frames[0].timestamp_us / 1e6:.3f}s to {frames[-1].timestamp_us / 1e6:.3f}s")
    else:
        print()
    for label, count in label_counts(frames).items():
        print(f"  {label:<12} {count}")
    shown = frames
    if args.label:
        wanted = AttackLabel[args.label]
        shown = [f for f in frames if f.label == wanted]
    for f in shown[:args.limit]:
        print(frame_to_csv_row(f))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rids", description="WLAN intrusion-detection lab")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generate a labeled dataset from a scenario file")
    p.add_argument("--config", required=True, help="Scenario file")
    p.add_argument("--out", required=True, help="Output directory")
    p.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    p.add_argument("--quiet", action="store_true", help="Suppress progress messages")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="Train a classifier and report held-out metrics")
    p.add_argument("--dataset", nargs="*", default=None,
                   help="Dataset directories (default: generate the acceptance corpus)")
    p.add_argument("--model", choices=sorted(MODEL_KINDS), default="tree", help="Classifier kind")
    p.add_argument("--out", required=True, help="Model file to write")
    p.add_argument("--seed", type=int, default=None, help="Split and training seed (default 0)")
    p.add_argument("--quiet", action="store_true", help="Suppress progress messages")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Evaluate a model file")
    p.add_argument("--model", required=True, help="Model file")
    p.add_argument("--dataset", nargs="*", default=None,
                   help="Dataset directories (default: test split of the acceptance corpus)")
    p.add_argument("--seed", type=int, default=None, help="Corpus seed (default 0)")
    p.add_argument("--report", default=None, help="Write the report as CSV")
    p.add_argument("--quiet", action="store_true", help="Suppress progress messages")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("replay", help="Replay scenarios through FDS and the controller")
    p.add_argument("--config", required=True, nargs="+", help="Scenario file(s)")
    p.add_argument("--model", required=True, help="Model file")
    p.add_argument("--seed", type=int, default=None, help="Override the scenario seed")
    p.add_argument("--threshold", type=float, default=VOTE_THRESHOLD, help="Alarm vote threshold")
    p.add_argument("--alarm-log", default=None, help="Append alarms to this file")
    p.add_argument("--report", default=None, help="Write run reports as CSV")
    p.add_argument("--assert", dest="assert_", action="store_true",
                   help="Exit 1 unless every scenario raises exactly its injected classes in time")
    p.add_argument("--quiet", action="store_true", help="Only print failures")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("inspect", help="Pretty-print a dataset directory, stream or CSV")
    p.add_argument("path", help=f"Dataset directory, {STREAM_FILE}-style stream or CSV file")
    p.add_argument("--limit", type=int, default=20, help="Frames to print")
    p.add_argument("--label", choices=[l.name for l in AttackLabel], default=None,
                   help="Only print frames with this label")
    p.set_defaults(func=cmd_inspect)
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Parse ``argv`` and run the command; returns the exit code."""
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RidsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
