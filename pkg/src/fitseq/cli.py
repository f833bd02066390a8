"""Command-line surface.

Subcommands: featurize, train, search, evaluate, count, stream.
Exit codes: 0 success, 2 usage, 3 input problem, 4 model problem,
5 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

from . import errors, features, landmarks, metrics, repcount, streaming
from .model import load_model, save_model
from .train import (
    HyperParams,
    REFERENCE_HYPERPARAMS,
    SplitSpec,
    random_search,
    split,
    train,
    write_trial_ledger,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_MODEL = 4
EXIT_INTERNAL = 5

_INPUT_ERRORS = (
    errors.MalformedHeader,
    errors.NonNumericCell,
    errors.SinkFailure,
    errors.TooFewSamples,
    errors.EmptyTrainingSet,
    errors.LayoutMismatch,
    errors.UnknownExercise,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)
_MODEL_ERRORS = (
    errors.CorruptModelFile,
    errors.UnsupportedVersion,
    errors.NoModelLoaded,
    errors.FeatureConfigMismatch,
)


def _load_kv(path) -> dict[str, str]:
    """Flat ``key = value`` config lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def _hyperparams(config: dict[str, str], arch: str) -> HyperParams:
    base = REFERENCE_HYPERPARAMS[arch]
    return HyperParams(
        units=int(config.get("units", base.units)),
        dropout_rate=float(config.get("dropout_rate", base.dropout_rate)),
        learning_rate=float(config.get("learning_rate", base.learning_rate)),
        batch_size=int(config.get("batch_size", base.batch_size)),
        epochs=int(config.get("epochs", base.epochs)),
    )


def _split_spec(config: dict[str, str], seed: int) -> SplitSpec:
    fractions = (
        float(config.get("train_fraction", 0.70)),
        float(config.get("val_fraction", 0.15)),
        float(config.get("test_fraction", 0.15)),
    )
    return SplitSpec(fractions, config.get("granularity", "window"), seed)


def _windows_from_feature_csv(path, layout: str, window_len: int):
    frames = features.read_feature_csv(path, layout)
    return features.window(frames, window_len, window_len)


# --- subcommands -------------------------------------------------------------

def _cmd_featurize(args) -> int:
    config = features.FeatureConfig(args.layout)
    if args.layout == "raw99":
        frames = features.read_raw33_csv(args.input)
    else:
        frames = features.featurize_frames(landmarks.parse_landmark_csv(args.input), config)
    count = features.write_feature_csv(frames, args.output, args.layout)
    print(f"wrote {count} feature rows ({args.layout}) to {args.output}")
    return EXIT_OK


def _cmd_train(args) -> int:
    config = _load_kv(args.config) if args.config else {}
    hp = _hyperparams(config, args.arch)
    window_len = int(config.get("window_len", features.DEFAULT_WINDOW_LEN))
    samples = _windows_from_feature_csv(args.data, args.layout, window_len)
    spec = _split_spec(config, args.seed)
    train_part, val_part, test_part = split(samples, spec)
    model, record = train(
        train_part, val_part, hp, args.arch, seed=args.seed,
        feature_config=features.FeatureConfig(args.layout, window_len),
        second_layer_bidirectional=config.get("second_layer_bidirectional", "true").lower()
        != "false",
    )
    save_model(model, args.output)
    best = record.epochs[record.best_epoch - 1]
    print(
        f"trained {args.arch} for {len(record.epochs)} epochs "
        f"({record.stop_reason}); best epoch {record.best_epoch}: "
        f"val_acc={best.val_acc:.4f} val_loss={best.val_loss:.4f}"
    )
    if test_part:
        report, _ = metrics.evaluate(model, test_part)
        print(f"test accuracy: {report.accuracy:.4f} on {report.total_support} windows")
    print(f"saved model to {args.output}")
    return EXIT_OK


def _cmd_search(args) -> int:
    samples = _windows_from_feature_csv(args.data, args.layout, features.DEFAULT_WINDOW_LEN)
    spec = _split_spec({}, args.seed)
    train_part, val_part, _ = split(samples, spec)
    best_hp, trials = random_search(
        train_part, val_part, args.arch, n_iter=args.iters, seed=args.seed,
        feature_config=features.FeatureConfig(args.layout),
    )
    write_trial_ledger(trials, args.output)
    print(f"wrote {len(trials)} trials to {args.output}")
    print(f"best: {best_hp}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    model = load_model(args.model)
    fc = model.feature_config
    samples = _windows_from_feature_csv(args.data, fc.layout, fc.window_len)
    report, cm = metrics.evaluate(model, samples)
    outdir = Path(args.report)
    outdir.mkdir(parents=True, exist_ok=True)
    metrics.write_report_csv(report, outdir / "report.csv")
    metrics.write_confusion_csv(cm, outdir / "confusion.csv")
    text = metrics.render_report_text(report)
    (outdir / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    print(f"reports written to {outdir}")
    return EXIT_OK


def _cmd_count(args) -> int:
    overrides = repcount.load_threshold_overrides(args.thresholds) if args.thresholds else None
    spec = repcount.default_spec(args.exercise, overrides)
    frames = landmarks.parse_landmark_csv(args.input)
    total, events = repcount.count_session(frames, args.exercise, spec)
    if args.output:
        repcount.write_event_log(events, args.exercise, args.output)
        print(f"event log written to {args.output}")
    print(f"{args.exercise}: {total} repetitions in {len(frames)} frames")
    return EXIT_OK


def _iter_stream_rows(path: str):
    if path == "-":
        for idx, line in enumerate(sys.stdin, start=1):
            if not line.strip():
                continue
            yield idx, next(csv.reader([line]))
        return
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != landmarks.RAW_CSV_HEADER:
            raise errors.MalformedHeader(f"{path} is not a raw landmark CSV")
        for idx, row in enumerate(reader, start=1):
            yield idx, row


def _cmd_stream(args) -> int:
    model = load_model(args.model)
    session = streaming.StreamSession(model=model, sliding=args.sliding)
    delay = 0.0 if args.no_throttle else 1.0 / args.fps
    for idx, row in _iter_stream_rows(args.input):
        frame = landmarks.frame_from_row(row, idx)
        for event in streaming.stream_step(session, frame):
            print(json.dumps(event.to_record()))
        if delay:
            time.sleep(delay)
    counts = {ex: c.count for ex, c in session.counters.items() if c.count}
    print(
        f"processed {session.frames_seen} frames; "
        f"last prediction: {session.current_label or 'none'}; counts: {counts}",
        file=sys.stderr,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fitseq",
        description="Exercise recognition and repetition counting on pose-landmark CSVs.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="raw landmark CSV -> per-frame feature CSV")
    p.add_argument("input")
    p.add_argument("--layout", choices=sorted(features.LAYOUT_DIMS), default="mixed78")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train a sequence classifier on a feature CSV")
    p.add_argument("data")
    p.add_argument("--arch", choices=("lstm", "bilstm"), default="bilstm")
    p.add_argument("--layout", choices=sorted(features.LAYOUT_DIMS), default="mixed78")
    p.add_argument("--config", help="key=value file overriding hyperparameters/split")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("search", help="random hyperparameter search")
    p.add_argument("data")
    p.add_argument("--arch", choices=("lstm", "bilstm"), default="bilstm")
    p.add_argument("--layout", choices=sorted(features.LAYOUT_DIMS), default="mixed78")
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="search_ledger.csv")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("evaluate", help="classification report for a model on a feature CSV")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--report", required=True, help="output directory")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("count", help="count repetitions in a raw landmark CSV")
    p.add_argument("input")
    p.add_argument("--exercise", required=True, choices=sorted(repcount.DEFAULT_SPECS))
    p.add_argument("--thresholds", help="per-exercise threshold override file")
    p.add_argument("-o", "--output", help="event log CSV")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("stream", help="simulated real-time classify + count loop")
    p.add_argument("input", help="raw landmark CSV, or '-' for data rows on stdin")
    p.add_argument("--model", required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--no-throttle", action="store_true")
    p.add_argument("--sliding", action="store_true",
                   help="classify every frame once the buffer is full")
    p.set_defaults(func=_cmd_stream)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _MODEL_ERRORS as exc:
        print(f"error: model: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except _INPUT_ERRORS as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except errors.DivergedLoss as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        logger.exception("internal error")
        print(f"error: internal: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
