#!/usr/bin/env python3
"""Frame-level baseline comparison: MLP + majority voting, 1-D CNN + soft voting.

Trains both baselines frame-by-frame on a mixed78 feature CSV (or on
synthetic data when no CSV is given) and prints frame-level and
sequence-level classification reports, mirroring how the windowed
sequence models are compared against per-frame classifiers.

Usage:
  python scripts/run_baselines.py                      # synthetic data
  python scripts/run_baselines.py --features feat.csv  # your own extraction
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from fitseq.baselines import evaluate_frames, evaluate_with_voting, frame_model_train
from fitseq.features import FeatureConfig, featurize_frames, read_feature_csv
from fitseq.metrics import CNN_VOTER, DNN_VOTER, render_report_text
from fitseq.synthetic import make_dataset
from fitseq.train import HyperParams


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--features", help="mixed78 feature CSV; synthetic if omitted")
    parser.add_argument("--windows-per-class", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=40)
    args = parser.parse_args()

    if args.features:
        frames = read_feature_csv(args.features, "mixed78")
    else:
        print(f"no --features given; generating {args.windows_per_class} "
              "windows/class of synthetic data")
        raw = make_dataset(windows_per_class=args.windows_per_class, seed=args.seed)
        frames = featurize_frames(raw, FeatureConfig("mixed78"))
    print(f"{len(frames)} labeled frames")

    hp = HyperParams(units=0, dropout_rate=0.0, learning_rate=0.001,
                     batch_size=64, epochs=args.epochs)
    for arch, voter, vote_name in (
        ("dnn", DNN_VOTER, "majority voting, window 10 stride 1"),
        ("cnn", CNN_VOTER, "soft voting, window 30 non-overlapping"),
    ):
        model, record = frame_model_train(frames, arch, hp, seed=args.seed)
        print(f"\n=== {arch} ({len(record.epochs)} epochs, {record.stop_reason}) ===")
        frame_report, _ = evaluate_frames(model, frames)
        print("-- frame level --")
        print(render_report_text(frame_report))
        seq_report, _ = evaluate_with_voting(model, frames, voter)
        print(f"-- sequence level ({vote_name}) --")
        print(render_report_text(seq_report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
