"""Confusion matrices, classification reports, and frame-vote aggregation."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import FeatureConfigMismatch, ShapeMismatch, WindowTooShort
from .features import Source, WindowSample, _as_text_writer, _finish_text, apply_scaler
from .model import SequenceModel


@dataclass(eq=False)
class ConfusionMatrix:
    counts: np.ndarray          # (K, K) ints; rows true, columns predicted
    labels: tuple[str, ...]

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.labels)
        if self.counts.shape != (k, k):
            raise ShapeMismatch(f"counts {self.counts.shape} vs {k} labels")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(eq=False)
class ClassificationReport:
    per_class: dict[str, ClassMetrics]
    accuracy: float
    macro_avg: tuple[float, float, float]      # (precision, recall, f1)
    weighted_avg: tuple[float, float, float]
    total_support: int


def confusion_matrix(
    true_idx: Sequence[int], pred_idx: Sequence[int], labels: tuple[str, ...]
) -> ConfusionMatrix:
    k = len(labels)
    counts = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(true_idx, pred_idx, strict=True):
        counts[t, p] += 1
    return ConfusionMatrix(counts, labels)


def classification_report(cm: ConfusionMatrix) -> ClassificationReport:
    """Per-class precision/recall/F1 plus macro and support-weighted averages.

    F1 is the harmonic mean of precision and recall, 0 when both are 0;
    classes with no predictions (or no support) get 0 for the undefined
    ratio, matching the usual report conventions.
    """
    counts = cm.counts
    per_class: dict[str, ClassMetrics] = {}
    precisions, recalls, f1s, supports = [], [], [], []
    for i, label in enumerate(cm.labels):
        tp = float(counts[i, i])
        pred = float(counts[:, i].sum())
        support = int(counts[i, :].sum())
        precision = tp / pred if pred > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[label] = ClassMetrics(precision, recall, f1, support)
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        supports.append(support)

    total = sum(supports)
    macro = (
        float(np.mean(precisions)),
        float(np.mean(recalls)),
        float(np.mean(f1s)),
    )
    if total:
        w = np.asarray(supports, dtype=np.float64) / total
        weighted = (
            float(w @ np.asarray(precisions)),
            float(w @ np.asarray(recalls)),
            float(w @ np.asarray(f1s)),
        )
    else:
        weighted = (0.0, 0.0, 0.0)
    return ClassificationReport(per_class, cm.accuracy, macro, weighted, total)


def evaluate(
    model: SequenceModel, samples: Sequence[WindowSample]
) -> tuple[ClassificationReport, ConfusionMatrix]:
    """Argmax window predictions against labels.

    Samples must be featurized with the model's layout; the model's own
    scaler is applied here, so pass unscaled windows.
    """
    if not samples:
        raise ValueError("no samples to evaluate")
    dim = samples[0].matrix.shape[1]
    if dim != model.feature_config.feature_dim:
        raise FeatureConfigMismatch(
            f"samples have {dim} features, model expects "
            f"{model.feature_config.feature_dim} ({model.feature_config.layout})"
        )
    x = np.stack([apply_scaler(model.scaler, s).matrix for s in samples])
    pred = model.predict(x)
    true = [model.labels.index(s.label) for s in samples]
    cm = confusion_matrix(true, pred, model.labels.classes)
    return classification_report(cm), cm


# --- frame voting -----------------------------------------------------------------

@dataclass(frozen=True)
class FrameVoter:
    mode: str                  # "majority" | "soft"
    window_len: int
    stride: int

    def __post_init__(self):
        if self.mode not in ("majority", "soft"):
            raise ValueError(f"unknown voting mode {self.mode!r}")
        if self.window_len < 1 or self.stride < 1:
            raise ValueError("window_len and stride must be positive")


# Voting setups used by the two reimplemented frame-level baselines.
DNN_VOTER = FrameVoter("majority", window_len=10, stride=1)
CNN_VOTER = FrameVoter("soft", window_len=30, stride=30)


def vote(per_frame_probs: np.ndarray, voter: FrameVoter) -> list[int]:
    """Window-level labels from per-frame probabilities.

    Majority mode takes the most common per-frame argmax (ties to the
    lowest class index); soft mode takes the argmax of the mean probability
    vector.
    """
    probs = np.asarray(per_frame_probs, dtype=np.float64)
    if probs.ndim != 2:
        raise ShapeMismatch(f"expected (T, K) probabilities, got {probs.shape}")
    t = probs.shape[0]
    if t < voter.window_len:
        raise WindowTooShort(f"{t} frames < window of {voter.window_len}")
    out: list[int] = []
    for start in range(0, t - voter.window_len + 1, voter.stride):
        block = probs[start : start + voter.window_len]
        if voter.mode == "soft":
            out.append(int(block.mean(axis=0).argmax()))
        else:
            votes = np.bincount(block.argmax(axis=1), minlength=probs.shape[1])
            out.append(int(votes.argmax()))
    return out


# --- report rendering ----------------------------------------------------------------

def render_report_text(report: ClassificationReport) -> str:
    """Human-readable table: per-class rows, then accuracy and averages."""
    width = max(len("weighted avg"), *(len(l) for l in report.per_class))
    lines = [f"{'':<{width}}  precision  recall  f1-score  support"]
    lines.append("")
    for label, m in report.per_class.items():
        lines.append(
            f"{label:<{width}}  {m.precision:9.4f}  {m.recall:6.4f}  {m.f1:8.4f}  {m.support:7d}"
        )
    lines.append("")
    lines.append(
        f"{'accuracy':<{width}}  {'':9}  {'':6}  {report.accuracy:8.4f}  {report.total_support:7d}"
    )
    for name, avg in (("macro avg", report.macro_avg), ("weighted avg", report.weighted_avg)):
        lines.append(
            f"{name:<{width}}  {avg[0]:9.4f}  {avg[1]:6.4f}  {avg[2]:8.4f}  {report.total_support:7d}"
        )
    return "\n".join(lines) + "\n"


def write_report_csv(report: ClassificationReport, sink: Source) -> None:
    stream, owns = _as_text_writer(sink)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("class", "precision", "recall", "f1", "support"))
        for label, m in report.per_class.items():
            writer.writerow((label, repr(m.precision), repr(m.recall), repr(m.f1), m.support))
        writer.writerow(("accuracy", "", "", repr(report.accuracy), report.total_support))
        writer.writerow(
            ("macro_avg", repr(report.macro_avg[0]), repr(report.macro_avg[1]),
             repr(report.macro_avg[2]), report.total_support)
        )
        writer.writerow(
            ("weighted_avg", repr(report.weighted_avg[0]), repr(report.weighted_avg[1]),
             repr(report.weighted_avg[2]), report.total_support)
        )
        stream.flush()
    finally:
        _finish_text(stream, owns)


def write_confusion_csv(cm: ConfusionMatrix, sink: Source) -> None:
    stream, owns = _as_text_writer(sink)
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(("true\\pred",) + cm.labels)
        for i, label in enumerate(cm.labels):
            writer.writerow((label,) + tuple(int(v) for v in cm.counts[i]))
        stream.flush()
    finally:
        _finish_text(stream, owns)
