"""Frame-level baseline classifiers and their window-vote aggregation.

Two stand-in architectures sized to the 78-value frame vector:

* ``dnn`` - an MLP with 128/64/32 ReLU hidden units and a softmax head,
  aggregated with majority voting over a sliding 10-frame window.
* ``cnn`` - two 1-D conv blocks (32 then 64 filters, kernel 3, max-pool 2)
  over the feature vector, then a softmax head, aggregated with soft voting
  over non-overlapping 30-frame windows.

Both train frame-by-frame with the same Adam/early-stop machinery as the
sequence models.
"""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DivergedLoss, EmptyTrainingSet, ShapeMismatch
from .features import FeatureFrame, LabelTable, StandardScaler, encode_labels, one_hot
from .metrics import (
    ClassificationReport,
    ConfusionMatrix,
    FrameVoter,
    classification_report,
    confusion_matrix,
    vote,
)
from .nn import softmax
from .optim import AdamState, adam_step
from .train import (
    EARLY_STOP_PATIENCE,
    EpochStats,
    HyperParams,
    LR_FACTOR,
    LR_FLOOR,
    LR_PATIENCE,
    TrainRecord,
)

logger = logging.getLogger(__name__)

DNN_HIDDEN = (128, 64, 32)
CNN_FILTERS = (32, 64)
CNN_KERNEL = 3
CNN_POOL = 2


@dataclass(frozen=True)
class FrameNetSpec:
    arch: str           # "dnn" | "cnn"
    input_dim: int
    n_classes: int

    def __post_init__(self):
        if self.arch not in ("dnn", "cnn"):
            raise ValueError(f"unknown frame architecture {self.arch!r}")


def _conv_lengths(input_dim: int) -> list[int]:
    lengths = [input_dim]
    for _ in CNN_FILTERS:
        lengths.append(lengths[-1] - (CNN_KERNEL - 1))   # valid convolution
        if lengths[-1] % CNN_POOL != 0 or lengths[-1] <= 0:
            raise ShapeMismatch(f"input dim {input_dim} incompatible with the conv stack")
        lengths.append(lengths[-1] // CNN_POOL)
    return lengths


def init_frame_params(spec: FrameNetSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    params: dict[str, np.ndarray] = {}
    if spec.arch == "dnn":
        dims = (spec.input_dim,) + DNN_HIDDEN + (spec.n_classes,)
        for i in range(len(dims) - 1):
            limit = np.sqrt(6.0 / (dims[i] + dims[i + 1]))
            params[f"fc{i}.W"] = rng.uniform(-limit, limit, size=(dims[i + 1], dims[i]))
            params[f"fc{i}.b"] = np.zeros(dims[i + 1])
    else:
        channels = (1,) + CNN_FILTERS
        for i in range(len(CNN_FILTERS)):
            fan_in = channels[i] * CNN_KERNEL
            limit = np.sqrt(6.0 / (fan_in + channels[i + 1]))
            params[f"conv{i}.W"] = rng.uniform(
                -limit, limit, size=(channels[i + 1], channels[i], CNN_KERNEL)
            )
            params[f"conv{i}.b"] = np.zeros(channels[i + 1])
        flat = CNN_FILTERS[-1] * _conv_lengths(spec.input_dim)[-1]
        limit = np.sqrt(6.0 / (flat + spec.n_classes))
        params["out.W"] = rng.uniform(-limit, limit, size=(spec.n_classes, flat))
        params["out.b"] = np.zeros(spec.n_classes)
    return params


def _conv1d(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # x (N, C, L), w (F, C, k) -> (N, F, L-k+1)
    l_out = x.shape[2] - w.shape[2] + 1
    out = np.zeros((x.shape[0], w.shape[0], l_out))
    for j in range(w.shape[2]):
        out += np.einsum("ncl,fc->nfl", x[:, :, j : j + l_out], w[:, :, j])
    return out + b[None, :, None]


def frame_forward(
    spec: FrameNetSpec, params: dict[str, np.ndarray], x: np.ndarray
) -> tuple[np.ndarray, list]:
    """Per-frame class probabilities for an (N, D) batch, plus caches."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ShapeMismatch(f"expected (N, {spec.input_dim}), got {x.shape}")
    caches: list = []
    if spec.arch == "dnn":
        act = x
        for i in range(len(DNN_HIDDEN) + 1):
            pre = act @ params[f"fc{i}.W"].T + params[f"fc{i}.b"]
            if i < len(DNN_HIDDEN):
                caches.append((act, pre))
                act = np.maximum(pre, 0.0)
            else:
                caches.append((act, pre))
                return softmax(pre), caches
    act = x[:, None, :]                     # (N, 1, L) channels-first
    for i in range(len(CNN_FILTERS)):
        pre = _conv1d(act, params[f"conv{i}.W"], params[f"conv{i}.b"])
        relu = np.maximum(pre, 0.0)
        n, f, l = relu.shape
        blocks = relu.reshape(n, f, l // CNN_POOL, CNN_POOL)
        arg = blocks.argmax(axis=3)
        pooled = np.take_along_axis(blocks, arg[..., None], axis=3)[..., 0]
        caches.append((act, pre, arg))
        act = pooled
    flat = act.reshape(act.shape[0], -1)
    logits = flat @ params["out.W"].T + params["out.b"]
    caches.append((flat, act.shape))
    return softmax(logits), caches


def frame_loss_grads(
    spec: FrameNetSpec, params: dict[str, np.ndarray], x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    probs, caches = frame_forward(spec, params, x)
    n = probs.shape[0]
    loss = float(-(y * np.log(probs + 1e-12)).sum(axis=1).mean())
    grads: dict[str, np.ndarray] = {}
    delta = (probs - y) / n

    if spec.arch == "dnn":
        for i in range(len(DNN_HIDDEN), -1, -1):
            act_in, pre = caches[i]
            if i < len(DNN_HIDDEN):
                delta = delta * (pre > 0)
            grads[f"fc{i}.W"] = delta.T @ act_in
            grads[f"fc{i}.b"] = delta.sum(axis=0)
            delta = delta @ params[f"fc{i}.W"]
        return loss, grads, probs

    flat, pooled_shape = caches[-1]
    grads["out.W"] = delta.T @ flat
    grads["out.b"] = delta.sum(axis=0)
    delta = (delta @ params["out.W"]).reshape(pooled_shape)
    for i in range(len(CNN_FILTERS) - 1, -1, -1):
        act_in, pre, arg = caches[i]
        n_, f_, lp = delta.shape
        d_blocks = np.zeros((n_, f_, lp, CNN_POOL))
        np.put_along_axis(d_blocks, arg[..., None], delta[..., None], axis=3)
        d_relu = d_blocks.reshape(n_, f_, lp * CNN_POOL)
        d_pre = d_relu * (pre > 0)
        w = params[f"conv{i}.W"]
        l_out = d_pre.shape[2]
        grads[f"conv{i}.b"] = d_pre.sum(axis=(0, 2))
        gw = np.zeros_like(w)
        dx = np.zeros_like(act_in)
        for j in range(CNN_KERNEL):
            gw[:, :, j] = np.einsum("nfl,ncl->fc", d_pre, act_in[:, :, j : j + l_out])
            dx[:, :, j : j + l_out] += np.einsum("nfl,fc->ncl", d_pre, w[:, :, j])
        grads[f"conv{i}.W"] = gw
        delta = dx
    return loss, grads, probs


@dataclass(eq=False)
class FrameModel:
    spec: FrameNetSpec
    params: dict[str, np.ndarray]
    scaler: StandardScaler
    labels: LabelTable

    def predict_proba(self, values: np.ndarray) -> np.ndarray:
        probs, _ = frame_forward(self.spec, self.params, self.scaler.transform(values))
        return probs


def frame_model_train(
    frames: Sequence[FeatureFrame],
    arch: str,
    hp: HyperParams,
    seed: int = 0,
    val_frames: Optional[Sequence[FeatureFrame]] = None,
) -> tuple[FrameModel, TrainRecord]:
    """Train a frame-level classifier on individual feature frames.

    Without an explicit validation set, a deterministic 15% tail of a
    shuffled copy is held out to drive early stopping.
    """
    frames = list(frames)
    if not frames:
        raise EmptyTrainingSet("no frames")
    started = time.perf_counter()
    if val_frames is None:
        order = np.random.default_rng([seed, 99]).permutation(len(frames))
        n_val = max(1, int(round(0.15 * len(frames))))
        val_frames = [frames[i] for i in order[:n_val]]
        frames = [frames[i] for i in order[n_val:]]
        if not frames:
            raise EmptyTrainingSet("all frames consumed by the validation holdout")

    table = encode_labels(f.label for f in frames)
    scaler = StandardScaler.fit(np.stack([f.values for f in frames]))
    x_train = scaler.transform(np.stack([f.values for f in frames]))
    y_train = np.stack([one_hot(table, f.label) for f in frames])
    x_val = scaler.transform(np.stack([f.values for f in val_frames]))
    y_val = np.stack([one_hot(table, f.label) for f in val_frames])

    spec = FrameNetSpec(arch, x_train.shape[1], len(table))
    params = init_frame_params(spec, np.random.default_rng([seed, 0]))
    state = AdamState.for_params(params, hp.learning_rate)

    record = TrainRecord()
    best_val = np.inf
    best_params = copy.deepcopy(params)
    best_epoch = 0
    stop_wait = 0
    lr_wait = 0
    n = x_train.shape[0]

    for epoch in range(1, hp.epochs + 1):
        order = np.random.default_rng([seed, epoch]).permutation(n)
        epoch_loss = 0.0
        correct = 0
        for start in range(0, n, hp.batch_size):
            sel = order[start : start + hp.batch_size]
            loss, grads, probs = frame_loss_grads(spec, params, x_train[sel], y_train[sel])
            if not np.isfinite(loss):
                record.stop_reason = "diverged"
                record.wall_time_s = time.perf_counter() - started
                raise DivergedLoss(f"loss became {loss} at epoch {epoch}", record=record)
            correct += int((probs.argmax(axis=1) == y_train[sel].argmax(axis=1)).sum())
            epoch_loss += loss * len(sel)
            adam_step(state, params, grads)

        val_probs, _ = frame_forward(spec, params, x_val)
        val_loss = float(-(y_val * np.log(val_probs + 1e-12)).sum(axis=1).mean())
        val_acc = float((val_probs.argmax(axis=1) == y_val.argmax(axis=1)).mean())
        record.epochs.append(
            EpochStats(epoch, epoch_loss / n, correct / n, val_loss, val_acc, state.learning_rate)
        )
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = copy.deepcopy(params)
            stop_wait = 0
            lr_wait = 0
        else:
            stop_wait += 1
            lr_wait += 1
            if lr_wait >= LR_PATIENCE and state.learning_rate > LR_FLOOR:
                state.learning_rate = max(state.learning_rate * LR_FACTOR, LR_FLOOR)
                lr_wait = 0
            if stop_wait >= EARLY_STOP_PATIENCE:
                record.stop_reason = "early_stop"
                break

    record.best_epoch = best_epoch
    record.wall_time_s = time.perf_counter() - started
    return FrameModel(spec, best_params, scaler, table), record


def evaluate_frames(
    model: FrameModel, frames: Sequence[FeatureFrame]
) -> tuple[ClassificationReport, ConfusionMatrix]:
    """Frame-level report: one prediction per frame."""
    probs = model.predict_proba(np.stack([f.values for f in frames]))
    pred = probs.argmax(axis=1)
    true = [model.labels.index(f.label) for f in frames]
    cm = confusion_matrix(true, pred, model.labels.classes)
    return classification_report(cm), cm


def evaluate_with_voting(
    model: FrameModel, frames: Sequence[FeatureFrame], voter: FrameVoter
) -> tuple[ClassificationReport, ConfusionMatrix]:
    """Sequence-level report: per-frame probabilities aggregated per window.

    Frames are grouped by consecutive video runs; videos shorter than the
    voting window contribute nothing.
    """
    true_idx: list[int] = []
    pred_idx: list[int] = []
    run_start = 0
    n = len(frames)
    for i in range(n + 1):
        if i < n and frames[i].source_video == frames[run_start].source_video:
            continue
        run = frames[run_start:i]
        run_start = i
        if len(run) < voter.window_len:
            continue
        probs = model.predict_proba(np.stack([f.values for f in run]))
        labels = vote(probs, voter)
        true_idx.extend([model.labels.index(run[0].label)] * len(labels))
        pred_idx.extend(labels)
    cm = confusion_matrix(true_idx, pred_idx, model.labels.classes)
    return classification_report(cm), cm
