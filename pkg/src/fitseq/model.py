"""Trained sequence classifier as a self-describing on-disk container.

The container is a zip of named float64 arrays (numpy ``.npz``): a JSON
metadata entry holding the format version, network spec, label table, and
feature config, plus the scaler statistics and every parameter array under
its name. Arrays are stored row-major little-endian, so a save/load round
trip is bit-exact.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

import numpy as np

from .errors import CorruptModelFile, ShapeMismatch, UnsupportedVersion
from .features import FeatureConfig, LabelTable, StandardScaler
from .nn import NetworkSpec, forward_network

FORMAT_VERSION = 1

_META_KEY = "meta"
_PARAM_PREFIX = "param."


@dataclass(eq=False)
class SequenceModel:
    spec: NetworkSpec
    params: dict[str, np.ndarray]
    scaler: StandardScaler
    labels: LabelTable
    feature_config: FeatureConfig
    format_version: int = FORMAT_VERSION

    def predict_proba(
        self, batch: np.ndarray, train_mode: bool = False, rng_seed: int = 0,
        float32: bool = False,
    ) -> np.ndarray:
        """Class probabilities for an (N, T, D) batch of scaled windows."""
        x = np.asarray(batch)
        if float32:
            x = x.astype(np.float32).astype(np.float64)
        probs, _ = forward_network(self.spec, self.params, x, train_mode, rng_seed)
        return probs

    def predict(self, batch: np.ndarray) -> np.ndarray:
        return self.predict_proba(batch).argmax(axis=1)


def save_model(model: SequenceModel, sink: Union[str, Path, IO[bytes]]) -> None:
    meta = {
        "format_version": model.format_version,
        "spec": model.spec.to_dict(),
        "labels": list(model.labels.classes),
        "feature_config": {
            "layout": model.feature_config.layout,
            "window_len": model.feature_config.window_len,
            "angle_unit": model.feature_config.angle_unit,
        },
        "param_names": list(model.params.keys()),
    }
    arrays = {
        _META_KEY: np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8),
        "scaler.mean": model.scaler.mean,
        "scaler.std": model.scaler.std,
    }
    for name, arr in model.params.items():
        arrays[_PARAM_PREFIX + name] = np.ascontiguousarray(arr, dtype=np.float64)
    if isinstance(sink, (str, Path)):
        # open ourselves so the exact path is honored (savez appends .npz)
        with open(sink, "wb") as fh:
            np.savez(fh, **arrays)
    else:
        np.savez(sink, **arrays)


def load_model(source: Union[str, Path, IO[bytes]]) -> SequenceModel:
    try:
        data = np.load(source, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise CorruptModelFile(f"unreadable model container: {exc}") from exc
    with data:
        try:
            meta = json.loads(bytes(data[_META_KEY]).decode("utf-8"))
        except (KeyError, ValueError) as exc:
            raise CorruptModelFile(f"missing or invalid metadata: {exc}") from exc
        version = meta.get("format_version")
        if version != FORMAT_VERSION:
            raise UnsupportedVersion(
                f"model format version {version!r}, this build supports {FORMAT_VERSION}"
            )
        try:
            spec = NetworkSpec.from_dict(meta["spec"])
            labels = LabelTable(tuple(meta["labels"]))
            fc = meta["feature_config"]
            feature_config = FeatureConfig(
                fc["layout"], int(fc["window_len"]), fc.get("angle_unit", "degrees")
            )
            scaler = StandardScaler(data["scaler.mean"], data["scaler.std"])
            params = {
                name: np.array(data[_PARAM_PREFIX + name], dtype=np.float64)
                for name in meta["param_names"]
            }
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptModelFile(f"model container incomplete: {exc}") from exc
    model = SequenceModel(spec, params, scaler, labels, feature_config, version)
    _check_shapes(model)
    return model


def _check_shapes(model: SequenceModel) -> None:
    widths = model.spec.layer_widths()
    width = widths[0]
    for idx, layer in enumerate(model.spec.layers):
        if layer.kind == "lstm":
            for direction in ("fwd", "bwd") if layer.bidirectional else ("fwd",):
                key = f"L{idx}.{direction}.W"
                if key not in model.params:
                    raise CorruptModelFile(f"missing parameter {key}")
                if model.params[key].shape != (4 * layer.units, width):
                    raise ShapeMismatch(
                        f"{key} has shape {model.params[key].shape}, spec expects "
                        f"{(4 * layer.units, width)}"
                    )
            width = layer.units * (2 if layer.bidirectional else 1)
        elif layer.kind == "dense_softmax":
            if model.params["dense.W"].shape != (layer.units, width):
                raise ShapeMismatch("dense weights inconsistent with spec")


def models_equal(a: SequenceModel, b: SequenceModel) -> bool:
    """Bit-exact parameter and metadata equality (test helper)."""
    if a.spec != b.spec or a.labels != b.labels or a.feature_config != b.feature_config:
        return False
    if set(a.params) != set(b.params):
        return False
    return all(np.array_equal(a.params[k], b.params[k]) for k in a.params) and (
        np.array_equal(a.scaler.mean, b.scaler.mean)
        and np.array_equal(a.scaler.std, b.scaler.std)
    )
