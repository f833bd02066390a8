"""Exercise recognition from pose landmarks.

Invariant feature extraction, windowed LSTM/BiLSTM sequence classifiers
trained from scratch, frame-level voting baselines, evaluation reports,
and angle-threshold repetition counting with a streaming auto-classify
loop.
"""

from .features import FeatureConfig, FeatureFrame, LabelTable, StandardScaler, WindowSample
from .landmarks import CANONICAL_LABELS, LandmarkFrame, LandmarkId, frame_is_usable
from .model import SequenceModel, load_model, save_model
from .train import HyperParams, SplitSpec, TrainRecord, random_search, split, train

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_LABELS",
    "FeatureConfig",
    "FeatureFrame",
    "HyperParams",
    "LabelTable",
    "LandmarkFrame",
    "LandmarkId",
    "SequenceModel",
    "SplitSpec",
    "StandardScaler",
    "TrainRecord",
    "WindowSample",
    "frame_is_usable",
    "load_model",
    "random_search",
    "save_model",
    "split",
    "train",
    "__version__",
]
