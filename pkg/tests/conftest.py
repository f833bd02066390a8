import pytest

from fitseq.features import FeatureConfig, featurize_frames, window
from fitseq.synthetic import make_dataset
from fitseq.train import HyperParams


@pytest.fixture(scope="session")
def tiny_windows():
    """Small featurized window set over all four classes (deterministic)."""
    frames = make_dataset(windows_per_class=6, seed=11)
    feats = featurize_frames(frames, FeatureConfig())
    return window(feats, 30, 30)


@pytest.fixture(scope="session")
def toy_hp():
    return HyperParams(units=12, dropout_rate=0.0, learning_rate=0.01,
                       batch_size=8, epochs=200)


@pytest.fixture(scope="session")
def tiny_model(tiny_windows, toy_hp):
    """A quickly trained BiLSTM over the tiny synthetic set."""
    from dataclasses import replace

    from fitseq.train import train

    hp = replace(toy_hp, epochs=30, batch_size=16)
    model, _record = train(tiny_windows, tiny_windows, hp, "bilstm", seed=1)
    return model
