"""Acceptance suite: one test per criterion, at its stated tolerance.

Run with ``pytest -v tests/test_acceptance.py`` for one pass/fail line per
criterion. The full-corpus accuracy figures quoted in the README are
reproduction targets for users with the complete video datasets, not
assertions here; the end-to-end criteria below run on the built-in
synthetic generator.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from fitseq import nn
from fitseq.features import (
    FeatureConfig,
    LabelTable,
    StandardScaler,
    featurize_frames,
    read_feature_csv,
    window,
    write_feature_csv,
)
from fitseq.landmarks import parse_landmark_csv, write_landmark_csv
from fitseq.metrics import FrameVoter, classification_report, confusion_matrix, evaluate, vote
from fitseq.model import SequenceModel, load_model, save_model
from fitseq.repcount import DEFAULT_SPECS, RepCounterState, count_session, step
from fitseq.streaming import StreamSession, stream_step
from fitseq.synthetic import make_dataset, make_session
from fitseq.train import HyperParams, SplitSpec, split, train
from gradcheck import max_relative_error, random_tiny_net
from test_geometry import arccos_oracle, random_rotation
from test_metrics import brute_force_majority, brute_force_soft

from fitseq.geometry import joint_angle


def report(line):
    print(f"ACCEPTANCE {line}")


# --- criterion: gradient correctness ------------------------------------------------

def test_gradient_correctness_20_random_tiny_nets():
    started = time.perf_counter()
    checked = 0
    worst = 0.0
    for arch in ("lstm", "bilstm"):
        for seed in range(10):
            spec, params, x, y = random_tiny_net(arch, 1000 + seed)
            err = max_relative_error(spec, params, x, y, seed=seed)
            worst = max(worst, err)
            assert err < 1e-4, (arch, seed, err)
            checked += 1
    elapsed = time.perf_counter() - started
    assert checked >= 20
    assert elapsed < 60.0
    report(f"gradient correctness: {checked} nets, worst rel err {worst:.2e}, {elapsed:.1f}s")


# --- criterion: geometry oracle -------------------------------------------------------

def test_geometry_oracle_10e5_triples_and_invariance():
    rng = np.random.default_rng(2024)
    triples = rng.uniform(-5.0, 5.0, size=(100_000, 3, 3))
    worst = 0.0
    for a, v, c in triples:
        got = joint_angle(a, v, c)
        want = arccos_oracle(a, v, c)
        worst = max(worst, abs(got - want))
        assert abs(got - want) < 1e-9
    for i in range(200):
        a, v, c = rng.uniform(-2, 2, size=(3, 3))
        base = joint_angle(a, v, c)
        t = rng.uniform(-10, 10, 3)
        s = rng.uniform(0.1, 10.0)
        rot = random_rotation(rng)
        assert abs(joint_angle(a + t, v + t, c + t) - base) < 1e-9
        assert abs(joint_angle(v + s * (a - v), v, v + s * (c - v)) - base) < 1e-9
        assert abs(joint_angle(rot @ a, rot @ v, rot @ c) - base) < 1e-9
    report(f"geometry oracle: 100000 triples, worst abs err {worst:.2e} deg")


# --- criterion: synthetic end-to-end -----------------------------------------------------

@pytest.fixture(scope="module")
def e2e_partitions():
    frames = make_dataset(windows_per_class=200, seed=404)
    feats = featurize_frames(frames, FeatureConfig("mixed78"))
    windows = window(feats, 30, 30)
    assert len(windows) == 800
    # 75% train+val, 25%/class held out
    return split(windows, SplitSpec((0.60, 0.15, 0.25), "window", seed=17))


E2E_HP = HyperParams(units=50, dropout_rate=0.25, learning_rate=0.001,
                     batch_size=32, epochs=60)


def test_synthetic_end_to_end_bilstm(e2e_partitions):
    train_part, val_part, test_part = e2e_partitions
    started = time.perf_counter()
    model, _record = train(train_part, val_part, E2E_HP, "bilstm", seed=7)
    elapsed = time.perf_counter() - started
    rep, _cm = evaluate(model, test_part)
    assert elapsed < 300.0, f"BiLSTM training took {elapsed:.0f}s"
    assert rep.accuracy >= 0.95, f"BiLSTM held-out accuracy {rep.accuracy:.4f}"
    report(f"synthetic e2e bilstm: acc {rep.accuracy:.4f} on {rep.total_support} "
           f"windows in {elapsed:.0f}s")


def test_synthetic_end_to_end_lstm(e2e_partitions):
    train_part, val_part, test_part = e2e_partitions
    model, _record = train(train_part, val_part, E2E_HP, "lstm", seed=7)
    rep, _cm = evaluate(model, test_part)
    assert rep.accuracy >= 0.90, f"LSTM held-out accuracy {rep.accuracy:.4f}"
    report(f"synthetic e2e lstm: acc {rep.accuracy:.4f}")


# --- criterion: overfit sanity ---------------------------------------------------------

@pytest.mark.parametrize("arch", ["lstm", "bilstm"])
def test_overfit_sanity_eight_windows(arch):
    frames = make_dataset(windows_per_class=2, seed=55)
    feats = featurize_frames(frames, FeatureConfig("mixed78"))
    toy = window(feats, 30, 30)
    assert len(toy) == 8
    hp = HyperParams(units=16, dropout_rate=0.0, learning_rate=0.01,
                     batch_size=8, epochs=200)
    _model, record = train(toy, toy, hp, arch, seed=3)
    best_train_acc = max(e.train_acc for e in record.epochs)
    assert best_train_acc == 1.0
    report(f"overfit sanity {arch}: 100% train accuracy by epoch "
           f"{next(e.epoch for e in record.epochs if e.train_acc == 1.0)}")


# --- criterion: voting equivalence --------------------------------------------------------

def test_voting_equivalence_1000_windows():
    rng = np.random.default_rng(99)
    for i in range(1000):
        block = rng.random((10, 4))
        block /= block.sum(axis=1, keepdims=True)
        maj = vote(block, FrameVoter("majority", 10, 1))
        soft = vote(block, FrameVoter("soft", 10, 1))
        assert maj == [brute_force_majority(block)]
        assert soft == [brute_force_soft(block)]
    report("voting equivalence: 1000 random windows, exact match in both modes")


# --- criterion: repetition counting ----------------------------------------------------------

def test_rep_counting_exact_cycles_all_specs():
    for exercise in sorted(DEFAULT_SPECS):
        for n in (1, 3, 10):
            frames = make_session(exercise, n_frames=max(40 * n, 120), n_cycles=n,
                                  seed=808, noise_std=0.002)
            count, _events = count_session(frames, exercise)
            assert count == n, (exercise, n, count)
    report("rep counting: N in {1,3,10} exact for all four exercises")


def test_rep_counting_dead_band_noise_immune():
    rng = np.random.default_rng(31)
    for exercise, spec in DEFAULT_SPECS.items():
        if spec.count_on == "up":
            rest, far = spec.enter_up + 12, spec.enter_down - 12
        else:
            rest = spec.enter_down + (12 if spec.up_is_low else -12)
            far = spec.enter_up + (-12 if spec.up_is_low else 12)
        t = np.arange(161)
        angles = rest + (far - rest) * (1 - np.cos(2 * np.pi * 4 * t / 160)) / 2
        lo, hi = sorted((spec.enter_down, spec.enter_up))

        def run(seq):
            state = RepCounterState()
            total = 0
            for angle in seq:
                state, event = step(state, spec, float(angle))
                total += event is not None
            return total

        base = run(angles)
        assert base == 4
        noisy = []
        for angle in angles:
            noisy.append(angle)
            for _ in range(int(rng.integers(0, 4))):
                noisy.append(float(rng.uniform(lo + 1e-6, hi - 1e-6)))
        assert run(noisy) == base, exercise
    report("rep counting: dead-band noise injection changes no count")


# --- criterion: streaming cadence & throughput ------------------------------------------------

@pytest.fixture(scope="module")
def reference_size_model():
    """Untrained model at the shipped BiLSTM size (classification quality
    is irrelevant for cadence and throughput)."""
    rng = np.random.default_rng(0)
    spec = nn.build_spec("bilstm", 73, 0.2174, 30, 78, 4)
    params = nn.init_params(spec, rng)
    scaler = StandardScaler(np.zeros(78), np.ones(78))
    labels = LabelTable(("barbell_biceps_curl", "push_up", "shoulder_press", "squat"))
    return SequenceModel(spec, params, scaler, labels, FeatureConfig("mixed78", 30))


def test_streaming_cadence_187_frames(reference_size_model):
    session = StreamSession(model=reference_size_model)
    frames = make_session("squat", 187, 3, seed=12)
    classified = 0
    for frame in frames:
        for event in stream_step(session, frame):
            classified += event.kind == "classified"
    assert classified == 6
    report("streaming cadence: 187 usable frames -> 6 classified events")


def test_streaming_throughput_300_fps(reference_size_model):
    frames = make_session("squat", 600, 10, seed=13)
    session = StreamSession(model=reference_size_model)
    started = time.perf_counter()
    for frame in frames:
        stream_step(session, frame)
    elapsed = time.perf_counter() - started
    fps = len(frames) / elapsed
    assert fps >= 300.0, f"{fps:.0f} frames/sec"
    report(f"streaming throughput: {fps:.0f} frames/sec (>=300 required)")


# --- criterion: metrics identities ---------------------------------------------------------------

def test_metrics_identities_on_evaluation_runs(reference_size_model):
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(200):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 80))
        cm = confusion_matrix(
            rng.integers(0, k, n), rng.integers(0, k, n),
            tuple(f"c{i}" for i in range(k)),
        )
        rep = classification_report(cm)
        assert rep.accuracy == pytest.approx(np.trace(cm.counts) / cm.total, abs=1e-12)
        supports = np.array([rep.per_class[l].support for l in cm.labels], dtype=float)
        for avg, attr in zip(rep.weighted_avg, ("precision", "recall", "f1")):
            values = np.array([getattr(rep.per_class[l], attr) for l in cm.labels])
            assert abs(avg - float(values @ supports / cm.total)) < 1e-9
        checked += 1
    # and on a real model evaluation
    frames = make_dataset(windows_per_class=4, seed=77)
    windows = window(featurize_frames(frames, FeatureConfig()), 30, 30)
    rep, cm = evaluate(reference_size_model, windows)
    assert rep.accuracy == pytest.approx(np.trace(cm.counts) / cm.total, abs=1e-12)
    report(f"metrics identities: {checked} random runs + 1 model run, all within 1e-9")


# --- criterion: search determinism ---------------------------------------------------------------

def test_search_cli_byte_identical_ledgers(tmp_path):
    raw = tmp_path / "raw.csv"
    write_landmark_csv(make_dataset(windows_per_class=6, seed=3), raw)
    feat = tmp_path / "feat.csv"
    subprocess.run(
        [sys.executable, "-m", "fitseq", "featurize", str(raw), "-o", str(feat)],
        check=True, capture_output=True,
    )
    ledgers = []
    for run in ("a", "b"):
        out = tmp_path / f"ledger_{run}.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "fitseq", "search", str(feat), "--arch", "lstm",
             "--iters", "3", "--seed", "7", "-o", str(out)],
            check=True, capture_output=True,
        )
        assert proc.returncode == 0
        ledgers.append(out.read_bytes())
    assert ledgers[0] == ledgers[1]
    assert ledgers[0].decode().count("\n") == 4      # header + 3 trials
    report("determinism: search --iters 3 --seed 7 twice -> byte-identical ledgers")


# --- criterion: serialization round trips -----------------------------------------------------------

def test_serialization_round_trips(tmp_path, tiny_model):
    path = tmp_path / "model.fsm"
    save_model(tiny_model, path)
    loaded = load_model(path)
    probe = np.random.default_rng(8).standard_normal((5, 30, 78))
    np.testing.assert_array_equal(
        tiny_model.predict_proba(probe), loaded.predict_proba(probe)
    )

    frames = make_dataset(windows_per_class=2, seed=9)
    raw_a, raw_b = tmp_path / "raw_a.csv", tmp_path / "raw_b.csv"
    write_landmark_csv(frames, raw_a)
    write_landmark_csv(parse_landmark_csv(raw_a), raw_b)
    assert raw_a.read_bytes() == raw_b.read_bytes()

    feats = featurize_frames(frames, FeatureConfig())
    feat_a, feat_b = tmp_path / "f_a.csv", tmp_path / "f_b.csv"
    write_feature_csv(feats, feat_a)
    write_feature_csv(read_feature_csv(feat_a), feat_b)
    assert feat_a.read_bytes() == feat_b.read_bytes()
    report("serialization: model probe outputs bit-identical; CSVs round-trip")
