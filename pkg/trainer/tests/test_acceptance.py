"""Trainer acceptance: convergence, bit-exact export, cross-engine goldens.

Run with -s for the per-criterion lines.
"""

import numpy as np
import pytest

from textrain.datasets import PatchDataset
from textrain.export import export_texw1, import_texw1
from textrain.model import export_layers
from textrain.train import TrainConfig, predict_probabilities, train


@pytest.fixture(scope="module")
def run(corpus):
    data = PatchDataset(corpus.patches.copy(), corpus.labels.copy()).split(seed=0)
    return train(data, TrainConfig(epochs=30, batch=32, seed=0))


def test_validation_accuracy(run):
    best = run.best_val_accuracy()
    assert best >= 0.90
    print(f"[PASS] trainer convergence: best val accuracy {best:.3f} within 30 epochs")


def test_export_round_trip_exact(run, tmp_path):
    path = tmp_path / "acc.texw1"
    export_texw1(run.model, run.channel_means, path)
    model2, means2, _ = import_texw1(path)
    total = 0
    for la, lb in zip(export_layers(run.model), export_layers(model2)):
        if la.get("module") is None:
            continue
        wa = la["module"].weight.detach().numpy().view(np.uint32)
        wb = lb["module"].weight.detach().numpy().view(np.uint32)
        assert np.array_equal(wa, wb)
        total += wa.size
    print(f"[PASS] TEXW1 round trip: {total} coefficients bit-exact")


def test_cross_engine_golden(run, tmp_path, corpus):
    texlab_analyzer = pytest.importorskip("texlab.analyzer")
    path = tmp_path / "acc.texw1"
    export_texw1(run.model, run.channel_means, path)
    weights = texlab_analyzer.load_weights(str(path))
    worst = 0.0
    for patch in corpus.patches[:20]:
        u8 = np.round(patch * 255.0).astype(np.uint8)
        engine = texlab_analyzer.cnn_forward(u8, weights).probability
        trainer = predict_probabilities(run.model, (u8 / 255.0)[None].astype(np.float32),
                                        run.channel_means)[0]
        worst = max(worst, abs(engine - trainer))
    assert worst <= 1e-5
    print(f"[PASS] cross-engine golden: 20 patches within 1e-5 (worst {worst:.2e})")
