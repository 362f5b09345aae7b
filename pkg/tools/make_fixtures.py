#!/usr/bin/env python3
"""Build the committed test fixtures: classifier weights, patches, goldens.

The fixture network is a handcrafted high-frequency-energy detector on the
fixed architecture: channel 0/1 of the first convolution hold +/- Laplacian
taps on the green channel, later convolutions pass the rectified pair
through as |laplacian|, and the head averages the interior of the pooled
energy map into a sigmoid. Gaussian noise scores near 1, flat patches and
smooth ramps near sigmoid(-2). No training is involved, so the primary
test suite never depends on the trainer.

Golden probabilities are produced by the scalar reference evaluator in
tests/oracles/scalar_cnn.py (independent loops + its own file parser).
"""

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from texlab.analyzer import CnnWeights, Layer, save_weights  # noqa: E402
from oracles.scalar_cnn import evaluate_patch, read_texw1  # noqa: E402

FIXTURES = ROOT / "tests" / "fixtures"

GAIN = 3.0
BIAS = -2.0


def build_weights() -> CnnWeights:
    conv1_w = np.zeros((32, 3, 3, 3), np.float32)
    lap = np.array([[0, -1, 0], [-1, 4, -1], [0, -1, 0]], np.float32)
    conv1_w[0, 1] = lap
    conv1_w[1, 1] = -lap
    conv1_b = np.zeros(32, np.float32)

    conv2_w = np.zeros((32, 32, 3, 3), np.float32)
    conv2_w[0, 0, 1, 1] = 1.0
    conv2_w[0, 1, 1, 1] = 1.0
    conv2_b = np.zeros(32, np.float32)

    conv3_w = np.zeros((64, 32, 3, 3), np.float32)
    conv3_w[0, 0, 1, 1] = 1.0
    conv3_b = np.zeros(64, np.float32)

    conv4_w = np.zeros((64, 64, 3, 3), np.float32)
    conv4_w[0, 0, 1, 1] = 1.0
    conv4_b = np.zeros(64, np.float32)

    fc1_w = np.zeros((256, 64 * 8 * 8), np.float32)
    # average the interior 6x6 of the channel-0 8x8 energy map
    for r in range(1, 7):
        for c in range(1, 7):
            fc1_w[0, r * 8 + c] = 1.0 / 36.0
    fc1_b = np.zeros(256, np.float32)

    fc2_w = np.zeros((1, 256), np.float32)
    fc2_w[0, 0] = GAIN
    fc2_b = np.array([BIAS], np.float32)

    layers = (
        Layer("conv3x3", conv1_w, conv1_b),
        Layer("relu"),
        Layer("conv3x3", conv2_w, conv2_b),
        Layer("relu"),
        Layer("maxpool2"),
        Layer("conv3x3", conv3_w, conv3_b),
        Layer("relu"),
        Layer("conv3x3", conv4_w, conv4_b),
        Layer("relu"),
        Layer("maxpool2"),
        Layer("flatten"),
        Layer("fc", fc1_w, fc1_b),
        Layer("relu"),
        Layer("fc", fc2_w, fc2_b),
        Layer("sigmoid"),
    )
    means = np.array([0.5, 0.5, 0.5], np.float64)
    meta = {"kind": "handcrafted-fixture",
            "note": "laplacian energy detector; noise -> texture, flat/ramp -> non-texture"}
    return CnnWeights(layers, means, meta)


def build_patches(rng: np.random.Generator) -> np.ndarray:
    patches = []
    for sigma in (20, 40, 60, 80, 100, 127):
        base = rng.normal(128, sigma, (32, 32, 3))
        patches.append(np.clip(base, 0, 255))
    for value in (0, 64, 128, 255):
        patches.append(np.full((32, 32, 3), value, np.float64))
    for axis, lo, hi in ((0, 0, 255), (1, 0, 255), (0, 40, 200), (1, 200, 40)):
        ramp = np.linspace(lo, hi, 32)
        grid = np.repeat(ramp[:, None], 32, axis=1) if axis == 0 else np.repeat(ramp[None, :], 32, axis=0)
        patches.append(np.repeat(grid[:, :, None], 3, axis=2))
    for period in (1, 2, 4):
        yy, xx = np.mgrid[0:32, 0:32]
        board = (((yy // period) + (xx // period)) % 2) * 255.0
        patches.append(np.repeat(board[:, :, None], 3, axis=2))
    for blobs in (2, 4, 6):
        img = np.full((32, 32), 128.0)
        for _ in range(blobs):
            cy, cx = rng.uniform(4, 28, 2)
            amp = rng.uniform(-60, 60)
            yy, xx = np.mgrid[0:32, 0:32]
            img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / 40.0)
        img += rng.normal(0, 6, (32, 32))
        patches.append(np.repeat(np.clip(img, 0, 255)[:, :, None], 3, axis=2))
    assert len(patches) == 20
    return np.stack([p.round().astype(np.uint8) for p in patches])


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    weights = build_weights()
    wpath = FIXTURES / "fixture.texw1"
    save_weights(weights, str(wpath))
    print(f"wrote {wpath} ({wpath.stat().st_size} bytes)")

    rng = np.random.default_rng(20240811)
    patches = build_patches(rng)
    ppath = FIXTURES / "golden_patches.npz"
    np.savez_compressed(ppath, patches=patches)
    print(f"wrote {ppath}")

    layers, means = read_texw1(str(wpath))
    probs = []
    for idx in range(len(patches)):
        p = evaluate_patch(patches[idx].tolist(), layers, means)
        probs.append(p)
        print(f"  patch {idx:2d}: p = {p:.8f}")
    gpath = FIXTURES / "golden_probs.json"
    gpath.write_text(json.dumps({"probabilities": probs}, indent=2) + "\n")
    print(f"wrote {gpath}")


if __name__ == "__main__":
    main()
