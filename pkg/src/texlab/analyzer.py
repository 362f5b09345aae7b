"""Block texture classification with a small fixed-architecture CNN.

Every 32x32 block of a source RGB frame is scored with a forward pass of a
VGG-style network whose coefficients come from a TEXW1 weights file. Layer
arithmetic accumulates in float64 and rounds once to float32 per layer, so
results are bit-identical across runs and match a scalar reference evaluator.
"""

from __future__ import annotations

import hashlib
import json
import os

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import BLOCK_SIZE, BlockGrid, TextureMask

# The architecture is fixed; a weights file must declare exactly this stack.
ARCHITECTURE = (
    "conv3x3:3:32,relu,conv3x3:32:32,relu,maxpool2,"
    "conv3x3:32:64,relu,conv3x3:64:64,relu,maxpool2,"
    "flatten,fc:4096:256,relu,fc:256:1,sigmoid"
)

TEXW1_MAGIC = b"TEXW1\n"

DEFAULT_THRESHOLD = 0.5


class ModelError(ValueError):
    """Weights file inconsistent with the fixed architecture."""


class ShapeError(ValueError):
    """Tensor shapes incompatible with the requested layer operation."""


def architecture_hash(arch: str = ARCHITECTURE) -> str:
    return hashlib.sha256(arch.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class Layer:
    kind: str
    weight: np.ndarray | None = None
    bias: np.ndarray | None = None


@dataclass(frozen=True)
class CnnWeights:
    """Ordered layer stack plus the input normalization means (RGB, in [0,1])."""

    layers: tuple[Layer, ...]
    channel_means: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        got = ",".join(_layer_token(l) for l in self.layers)
        if got != ARCHITECTURE:
            raise ModelError(f"architecture mismatch:\n  declared {ARCHITECTURE}\n  got      {got}")
        if self.channel_means.shape != (3,):
            raise ModelError(f"channel means must have shape (3,), got {self.channel_means.shape}")


def _layer_token(layer: Layer) -> str:
    if layer.kind == "conv3x3":
        co, ci = layer.weight.shape[:2]
        return f"conv3x3:{ci}:{co}"
    if layer.kind == "fc":
        co, ci = layer.weight.shape
        return f"fc:{ci}:{co}"
    return layer.kind


@dataclass(frozen=True)
class BlockScore:
    probability: float
    label: bool  # True = texture

    def __post_init__(self):
        if not (0.0 <= self.probability <= 1.0) or not np.isfinite(self.probability):
            raise ModelError(f"probability out of range: {self.probability}")


# ---------------------------------------------------------------------------
# Layer forward passes
# ---------------------------------------------------------------------------

def conv3x3_forward(x: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-size 3x3 convolution with zero padding on a CxHxW tensor.

    Accumulates in float64, rounds once to float32.
    """
    if x.ndim != 3:
        raise ShapeError(f"expected CxHxW input, got shape {x.shape}")
    cin, h, w = x.shape
    if kernel.ndim != 4 or kernel.shape[1:] != (cin, 3, 3):
        raise ShapeError(f"kernel shape {kernel.shape} incompatible with input channels {cin}")
    cout = kernel.shape[0]
    if bias.shape != (cout,):
        raise ShapeError(f"bias shape {bias.shape} != ({cout},)")
    xp = np.zeros((cin, h + 2, w + 2), np.float64)
    xp[:, 1:-1, 1:-1] = x
    # im2col: rows are (cin*9) receptive fields, columns are spatial positions
    cols = np.empty((cin * 9, h * w), np.float64)
    k = 0
    for dy in range(3):
        for dx in range(3):
            cols[k * cin:(k + 1) * cin] = xp[:, dy:dy + h, dx:dx + w].reshape(cin, -1)
            k += 1
    kmat = kernel.astype(np.float64).transpose(0, 2, 3, 1).reshape(cout, -1)
    # kmat column order must match cols row order: (dy, dx, cin)
    out = kmat @ cols + bias.astype(np.float64)[:, None]
    return out.reshape(cout, h, w).astype(np.float32)


def maxpool2(x: np.ndarray) -> np.ndarray:
    """2x2 non-overlapping max pooling; spatial dims must be even."""
    if x.ndim != 3:
        raise ShapeError(f"expected CxHxW input, got shape {x.shape}")
    c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    return x.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


def fully_connected(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    if x.ndim != 1 or weight.shape[1] != x.shape[0]:
        raise ShapeError(f"fc shapes incompatible: x {x.shape}, weight {weight.shape}")
    out = weight.astype(np.float64) @ x.astype(np.float64) + bias.astype(np.float64)
    return out.astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def sigmoid_scalar(x: float) -> float:
    # Split by sign to stay stable for large |x|.
    if x >= 0:
        return float(1.0 / (1.0 + np.exp(-np.float64(x))))
    e = np.exp(np.float64(x))
    return float(e / (1.0 + e))


def cnn_forward(patch: np.ndarray, weights: CnnWeights, threshold: float = DEFAULT_THRESHOLD) -> BlockScore:
    """Score one 32x32x3 RGB block. Same patch and weights give a bit-identical score."""
    if patch.shape != (BLOCK_SIZE, BLOCK_SIZE, 3):
        raise ShapeError(f"patch must be 32x32x3, got {patch.shape}")
    x = _normalize(patch, weights.channel_means)
    t = x
    for layer in weights.layers:
        if layer.kind == "conv3x3":
            t = conv3x3_forward(t, layer.weight, layer.bias)
        elif layer.kind == "relu":
            t = relu(t)
        elif layer.kind == "maxpool2":
            t = maxpool2(t)
        elif layer.kind == "flatten":
            t = t.reshape(-1)
        elif layer.kind == "fc":
            t = fully_connected(t, layer.weight, layer.bias)
        elif layer.kind == "sigmoid":
            t = np.asarray(sigmoid_scalar(float(t[0])), np.float64)
        else:
            raise ModelError(f"unknown layer kind {layer.kind!r}")
    p = float(t)
    return BlockScore(probability=p, label=p >= threshold)


def _normalize(patch: np.ndarray, means: np.ndarray) -> np.ndarray:
    x = patch.astype(np.float64) / 255.0 - means.astype(np.float64)
    return x.transpose(2, 0, 1).astype(np.float32)  # HWC -> CHW


def segment_frame(
    rgb: np.ndarray,
    weights: CnnWeights,
    threshold: float = DEFAULT_THRESHOLD,
    frame_index: int = 0,
    max_workers: int | None = None,
) -> TextureMask:
    """Classify every 32x32 block of an RGB frame.

    Texture blocks initially carry cluster id 0; clustering into texture
    types happens in the refinement stage. Blocks are scored independently,
    optionally in parallel (capped by TEXLAB_THREADS).
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"expected HxWx3 RGB frame, got {rgb.shape}")
    h, w = rgb.shape[:2]
    if h < BLOCK_SIZE or w < BLOCK_SIZE:
        raise ShapeError(f"frame must be at least {BLOCK_SIZE}x{BLOCK_SIZE}, got {w}x{h}")
    grid = BlockGrid(w, h)
    labels = np.full((grid.rows, grid.cols), -1, np.int16)
    cells = [(r, c) for r in range(grid.rows) for c in range(grid.cols)]

    def score_cell(cell):
        r, c = cell
        rect = grid.block_rect(r, c)
        patch = rgb[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w]
        return cell, cnn_forward(patch, weights, threshold)

    workers = max_workers if max_workers is not None else thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score_cell, cells))
    else:
        results = [score_cell(cell) for cell in cells]
    for (r, c), score in results:
        labels[r, c] = 0 if score.label else -1
    return TextureMask(grid, labels, frame_index)


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("TEXLAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# TEXW1 weights file format
# ---------------------------------------------------------------------------
# Layout (see docs/texw1_format.md):
#   magic "TEXW1\n"
#   UTF-8 JSON header, terminated by a single 0x00 byte
#   raw little-endian float32 blobs in header-declared order
# The header lists, per parameterized layer, the blob shapes in write order
# (weight then bias). Coefficients survive a write/read cycle bit-exactly.


def save_weights(weights: CnnWeights, path: str) -> None:
    header = {
        "format": "TEXW1",
        "architecture": ARCHITECTURE,
        "architecture_sha256": architecture_hash(),
        "input": {"size": BLOCK_SIZE, "channels": 3, "means": [float(m) for m in weights.channel_means]},
        "layers": [],
        "training": weights.metadata,
    }
    blobs = []
    for layer in weights.layers:
        entry = {"kind": layer.kind}
        if layer.weight is not None:
            entry["weight_shape"] = list(layer.weight.shape)
            entry["bias_shape"] = list(layer.bias.shape)
            blobs.append(np.ascontiguousarray(layer.weight, np.float32))
            blobs.append(np.ascontiguousarray(layer.bias, np.float32))
        header["layers"].append(entry)
    payload = json.dumps(header).encode("utf-8")
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(TEXW1_MAGIC)
        fh.write(payload)
        fh.write(b"\0")
        for blob in blobs:
            fh.write(blob.astype("<f4").tobytes())
    os.replace(tmp, path)


def load_weights(path: str) -> CnnWeights:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(TEXW1_MAGIC):
        raise ModelError(f"{path}: not a TEXW1 file")
    end = data.find(b"\0", len(TEXW1_MAGIC))
    if end < 0:
        raise ModelError(f"{path}: missing header terminator")
    try:
        header = json.loads(data[len(TEXW1_MAGIC):end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelError(f"{path}: bad header: {exc}") from exc
    if header.get("architecture") != ARCHITECTURE:
        raise ModelError(f"{path}: architecture mismatch")
    if header.get("architecture_sha256") != architecture_hash():
        raise ModelError(f"{path}: architecture hash mismatch")
    offset = end + 1
    layers = []
    for entry in header["layers"]:
        kind = entry["kind"]
        if "weight_shape" in entry:
            wshape = tuple(entry["weight_shape"])
            bshape = tuple(entry["bias_shape"])
            wn = int(np.prod(wshape))
            bn = int(np.prod(bshape))
            need = (wn + bn) * 4
            if offset + need > len(data):
                raise ModelError(f"{path}: truncated coefficient data")
            w = np.frombuffer(data, "<f4", wn, offset).reshape(wshape).copy()
            offset += wn * 4
            b = np.frombuffer(data, "<f4", bn, offset).reshape(bshape).copy()
            offset += bn * 4
            layers.append(Layer(kind, w, b))
        else:
            layers.append(Layer(kind))
    means = np.asarray(header["input"]["means"], np.float64)
    return CnnWeights(tuple(layers), means, header.get("training", {}))
