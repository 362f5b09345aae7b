"""Scalar reference evaluator for the block classifier.

Everything here is deliberately written with plain Python loops and its own
TEXW1 parser: it shares no forward-pass code with the package under test.
Golden probabilities committed in the fixtures were produced by this file.
"""

from __future__ import annotations

import json
import math
import struct


def read_texw1(path):
    """Minimal independent TEXW1 reader: (layers, means)."""
    data = open(path, "rb").read()
    assert data[:6] == b"TEXW1\n", "bad magic"
    end = data.index(b"\0", 6)
    header = json.loads(data[6:end].decode("utf-8"))
    offset = end + 1
    layers = []
    for entry in header["layers"]:
        layer = {"kind": entry["kind"]}
        if "weight_shape" in entry:
            # blobs follow header order: weight then bias per layer
            wshape = entry["weight_shape"]
            wcount = 1
            for s in wshape:
                wcount *= s
            wvals = struct.unpack(f"<{wcount}f", data[offset:offset + 4 * wcount])
            offset += 4 * wcount
            bshape = entry["bias_shape"]
            bcount = 1
            for s in bshape:
                bcount *= s
            bvals = struct.unpack(f"<{bcount}f", data[offset:offset + 4 * bcount])
            offset += 4 * bcount
            layer["weight"] = _nest(list(wvals), wshape)
            layer["bias"] = list(bvals)
        layers.append(layer)
    return layers, header["input"]["means"]


def _nest(flat, shape):
    if len(shape) == 1:
        return flat
    sub = len(flat) // shape[0]
    return [_nest(flat[i * sub:(i + 1) * sub], shape[1:]) for i in range(shape[0])]


def _f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def conv3x3(x, kernel, bias):
    cin = len(x)
    h = len(x[0])
    w = len(x[0][0])
    cout = len(kernel)
    out = []
    for co in range(cout):
        plane = []
        for i in range(h):
            row = []
            for j in range(w):
                acc = 0.0
                for ci in range(cin):
                    for di in (-1, 0, 1):
                        for dj in (-1, 0, 1):
                            ii, jj = i + di, j + dj
                            if 0 <= ii < h and 0 <= jj < w:
                                acc += float(x[ci][ii][jj]) * float(kernel[co][ci][di + 1][dj + 1])
                row.append(_f32(acc + float(bias[co])))
            plane.append(row)
        out.append(plane)
    return out


def maxpool2(x):
    out = []
    for plane in x:
        h, w = len(plane), len(plane[0])
        out.append([[max(plane[2 * i][2 * j], plane[2 * i][2 * j + 1],
                         plane[2 * i + 1][2 * j], plane[2 * i + 1][2 * j + 1])
                     for j in range(w // 2)] for i in range(h // 2)])
    return out


def relu_t(x):
    if isinstance(x, list):
        return [relu_t(v) for v in x]
    return x if x > 0 else 0.0


def flatten(x):
    out = []
    for plane in x:
        for row in plane:
            out.extend(row)
    return out


def fc(x, weight, bias):
    out = []
    for o in range(len(weight)):
        acc = 0.0
        for i, v in enumerate(x):
            acc += float(v) * float(weight[o][i])
        out.append(_f32(acc + float(bias[o])))
    return out


def sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def evaluate_patch(patch_u8, layers, means):
    """patch_u8: 32x32x3 nested lists or array of uint8. Returns probability."""
    x = [[[float(patch_u8[i][j][c]) / 255.0 - float(means[c]) for j in range(32)]
          for i in range(32)] for c in range(3)]
    x = [[[_f32(v) for v in row] for row in plane] for plane in x]
    t = x
    for layer in layers:
        kind = layer["kind"]
        if kind == "conv3x3":
            t = conv3x3(t, layer["weight"], layer["bias"])
        elif kind == "relu":
            t = relu_t(t)
        elif kind == "maxpool2":
            t = maxpool2(t)
        elif kind == "flatten":
            t = flatten(t)
        elif kind == "fc":
            t = fc(t, layer["weight"], layer["bias"])
        elif kind == "sigmoid":
            t = sigmoid(t[0])
        else:
            raise ValueError(kind)
    return float(t)
