"""TEXW1 export/import, independent of the inference engine's code.

Layout per the normative spec (docs/texw1_format.md in the codec lab repo):
magic "TEXW1\\n", JSON header terminated by one NUL byte, then raw
little-endian float32 blobs in header order (weight then bias per layer).
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np
import torch

from .model import ARCHITECTURE, TextureNet, architecture_hash, export_layers


class ExportError(ValueError):
    pass


MAGIC = b"TEXW1\n"


def export_texw1(model: TextureNet, channel_means, out_path: str | Path,
                 metadata: dict | None = None) -> None:
    """Write the model as a TEXW1 file; refuses a mismatched layer stack."""
    try:
        layers = export_layers(model)
    except ValueError as exc:
        raise ExportError(str(exc)) from exc
    header = {
        "format": "TEXW1",
        "architecture": ARCHITECTURE,
        "architecture_sha256": architecture_hash(),
        "input": {"size": 32, "channels": 3,
                  "means": [float(m) for m in np.asarray(channel_means)]},
        "layers": [],
        "training": metadata or {},
    }
    blobs = []
    for layer in layers:
        entry = {"kind": layer["kind"]}
        module = layer.get("module")
        if module is not None:
            w = module.weight.detach().cpu().to(torch.float32).numpy()
            b = module.bias.detach().cpu().to(torch.float32).numpy()
            entry["weight_shape"] = list(w.shape)
            entry["bias_shape"] = list(b.shape)
            blobs.append(np.ascontiguousarray(w))
            blobs.append(np.ascontiguousarray(b))
        header["layers"].append(entry)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(f".{out_path.name}.tmp{os.getpid()}")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\0")
        for blob in blobs:
            fh.write(blob.astype("<f4").tobytes())
    os.replace(tmp, out_path)


def import_texw1(path: str | Path) -> tuple[TextureNet, np.ndarray, dict]:
    """Load a TEXW1 file back into a TextureNet; coefficients are bit-exact."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ExportError(f"{path}: bad magic")
    end = data.find(b"\0", len(MAGIC))
    if end < 0:
        raise ExportError(f"{path}: missing header terminator")
    header = json.loads(data[len(MAGIC):end].decode("utf-8"))
    if header.get("architecture") != ARCHITECTURE:
        raise ExportError(f"{path}: architecture mismatch")
    if header.get("architecture_sha256") != architecture_hash():
        raise ExportError(f"{path}: architecture hash mismatch")
    model = TextureNet()
    layers = export_layers(model)
    offset = end + 1
    for decl, layer in zip(header["layers"], layers):
        if decl["kind"] != layer["kind"]:
            raise ExportError(f"{path}: layer order mismatch")
        module = layer.get("module")
        if module is None:
            continue
        wshape = tuple(decl["weight_shape"])
        bshape = tuple(decl["bias_shape"])
        wn = int(np.prod(wshape))
        bn = int(np.prod(bshape))
        w = np.frombuffer(data, "<f4", wn, offset).reshape(wshape).copy()
        offset += wn * 4
        b = np.frombuffer(data, "<f4", bn, offset).reshape(bshape).copy()
        offset += bn * 4
        with torch.no_grad():
            module.weight.copy_(torch.from_numpy(w))
            module.bias.copy_(torch.from_numpy(b))
    means = np.asarray(header["input"]["means"], np.float64)
    return model, means, header.get("training", {})
