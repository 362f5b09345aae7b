"""Ingestion and artifact IO: PNG directories, raw YUV420, PGM masks, overlays.

All writes go through a temp-file-plus-rename so partially written artifacts
never appear under their final name.
"""

from __future__ import annotations

import json
import os
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Frame, TextureMask, BlockGrid, frame_from_planes, rgb_to_yuv420


class IngestError(ValueError):
    pass


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2) + "\n")


_NUM_RE = re.compile(r"(\d+)")


def _numeric_key(name: str):
    parts = _NUM_RE.split(name)
    return tuple(int(p) if p.isdigit() else p for p in parts)


def load_png_dir(path: str | Path) -> list[np.ndarray]:
    """All PNG frames in a directory, sorted by the numbers in their names."""
    path = Path(path)
    if not path.is_dir():
        raise IngestError(f"not a directory: {path}")
    files = sorted((p for p in path.iterdir() if p.suffix.lower() == ".png"),
                   key=lambda p: _numeric_key(p.name))
    if not files:
        raise IngestError(f"no .png frames in {path}")
    frames = []
    for p in files:
        with Image.open(p) as img:
            frames.append(np.asarray(img.convert("RGB")))
    return frames


def load_yuv420(path: str | Path, width: int, height: int) -> list[Frame]:
    """Raw planar I420 file; frame size comes from the sidecar dimensions."""
    data = Path(path).read_bytes()
    ysz = width * height
    csz = (width // 2) * (height // 2)
    frame_bytes = ysz + 2 * csz
    if len(data) == 0 or len(data) % frame_bytes:
        raise IngestError(f"{path}: size {len(data)} not a multiple of "
                          f"{frame_bytes} bytes per {width}x{height} frame")
    frames = []
    for i in range(len(data) // frame_bytes):
        off = i * frame_bytes
        y = np.frombuffer(data, np.uint8, ysz, off).reshape(height, width)
        u = np.frombuffer(data, np.uint8, csz, off + ysz).reshape(height // 2, width // 2)
        v = np.frombuffer(data, np.uint8, csz, off + ysz + csz).reshape(height // 2, width // 2)
        frames.append(frame_from_planes(y, u, v, index=i))
    return frames


def ingest(path: str | Path, fmt: str, size: tuple[int, int] | None = None
           ) -> tuple[list[Frame], list[np.ndarray] | None]:
    """Return (yuv frames, rgb sources or None) for either input format."""
    if fmt == "png-dir":
        rgbs = load_png_dir(path)
        frames = [rgb_to_yuv420(rgb, index=i) for i, rgb in enumerate(rgbs)]
        return frames, rgbs
    if fmt == "yuv420":
        if size is None:
            raise IngestError("yuv420 input needs --size WxH")
        frames = load_yuv420(path, size[0], size[1])
        return frames, None
    raise IngestError(f"unknown input format {fmt!r}")


# ---------------------------------------------------------------------------
# Mask serialization
# ---------------------------------------------------------------------------
# PGM value 0 marks non-texture; value 1+k marks texture cluster k.

def save_mask_pgm(mask: TextureMask, path: str | Path) -> None:
    values = (mask.labels.astype(np.int32) + 1).clip(0, 255).astype(np.uint8)
    header = f"P5\n{values.shape[1]} {values.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + values.tobytes())


def load_mask_pgm(path: str | Path, frame_index: int = 0) -> TextureMask:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+255\s", data)
    if not m:
        raise IngestError(f"{path}: not an 8-bit PGM mask")
    cols, rows = int(m.group(1)), int(m.group(2))
    raw = np.frombuffer(data, np.uint8, rows * cols, m.end()).reshape(rows, cols)
    labels = raw.astype(np.int16) - 1
    return TextureMask(BlockGrid(cols * 32, rows * 32), labels, frame_index)


_CLUSTER_TINTS = np.array([
    (255, 64, 64), (64, 255, 64), (64, 128, 255), (255, 224, 64),
    (224, 64, 255), (64, 255, 224), (255, 128, 32), (128, 128, 255),
], np.float64)


def save_overlay_png(rgb: np.ndarray, mask: TextureMask, path: str | Path, alpha: float = 0.45) -> None:
    """Frame with texture blocks tinted per cluster, for visual inspection."""
    out = rgb.astype(np.float64).copy()
    s = mask.grid.block_size
    for r in range(mask.grid.rows):
        for c in range(mask.grid.cols):
            lab = int(mask.labels[r, c])
            if lab < 0:
                continue
            tint = _CLUSTER_TINTS[lab % len(_CLUSTER_TINTS)]
            region = out[r * s:(r + 1) * s, c * s:(c + 1) * s]
            region *= (1.0 - alpha)
            region += alpha * tint
    img = Image.fromarray(out.clip(0, 255).astype(np.uint8))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    img.save(tmp, format="PNG")
    os.replace(tmp, path)
