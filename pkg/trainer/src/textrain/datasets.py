"""Patch extraction: multi-resolution texture crops, downsampled scene images."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .model import PATCH

TEXTURE = 1
NON_TEXTURE = 0

# crop pyramid for texture sources: full 512, four 256 tiles, sixteen 128 tiles
CROP_SCALES = (512, 256, 128)


@dataclass
class PatchDataset:
    patches: np.ndarray          # N x 32 x 32 x 3, float32 in [0, 1]
    labels: np.ndarray           # N, int64 (1 texture / 0 non-texture)
    train_idx: np.ndarray = field(default=None)
    val_idx: np.ndarray = field(default=None)
    skipped: int = 0

    def __post_init__(self):
        if self.patches.ndim != 4 or self.patches.shape[1:] != (PATCH, PATCH, 3):
            raise ValueError(f"patches must be Nx{PATCH}x{PATCH}x3, got {self.patches.shape}")
        if len(self.labels) != len(self.patches):
            raise ValueError("labels incomplete")

    @property
    def class_counts(self) -> tuple[int, int]:
        """(non-texture count, texture count)."""
        return (int((self.labels == NON_TEXTURE).sum()), int((self.labels == TEXTURE).sum()))

    def split(self, val_fraction: float = 0.2, seed: int = 0) -> "PatchDataset":
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(self.patches))
        n_val = max(1, int(len(order) * val_fraction))
        self.val_idx = np.sort(order[:n_val])
        self.train_idx = np.sort(order[n_val:])
        assert not set(self.train_idx) & set(self.val_idx)
        return self

    def channel_means(self) -> np.ndarray:
        idx = self.train_idx if self.train_idx is not None else np.arange(len(self.patches))
        return self.patches[idx].mean(axis=(0, 1, 2)).astype(np.float64)


def concat(a: PatchDataset, b: PatchDataset) -> PatchDataset:
    return PatchDataset(np.concatenate([a.patches, b.patches]),
                        np.concatenate([a.labels, b.labels]),
                        skipped=a.skipped + b.skipped)


def area_downsample(img: np.ndarray, size: int = PATCH) -> np.ndarray:
    """Box-average downsample to size x size (expects square multiples)."""
    h, w = img.shape[:2]
    fy, fx = h // size, w // size
    cropped = img[:fy * size, :fx * size].astype(np.float64)
    return cropped.reshape(size, fy, size, fx, 3).mean(axis=(1, 3))


def _load_rgb(path: Path) -> np.ndarray | None:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except (UnidentifiedImageError, OSError):
        return None


def texture_patches_from_image(rgb: np.ndarray) -> list[np.ndarray]:
    """Multi-resolution crops: 1x512 + 4x256 + 16x128, each downsampled to 32."""
    h, w = rgb.shape[:2]
    if h < 512 or w < 512:
        return []
    base = rgb[:512, :512]
    out = []
    for scale in CROP_SCALES:
        for y in range(0, 512, scale):
            for x in range(0, 512, scale):
                out.append(area_downsample(base[y:y + scale, x:x + scale]) / 255.0)
    return out


def prepare_texture_patches(texture_dir: str | Path) -> PatchDataset:
    patches = []
    skipped = 0
    for path in sorted(Path(texture_dir).iterdir()):
        if path.is_dir():
            continue
        rgb = _load_rgb(path)
        if rgb is None:
            skipped += 1
            continue
        crops = texture_patches_from_image(rgb)
        if not crops:
            warnings.warn(f"{path.name}: smaller than 512x512, skipped")
            skipped += 1
            continue
        patches.extend(crops)
    if not patches:
        raise ValueError(f"no usable texture images in {texture_dir}")
    arr = np.stack(patches).astype(np.float32)
    return PatchDataset(arr, np.full(len(arr), TEXTURE, np.int64), skipped=skipped)


def nontexture_patch_from_image(rgb: np.ndarray) -> np.ndarray:
    """Center-crop to square, then downsample the whole view to 32x32."""
    h, w = rgb.shape[:2]
    side = min(h, w)
    side = (side // PATCH) * PATCH
    if side < PATCH:
        raise ValueError("image smaller than one patch")
    y0 = (h - side) // 2
    x0 = (w - side) // 2
    return area_downsample(rgb[y0:y0 + side, x0:x0 + side]) / 255.0


def prepare_nontexture_patches(scene_dir: str | Path) -> PatchDataset:
    patches = []
    skipped = 0
    entries = sorted(Path(scene_dir).iterdir())
    for path in entries:
        if path.is_dir():
            continue
        rgb = _load_rgb(path)
        if rgb is None:
            skipped += 1
            continue
        try:
            patches.append(nontexture_patch_from_image(rgb))
        except ValueError:
            warnings.warn(f"{path.name}: too small, skipped")
            skipped += 1
    if not patches:
        raise ValueError(f"no usable scene images in {scene_dir}")
    arr = np.stack(patches).astype(np.float32)
    return PatchDataset(arr, np.full(len(arr), NON_TEXTURE, np.int64), skipped=skipped)
