"""Bundled synthetic corpus: procedural textures vs rendered shape scenes.

Keeps training reproducible at desk scale with no external datasets: the
texture class is stochastic (filtered noise, stripes with jitter), the
non-texture class is structural (flat backgrounds with a few shapes and
smooth gradients).
"""

from __future__ import annotations

import numpy as np

from .datasets import NON_TEXTURE, TEXTURE, PatchDataset
from .model import PATCH


def _noise(rng: np.random.Generator, sigma: float, corr: float = 0.0) -> np.ndarray:
    img = rng.normal(0.5, sigma, (PATCH, PATCH))
    if corr > 0:
        k = np.exp(-0.5 * (np.arange(-2, 3) / corr) ** 2)
        k /= k.sum()
        img = np.apply_along_axis(lambda r: np.convolve(r, k, "same"), 1, img)
        img = np.apply_along_axis(lambda c: np.convolve(c, k, "same"), 0, img)
    return img


def _texture_patch(rng: np.random.Generator) -> np.ndarray:
    kind = rng.integers(0, 3)
    if kind == 0:      # white-ish noise
        img = _noise(rng, rng.uniform(0.15, 0.3))
    elif kind == 1:    # mildly correlated noise
        img = _noise(rng, rng.uniform(0.2, 0.35), corr=rng.uniform(0.5, 0.9))
    else:              # jittered stripes
        period = rng.uniform(2.0, 5.0)
        phase = rng.uniform(0, 2 * np.pi)
        yy, xx = np.mgrid[0:PATCH, 0:PATCH]
        angle = rng.uniform(0, np.pi)
        coord = xx * np.cos(angle) + yy * np.sin(angle)
        img = 0.5 + 0.3 * np.sin(2 * np.pi * coord / period + phase)
        img += rng.normal(0, 0.08, img.shape)
    tint = rng.uniform(-0.08, 0.08, 3)
    return np.clip(img[:, :, None] + tint[None, None, :], 0, 1)


def _scene_patch(rng: np.random.Generator) -> np.ndarray:
    base = rng.uniform(0.2, 0.8)
    img = np.full((PATCH, PATCH), base)
    gx, gy = rng.uniform(-0.3, 0.3, 2)
    yy, xx = np.mgrid[0:PATCH, 0:PATCH]
    img += gx * (xx / PATCH - 0.5) + gy * (yy / PATCH - 0.5)
    for _ in range(rng.integers(1, 4)):
        shape = rng.integers(0, 2)
        value = rng.uniform(0.1, 0.9)
        cy, cx = rng.uniform(6, PATCH - 6, 2)
        size = rng.uniform(4, 10)
        if shape == 0:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= size ** 2
        else:
            mask = (np.abs(yy - cy) <= size) & (np.abs(xx - cx) <= size * rng.uniform(0.5, 1.5))
        img[mask] = value
    tint = rng.uniform(-0.08, 0.08, 3)
    return np.clip(img[:, :, None] + tint[None, None, :], 0, 1)


def synthetic_corpus(n_texture: int = 100, n_scene: int = 100, seed: int = 0) -> PatchDataset:
    rng = np.random.default_rng(seed)
    patches = [_texture_patch(rng) for _ in range(n_texture)]
    patches += [_scene_patch(rng) for _ in range(n_scene)]
    labels = np.array([TEXTURE] * n_texture + [NON_TEXTURE] * n_scene, np.int64)
    return PatchDataset(np.stack(patches).astype(np.float32), labels)
