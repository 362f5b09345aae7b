"""Shared fixtures: classifier weights, golden patches, synthetic clips.

Clips are generated procedurally with fixed seeds so every run sees
identical pixel data. The standard scene is a noise band (texture) over a
smooth gradient floor (non-texture), optionally panning horizontally with
an independently moving disc in the floor region.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from texlab.analyzer import load_weights
from texlab.core import Frame, rgb_to_yuv420

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def weights():
    return load_weights(str(FIXTURES / "fixture.texw1"))


@pytest.fixture(scope="session")
def golden_patches():
    return np.load(FIXTURES / "golden_patches.npz")["patches"]


@pytest.fixture(scope="session")
def golden_probs():
    return json.loads((FIXTURES / "golden_probs.json").read_text())["probabilities"]


def make_clip(n_frames: int, width: int, height: int, *,
              pan: float = 0.0, band_rows: int | None = None,
              disc: bool = False, intruder: bool = False,
              noise_sigma: float = 55.0, seed: int = 99) -> list[np.ndarray]:
    """RGB frames: panning noise band on top, smooth gradient floor below.

    The band occupies full 32-pixel block rows so the texture mask is stable.
    The optional disc moves along the floor with its own motion; the optional
    intruder is a small noise patch inside the band moving against the band's
    flow, which the block classifier cannot separate from the texture.
    """
    rng = np.random.default_rng(seed)
    if band_rows is None:
        band_rows = (height * 3 // 4) // 32 * 32
    max_shift = int(np.ceil(abs(pan) * n_frames)) + 2
    canvas = np.clip(rng.normal(128, noise_sigma, (band_rows, width + 2 * max_shift)), 0, 255)
    patch = np.clip(rng.normal(70, 80, (20, 20)), 0, 255)

    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height - band_rows, dtype=np.float64)
    floor = 60.0 + 90.0 * (xs[None, :] / max(width - 1, 1)) + 40.0 * (ys[:, None] / max(height - band_rows - 1, 1))

    frames = []
    for t in range(n_frames):
        offset = max_shift + pan * t
        i0 = int(np.floor(offset))
        frac = offset - i0
        a = canvas[:, i0:i0 + width]
        b = canvas[:, i0 + 1:i0 + 1 + width]
        band = (1.0 - frac) * a + frac * b

        img = np.empty((height, width), np.float64)
        img[:band_rows] = band
        img[band_rows:] = floor
        if intruder:
            px = min(16 + 2 * t, width - 28)
            py = band_rows // 2 - 10
            img[py:py + 20, px:px + 20] = patch
        if disc:
            cy = band_rows + (height - band_rows) // 2
            cx = (width // 4 + 2 * t) % width
            yy, xx = np.mgrid[0:height, 0:width]
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= 7 ** 2
            img[mask] = 30.0
        rgb = np.repeat(img.round().clip(0, 255).astype(np.uint8)[:, :, None], 3, axis=2)
        frames.append(rgb)
    return frames


def to_frames(rgbs: list[np.ndarray]) -> list[Frame]:
    return [rgb_to_yuv420(rgb, index=i) for i, rgb in enumerate(rgbs)]


@pytest.fixture(scope="session")
def static_clip_rgb():
    return make_clip(10, 128, 128, pan=0.0, seed=401)


@pytest.fixture(scope="session")
def static_clip(static_clip_rgb):
    return to_frames(static_clip_rgb)


@pytest.fixture(scope="session")
def pan_clip_rgb():
    return make_clip(12, 128, 128, pan=1.5, disc=True, seed=402)


@pytest.fixture(scope="session")
def pan_clip(pan_clip_rgb):
    return to_frames(pan_clip_rgb)


@pytest.fixture(scope="session")
def pan_masks(pan_clip, pan_clip_rgb, weights):
    from texlab.analyzer import segment_frame
    from texlab.refine import refine_sequence
    raw = [segment_frame(rgb, weights, frame_index=i) for i, rgb in enumerate(pan_clip_rgb)]
    return refine_sequence(pan_clip, raw)


@pytest.fixture(scope="session")
def static_masks(static_clip, static_clip_rgb, weights):
    from texlab.analyzer import segment_frame
    from texlab.refine import refine_sequence
    raw = [segment_frame(rgb, weights, frame_index=i) for i, rgb in enumerate(static_clip_rgb)]
    return refine_sequence(static_clip, raw)
