"""Prediction primitives shared by encoder and decoder.

Everything here is pure integer (or fixed, reproducible float) arithmetic on
reconstruction buffers, so running the same calls in the same order on both
sides yields bit-identical frames.
"""

from __future__ import annotations

import numpy as np

from ..core import Rect
from ..motion import AffineModel
from .warp import warp_frame_region

SB_SIZE = 64
MIN_BLOCK = 8
SEARCH_RANGE = 24        # integer full-search radius, luma pixels
REF_PAD = 32             # reference margin for out-of-frame motion


def coding_size(n: int) -> int:
    return (n + SB_SIZE - 1) // SB_SIZE * SB_SIZE


def pad_plane(plane: np.ndarray, ch: int, cw: int) -> np.ndarray:
    h, w = plane.shape
    return np.pad(plane, ((0, ch - h), (0, cw - w)), mode="edge")


def mc_ref_pad(plane: np.ndarray) -> np.ndarray:
    return np.pad(plane, REF_PAD, mode="edge")


def mc_predict(ref_pad: np.ndarray, x: int, y: int, w: int, h: int,
               qx: int, qy: int) -> np.ndarray:
    """Motion-compensated block at quarter-pel offset (qx, qy) from (x, y).

    Coordinates are in the plane's own pixel units; ref_pad carries a
    REF_PAD margin. Bilinear weights are quarter-pel exact integers with
    round-half-up, so encoder and decoder agree bit for bit.
    """
    ix, fx = qx >> 2, qx & 3
    iy, fy = qy >> 2, qy & 3
    x0 = x + ix + REF_PAD
    y0 = y + iy + REF_PAD
    p00 = ref_pad[y0:y0 + h, x0:x0 + w].astype(np.int64)
    if fx == 0 and fy == 0:
        return p00.astype(np.uint8)
    p01 = ref_pad[y0:y0 + h, x0 + 1:x0 + 1 + w].astype(np.int64)
    p10 = ref_pad[y0 + 1:y0 + 1 + h, x0:x0 + w].astype(np.int64)
    p11 = ref_pad[y0 + 1:y0 + 1 + h, x0 + 1:x0 + 1 + w].astype(np.int64)
    top = (4 - fx) * p00 + fx * p01
    bot = (4 - fx) * p10 + fx * p11
    return (((4 - fy) * top + fy * bot + 8) >> 4).astype(np.uint8)


def inter_predict(ref_pads: tuple[np.ndarray, np.ndarray, np.ndarray],
                  rect: Rect, mv_hp: tuple[int, int]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predict one luma rect + chroma from half-pel motion (dy, dx)."""
    dy, dx = mv_hp
    y = mc_predict(ref_pads[0], rect.x, rect.y, rect.w, rect.h, dx * 2, dy * 2)
    u = mc_predict(ref_pads[1], rect.x // 2, rect.y // 2, rect.w // 2, rect.h // 2, dx, dy)
    v = mc_predict(ref_pads[2], rect.x // 2, rect.y // 2, rect.w // 2, rect.h // 2, dx, dy)
    return y, u, v


def intra_dc(recon: np.ndarray, x: int, y: int, s: int) -> np.ndarray:
    """DC prediction from the reconstructed top row and left column."""
    total = 0
    count = 0
    if y > 0:
        total += int(recon[y - 1, x:x + s].astype(np.int64).sum())
        count += s
    if x > 0:
        total += int(recon[y:y + s, x - 1].astype(np.int64).sum())
        count += s
    dc = (total + count // 2) // count if count else 128
    return np.full((s, s), dc, np.uint8)


def intra_planar(recon: np.ndarray, x: int, y: int, s: int) -> np.ndarray:
    """Planar prediction: linear blend of top row and left column ramps."""
    top = recon[y - 1, x:x + s].astype(np.int64) if y > 0 else np.full(s, 128, np.int64)
    left = recon[y:y + s, x - 1].astype(np.int64) if x > 0 else np.full(s, 128, np.int64)
    tr = top[s - 1]
    bl = left[s - 1]
    i = np.arange(s, dtype=np.int64)[:, None]
    j = np.arange(s, dtype=np.int64)[None, :]
    val = (s - 1 - i) * top[None, :] + (i + 1) * bl + (s - 1 - j) * left[:, None] + (j + 1) * tr + s
    return (val // (2 * s)).astype(np.uint8)


def intra_predict(recon_planes: tuple[np.ndarray, np.ndarray, np.ndarray],
                  rect: Rect, mode: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    fn = intra_dc if mode == "dc" else intra_planar
    y = fn(recon_planes[0], rect.x, rect.y, rect.w)
    u = fn(recon_planes[1], rect.x // 2, rect.y // 2, rect.w // 2)
    v = fn(recon_planes[2], rect.x // 2, rect.y // 2, rect.w // 2)
    return y, u, v


def texture_predict(rect: Rect,
                    tex_refs: tuple[int, ...],
                    models: dict[int, AffineModel],
                    true_views: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]],
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Texture-mode reconstruction: warp each reference, average when compound.

    The average rounds half away from zero; the residual is identically
    zero, so this is the final reconstruction.
    """
    warped = [warp_frame_region(true_views[r], models[r], rect) for r in tex_refs]
    if len(warped) == 1:
        return warped[0]
    out = []
    for a, b in zip(warped[0], warped[1]):
        out.append(((a.astype(np.uint16) + b.astype(np.uint16) + 1) >> 1).astype(np.uint8))
    return tuple(out)
