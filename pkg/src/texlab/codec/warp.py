"""Affine warping of reference frames for texture reconstruction.

Every destination pixel is sampled from the reference at its affine-mapped
position with bilinear interpolation; coordinates are absolute frame
coordinates, so warping two adjacent rectangles separately is bit-identical
to warping their union (no seams between texture blocks).
"""

from __future__ import annotations

import numpy as np

from ..core import Frame, Rect
from ..motion import AffineModel


def _bilinear(plane: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    """Sample a uint8 plane at float positions, clamping to the edges."""
    h, w = plane.shape
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    p = plane.astype(np.float64)
    val = (p[y0, x0] * (1 - fx) * (1 - fy)
           + p[y0, x1] * fx * (1 - fy)
           + p[y1, x0] * (1 - fx) * fy
           + p[y1, x1] * fx * fy)
    return np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8)


def warp_plane_region(plane: np.ndarray, model: AffineModel, rect: Rect, chroma: bool = False) -> np.ndarray:
    """Warp one plane region. Chroma planes use half-resolution coordinates:

    the linear part of the model is resolution independent and the
    translation is halved.
    """
    xs = np.arange(rect.x, rect.x + rect.w, dtype=np.float64)
    ys = np.arange(rect.y, rect.y + rect.h, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    tx, ty = (model.tx / 2.0, model.ty / 2.0) if chroma else (model.tx, model.ty)
    sx = model.a * gx + model.b * gy + tx
    sy = model.c * gx + model.d * gy + ty
    return _bilinear(plane, sx, sy)


def warp_block(ref: Frame, model: AffineModel, rect: Rect) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Warp a luma rect plus the co-sited chroma rect from a reference frame."""
    y = warp_plane_region(ref.y, model, rect, chroma=False)
    crect = Rect(rect.x // 2, rect.y // 2, rect.w // 2, rect.h // 2)
    u = warp_plane_region(ref.u, model, crect, chroma=True)
    v = warp_plane_region(ref.v, model, crect, chroma=True)
    return y, u, v


def warp_frame_region(ref_planes: tuple[np.ndarray, np.ndarray, np.ndarray],
                      model: AffineModel, rect: Rect) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Same as warp_block but on raw (y, u, v) planes (used inside the codec)."""
    yp, up, vp = ref_planes
    y = warp_plane_region(yp, model, rect, chroma=False)
    crect = Rect(rect.x // 2, rect.y // 2, rect.w // 2, rect.h // 2)
    u = warp_plane_region(up, model, crect, chroma=True)
    v = warp_plane_region(vp, model, crect, chroma=True)
    return y, u, v
