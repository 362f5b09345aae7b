"""Shared domain types: frames, block grids, texture masks, color conversion.

All types are immutable after construction (backing numpy arrays are marked
read-only) so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BLOCK_SIZE = 32

# Label value for blocks outside any texture cluster. Cluster ids are >= 0.
NON_TEXTURE = -1

MIN_FRAME_DIM = 64


class DimensionError(ValueError):
    """Raised when image or frame dimensions violate a precondition."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle with top-left corner (x, y) and size (w, h)."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DimensionError(f"rect must have positive size, got {self}")


@dataclass(frozen=True)
class BlockGrid:
    """Grid of 32x32 non-overlapping blocks anchored at the frame origin.

    Remainder pixels on the right/bottom (when dimensions are not multiples
    of 32) belong to no block and are treated as non-texture everywhere.
    """

    width: int
    height: int
    block_size: int = BLOCK_SIZE

    @property
    def cols(self) -> int:
        return self.width // self.block_size

    @property
    def rows(self) -> int:
        return self.height // self.block_size

    def block_rect(self, r: int, c: int) -> Rect:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError(f"block ({r}, {c}) outside grid {self.rows}x{self.cols}")
        s = self.block_size
        return Rect(c * s, r * s, s, s)

    def block_at(self, x: float, y: float) -> tuple[int, int] | None:
        """Grid cell containing pixel (x, y), or None for remainder/outside."""
        if x < 0 or y < 0:
            return None
        r = int(y) // self.block_size
        c = int(x) // self.block_size
        if r >= self.rows or c >= self.cols:
            return None
        return (r, c)


@dataclass(frozen=True)
class Frame:
    """One 4:2:0 8-bit frame: full-size luma plus two half-size chroma planes."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    index: int = 0

    def __post_init__(self):
        h, w = self.y.shape
        if w < MIN_FRAME_DIM or h < MIN_FRAME_DIM:
            raise DimensionError(f"frame must be at least {MIN_FRAME_DIM}x{MIN_FRAME_DIM}, got {w}x{h}")
        if w % 2 or h % 2:
            raise DimensionError(f"4:2:0 frame dimensions must be even, got {w}x{h}")
        ch, cw = h // 2, w // 2
        for name, plane, shape in (("u", self.u, (ch, cw)), ("v", self.v, (ch, cw))):
            if plane.shape != shape:
                raise DimensionError(f"{name} plane is {plane.shape}, expected {shape}")
        for name in ("y", "u", "v"):
            plane = getattr(self, name)
            if plane.dtype != np.uint8:
                raise DimensionError(f"{name} plane must be uint8, got {plane.dtype}")
            object.__setattr__(self, name, _freeze(plane))

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def grid(self) -> BlockGrid:
        return BlockGrid(self.width, self.height)


@dataclass(frozen=True)
class TextureMask:
    """Per-block label grid for one frame.

    labels[r, c] is NON_TEXTURE or a texture cluster id >= 0. Pixels outside
    the grid (remainder strips) are implicitly non-texture.
    """

    grid: BlockGrid
    labels: np.ndarray
    frame_index: int = 0

    def __post_init__(self):
        expected = (self.grid.rows, self.grid.cols)
        if self.labels.shape != expected:
            raise DimensionError(f"labels shape {self.labels.shape} != grid {expected}")
        object.__setattr__(self, "labels", _freeze(self.labels.astype(np.int16)))

    @property
    def texture(self) -> np.ndarray:
        """Boolean rows x cols array, True where the block is texture."""
        return self.labels >= 0

    def texture_block_count(self) -> int:
        return int(np.count_nonzero(self.labels >= 0))

    def is_texture_at(self, x: float, y: float) -> bool:
        """True iff pixel (x, y) lies inside a texture block of the grid."""
        cell = self.grid.block_at(x, y)
        if cell is None:
            return False
        return bool(self.labels[cell] >= 0)

    def with_labels(self, labels: np.ndarray) -> "TextureMask":
        return TextureMask(self.grid, labels, self.frame_index)


def empty_mask(grid: BlockGrid, frame_index: int = 0) -> TextureMask:
    return TextureMask(grid, np.full((grid.rows, grid.cols), NON_TEXTURE, np.int16), frame_index)


# ---------------------------------------------------------------------------
# Color conversion (BT.601 full range)
# ---------------------------------------------------------------------------
# Chosen rounding is floor(x + 0.5) ("round half up") applied once per output
# sample, so a per-pixel scalar reference reproduces every value exactly.

_KR, _KG, _KB = 0.299, 0.587, 0.114


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _clip_u8(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0, 255).astype(np.uint8)


def rgb_to_yuv420(rgb: np.ndarray, index: int = 0) -> Frame:
    """Convert an HxWx3 8-bit RGB image to a 4:2:0 Frame.

    Full-range BT.601; chroma planes are 2x2 box-filtered averages of the
    full-resolution chroma signal, rounded once.
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DimensionError(f"expected HxWx3 RGB array, got shape {rgb.shape}")
    h, w = rgb.shape[:2]
    if w % 2 or h % 2:
        raise DimensionError(f"rgb image dimensions must be even, got {w}x{h}")
    r = rgb[:, :, 0].astype(np.float64)
    g = rgb[:, :, 1].astype(np.float64)
    b = rgb[:, :, 2].astype(np.float64)
    yf = _KR * r + _KG * g + _KB * b
    uf = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    vf = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    y = _clip_u8(_round_half_up(yf))
    u = _clip_u8(_round_half_up(_box2x2(uf)))
    v = _clip_u8(_round_half_up(_box2x2(vf)))
    return Frame(y=y, u=u, v=v, index=index)


def _box2x2(plane: np.ndarray) -> np.ndarray:
    return (plane[0::2, 0::2] + plane[0::2, 1::2] + plane[1::2, 0::2] + plane[1::2, 1::2]) / 4.0


def yuv420_to_rgb(frame: Frame) -> np.ndarray:
    """Inverse conversion; chroma is upsampled by sample replication."""
    y = frame.y.astype(np.float64)
    u = np.repeat(np.repeat(frame.u, 2, axis=0), 2, axis=1).astype(np.float64) - 128.0
    v = np.repeat(np.repeat(frame.v, 2, axis=0), 2, axis=1).astype(np.float64) - 128.0
    r = y + 1.402 * v
    g = y - 0.344136 * u - 0.714136 * v
    b = y + 1.772 * u
    return np.stack([_clip_u8(_round_half_up(c)) for c in (r, g, b)], axis=2)


def frame_from_planes(y: np.ndarray, u: np.ndarray, v: np.ndarray, index: int = 0) -> Frame:
    return Frame(y=y.astype(np.uint8), u=u.astype(np.uint8), v=v.astype(np.uint8), index=index)
