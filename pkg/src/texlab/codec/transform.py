"""Block transforms and uniform quantization for the conventional path.

Residual blocks are tiled into NxN type-II DCTs (8x8 for luma-sized tiles,
4x4 for the chroma of 8-pixel luma nodes), quantized with a uniform
dead-zone-free quantizer q = round(coef / step), and reconstructed as
q * step. Quantizer step doubles every 8 QP units.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

QP_VALUES = (16, 24, 32, 40)
LAMBDA_SCALE = 0.85


def qp_to_step(qp: int) -> float:
    """Monotone QP-to-step mapping: step = 2^(qp/8 + 1)."""
    if not (0 <= qp <= 63):
        raise ValueError(f"qp must be in [0, 63], got {qp}")
    return float(2.0 ** (qp / 8.0 + 1.0))


def rd_lambda(qp: int) -> float:
    step = qp_to_step(qp)
    return LAMBDA_SCALE * step * step


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal type-II DCT matrix of size n."""
    k = np.arange(n)[:, None].astype(np.float64)
    m = np.arange(n)[None, :].astype(np.float64)
    mat = np.cos((2 * m + 1) * k * np.pi / (2 * n)) * np.sqrt(2.0 / n)
    mat[0] *= np.sqrt(0.5)
    return mat


def dct2(block: np.ndarray) -> np.ndarray:
    d = dct_matrix(block.shape[0])
    return d @ block.astype(np.float64) @ d.T


def idct2(coef: np.ndarray) -> np.ndarray:
    d = dct_matrix(coef.shape[0])
    return d.T @ coef.astype(np.float64) @ d


def quantize(coef: np.ndarray, step: float) -> np.ndarray:
    """Uniform quantization with round-half-away-from-zero."""
    scaled = coef / step
    return np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)


def dequantize(q: np.ndarray, step: float) -> np.ndarray:
    return q.astype(np.float64) * step


def tile_size(n: int) -> int:
    """Transform tile edge for an n-pixel plane block: 8 when divisible, else 4."""
    if n % 8 == 0:
        return 8
    if n % 4 == 0:
        return 4
    raise ValueError(f"block edge {n} not coverable by 8x8 or 4x4 tiles")


def split_tiles(block: np.ndarray) -> tuple[int, np.ndarray]:
    """Reshape an SxS block into (k, t, t) transform tiles in raster order."""
    s = block.shape[0]
    t = tile_size(s)
    g = s // t
    tiles = block.reshape(g, t, g, t).transpose(0, 2, 1, 3).reshape(g * g, t, t)
    return t, tiles


def join_tiles(tiles: np.ndarray, s: int) -> np.ndarray:
    t = tiles.shape[1]
    g = s // t
    return tiles.reshape(g, g, t, t).transpose(0, 2, 1, 3).reshape(s, s)


def transform_quantize(residual: np.ndarray, step: float) -> np.ndarray:
    """Residual block -> quantized coefficient tiles (k, t, t), int32."""
    return forward_quantize(residual, step)[0]


def forward_quantize(residual: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
    """Quantized tiles plus the unquantized coefficients.

    The coefficient pair supports transform-domain distortion: the DCT is
    orthonormal, so sum((dequant - coef)^2) equals the spatial squared error
    before rounding and clipping.
    """
    t, tiles = split_tiles(residual.astype(np.float64))
    d = dct_matrix(t)
    coefs = np.einsum("ij,njk,lk->nil", d, tiles, d)
    return quantize(coefs, step).astype(np.int32), coefs


def reconstruct_residual(qtiles: np.ndarray, s: int, step: float) -> np.ndarray:
    """Quantized tiles -> spatial residual, rounded half away from zero."""
    t = qtiles.shape[1]
    d = dct_matrix(t)
    coefs = dequantize(qtiles, step)
    spatial = np.einsum("ji,njk,kl->nil", d, coefs, d)
    res = join_tiles(spatial, s)
    return np.sign(res) * np.floor(np.abs(res) + 0.5)


@lru_cache(maxsize=None)
def zigzag_order(n: int) -> np.ndarray:
    """Flat indices of an NxN tile in zigzag scan order."""
    idx = sorted(((r + c, (c if (r + c) % 2 == 0 else r), r, c)
                  for r in range(n) for c in range(n)))
    return np.array([r * n + c for (_, _, r, c) in idx], np.int64)
