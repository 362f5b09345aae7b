"""Bitstream decoder; mirrors the encoder's write pass symbol for symbol.

Reconstruction uses the same prediction primitives as the encoder, so a
round trip reproduces the encoder's internal reconstruction bit for bit.
Corrupted texture motion parameters never abort the decode: they are
replaced with an identity model and surface as a CRC mismatch on the frame.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from ..core import Frame, Rect
from ..motion import AffineModel, NoModelError
from . import bitstream as bs
from . import predict as pr
from .entropy import (COEF_CLIP, ContextSet, Decoder, EOB_SYMBOL, ESCAPE_BITS,
                      MV_RANGE, BitstreamError)
from .transform import qp_to_step, reconstruct_residual, tile_size, zigzag_order


@dataclass
class DecodedFrame:
    display_index: int
    kind: str
    qp: int
    crc_ok: bool
    texture_enabled: bool
    model_substituted: bool


@dataclass
class DecodeResult:
    frames: list[Frame]
    header: bs.GlobalHeader
    frame_info: list[DecodedFrame] = field(default_factory=list)

    @property
    def all_crc_ok(self) -> bool:
        return all(f.crc_ok for f in self.frame_info)


def _relaxed_model(params: tuple[float, ...]) -> tuple[AffineModel, bool]:
    try:
        return AffineModel(*params), True
    except NoModelError:
        return AffineModel.identity(), False


class _FrameDecoder:
    def __init__(self, rec: bs.FrameRecord, header: bs.GlobalHeader,
                 recon_store: dict, mc_pad_store: dict):
        self.rec = rec
        self.width = header.width
        self.height = header.height
        self.cw = pr.coding_size(self.width)
        self.ch = pr.coding_size(self.height)
        self.step = qp_to_step(rec.qp)
        self.recon = (np.zeros((self.ch, self.cw), np.uint8),
                      np.zeros((self.ch // 2, self.cw // 2), np.uint8),
                      np.zeros((self.ch // 2, self.cw // 2), np.uint8))
        for r in rec.refs:
            if r not in recon_store:
                raise BitstreamError(f"frame {rec.display_index} references "
                                     f"undecoded frame {r}", rec.header_offset)
        self.ref_pads = [mc_pad_store[r] for r in rec.refs]
        self.models_ok = True
        self.tex_refs = tuple(ref for ref, _ in rec.tex_models)
        self.tex_models = {}
        for ref, params in rec.tex_models:
            if ref not in recon_store:
                raise BitstreamError(f"texture reference {ref} undecoded", rec.header_offset)
            model, ok = _relaxed_model(params)
            self.tex_models[ref] = model
            self.models_ok &= ok
        self.tex_views = {r: tuple(p[:self.height, :self.width] if i == 0
                                   else p[:self.height // 2, :self.width // 2]
                                   for i, p in enumerate(recon_store[r]))
                          for r in self.tex_refs}

    def decode(self) -> None:
        dec = Decoder(self.rec.payload)
        ctx = ContextSet(len(self.rec.refs))
        for sy in range(0, self.ch, pr.SB_SIZE):
            for sx in range(0, self.cw, pr.SB_SIZE):
                self._decode_node(dec, ctx, sx, sy, pr.SB_SIZE)

    def _decode_node(self, dec: Decoder, ctx: ContextSet, x: int, y: int, s: int) -> None:
        if s > 8 and dec.decode(ctx.split[s]):
            half = s // 2
            for cy in (y, y + half):
                for cx in (x, x + half):
                    self._decode_node(dec, ctx, cx, cy, half)
            return
        if self.rec.texture_enabled and s >= 32 and dec.decode(ctx.texture[s]):
            self._reconstruct_texture(x, y, s)
            return
        rect = Rect(x, y, s, s)
        if self.rec.refs and dec.decode(ctx.is_inter):
            ref_idx = dec.decode(ctx.ref_select) if len(self.rec.refs) == 2 else 0
            mv = tuple(dec.decode(ctx.mv[axis]) - MV_RANGE for axis in range(2))
            pred = pr.inter_predict(self.ref_pads[ref_idx], rect, mv)
        else:
            mode = "planar" if dec.decode(ctx.intra_mode) else "dc"
            pred = pr.intra_predict(self.recon, rect, mode)
        for plane_idx, plane_cls in ((0, "y"), (1, "c"), (2, "c")):
            blk = s if plane_idx == 0 else s // 2
            qtiles = read_coefs(dec, ctx, plane_cls, blk)
            res = reconstruct_residual(qtiles, blk, self.step)
            recon = np.clip(pred[plane_idx].astype(np.int32) + res, 0, 255).astype(np.uint8)
            px, py = (x, y) if plane_idx == 0 else (x // 2, y // 2)
            self.recon[plane_idx][py:py + blk, px:px + blk] = recon

    def _reconstruct_texture(self, x: int, y: int, s: int) -> None:
        rect = Rect(x, y, s, s)
        yb, ub, vb = pr.texture_predict(rect, self.tex_refs, self.tex_models, self.tex_views)
        self.recon[0][y:y + s, x:x + s] = yb
        self.recon[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = ub
        self.recon[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = vb


def read_coefs(dec: Decoder, ctx: ContextSet, plane_cls: str, blk: int) -> np.ndarray:
    t = tile_size(blk)
    g = blk // t
    n = t * t
    zz = zigzag_order(t)
    inv = np.empty_like(zz)
    inv[zz] = np.arange(n)
    qtiles = np.zeros((g * g, t, t), np.int32)
    for k in range(g * g):
        if not dec.decode(ctx.cbf[plane_cls]):
            continue
        flat = np.zeros(n, np.int64)
        i = 0
        while i < n:
            sym = dec.decode(ctx.coef[(plane_cls, ContextSet.coef_band(i))])
            if sym == EOB_SYMBOL:
                break
            v = sym - COEF_CLIP
            if abs(v) == COEF_CLIP:
                extra = dec.decode_bypass_bits(ESCAPE_BITS)
                v = (COEF_CLIP + extra) * (1 if v > 0 else -1)
            flat[i] = v
            i += 1
        tile = flat[inv].reshape(t, t)
        qtiles[k] = tile
    return qtiles


def decode_sequence(stream: bytes) -> DecodeResult:
    """Decode a TEXC1 stream into frames (display order) plus CRC verdicts."""
    r = bs.Reader(stream)
    header = bs.read_global_header(r)
    recon_store: dict[int, tuple] = {}
    mc_pad_store: dict[int, tuple] = {}
    infos = []
    for _ in range(header.n_frames):
        rec = bs.read_frame_record(r)
        fd = _FrameDecoder(rec, header, recon_store, mc_pad_store)
        fd.decode()
        recon_store[rec.display_index] = fd.recon
        mc_pad_store[rec.display_index] = tuple(pr.mc_ref_pad(p) for p in fd.recon)
        crop = (fd.recon[0][:header.height, :header.width],
                fd.recon[1][:header.height // 2, :header.width // 2],
                fd.recon[2][:header.height // 2, :header.width // 2])
        crc = zlib.crc32(crop[0].tobytes() + crop[1].tobytes() + crop[2].tobytes())
        infos.append(DecodedFrame(
            display_index=rec.display_index, kind=rec.kind.value, qp=rec.qp,
            crc_ok=(crc == rec.recon_crc) and fd.models_ok,
            texture_enabled=rec.texture_enabled,
            model_substituted=not fd.models_ok))
    if r.pos != len(stream):
        raise BitstreamError("trailing bytes after last frame", r.pos)
    missing = [d for d in range(header.n_frames) if d not in recon_store]
    if missing:
        raise BitstreamError(f"stream does not cover displays {missing}", r.pos)
    frames = []
    for d in range(header.n_frames):
        planes = recon_store[d]
        frames.append(Frame(y=planes[0][:header.height, :header.width].copy(),
                            u=planes[1][:header.height // 2, :header.width // 2].copy(),
                            v=planes[2][:header.height // 2, :header.width // 2].copy(),
                            index=d))
    return DecodeResult(frames=frames, header=header, frame_info=infos)


def verify_bitstream(stream: bytes) -> tuple[bool, DecodeResult]:
    """Decode and report whether every frame's reconstruction CRC matches."""
    result = decode_sequence(stream)
    return result.all_crc_ok, result
