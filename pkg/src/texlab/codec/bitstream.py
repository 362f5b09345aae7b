"""TEXC1 bitstream container: global header plus per-frame records.

Layout is normative and documented in docs/bitstream.md. All integers are
little-endian; affine texture motion parameters travel as 32-bit floats in
the frame header; each frame record ends with a CRC32 of its reconstruction
(cropped to the true frame size, planes Y then U then V).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .entropy import BitstreamError
from .plan import FrameKind

MAGIC = b"TEXC1"
VERSION = 1
FRAME_SYNC = 0xF7

_KIND_CODE = {FrameKind.GOLDEN: 0, FrameKind.ALTREF: 1, FrameKind.INTER: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}

STRUCTURE_PYRAMID = 0
STRUCTURE_FLAT = 1


@dataclass(frozen=True)
class GlobalHeader:
    width: int
    height: int
    n_frames: int
    structure: int
    interval: int


@dataclass
class FrameRecord:
    display_index: int
    kind: FrameKind
    qp: int
    refs: tuple[int, ...]
    texture_enabled: bool
    tex_models: tuple[tuple[int, tuple[float, ...]], ...]  # (ref display, 6 params)
    payload: bytes
    recon_crc: int
    header_offset: int = 0  # filled by the reader


def write_global_header(width: int, height: int, n_frames: int, structure: int, interval: int) -> bytes:
    return MAGIC + struct.pack("<BIIIBBH", VERSION, width, height, n_frames, structure, interval, 0)


def write_frame_record(rec: FrameRecord) -> bytes:
    out = bytearray()
    out.append(FRAME_SYNC)
    out += struct.pack("<IBB", rec.display_index, _KIND_CODE[rec.kind], rec.qp)
    out.append(len(rec.refs))
    for r in rec.refs:
        out += struct.pack("<I", r)
    out.append(1 if rec.texture_enabled else 0)
    if rec.texture_enabled:
        out.append(len(rec.tex_models))
        for ref, params in rec.tex_models:
            out += struct.pack("<I", ref)
            out += struct.pack("<6f", *params)
    out += struct.pack("<I", len(rec.payload))
    out += rec.payload
    out += struct.pack("<I", rec.recon_crc)
    return bytes(out)


class Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def _need(self, n: int) -> None:
        if self.pos + n > len(self.data):
            raise BitstreamError("truncated stream", self.pos)

    def take(self, n: int) -> bytes:
        self._need(n)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def read_global_header(r: Reader) -> GlobalHeader:
    if r.take(len(MAGIC)) != MAGIC:
        raise BitstreamError("bad magic, not a TEXC1 stream", 0)
    version = r.u8()
    if version != VERSION:
        raise BitstreamError(f"unsupported version {version}", r.pos - 1)
    width, height, n_frames = r.u32(), r.u32(), r.u32()
    structure = r.u8()
    interval = r.u8()
    r.take(2)  # reserved
    if width == 0 or height == 0 or n_frames == 0:
        raise BitstreamError("empty dimensions in global header", r.pos)
    return GlobalHeader(width, height, n_frames, structure, interval)


def read_frame_record(r: Reader) -> FrameRecord:
    start = r.pos
    if r.u8() != FRAME_SYNC:
        raise BitstreamError("missing frame sync byte", start)
    display_index, kind_code, qp = struct.unpack("<IBB", r.take(6))
    if kind_code not in _CODE_KIND:
        raise BitstreamError(f"unknown frame kind {kind_code}", start)
    n_refs = r.u8()
    if n_refs > 2:
        raise BitstreamError(f"too many references ({n_refs})", r.pos - 1)
    refs = tuple(r.u32() for _ in range(n_refs))
    texture_enabled = bool(r.u8())
    tex_models: list[tuple[int, tuple[float, ...]]] = []
    if texture_enabled:
        n_tex = r.u8()
        if n_tex == 0 or n_tex > 2:
            raise BitstreamError(f"bad texture reference count ({n_tex})", r.pos - 1)
        for _ in range(n_tex):
            ref = r.u32()
            params = struct.unpack("<6f", r.take(24))
            tex_models.append((ref, params))
    payload_len = r.u32()
    payload = r.take(payload_len)
    crc = r.u32()
    return FrameRecord(display_index, _CODE_KIND[kind_code], qp, refs, texture_enabled,
                       tuple(tex_models), payload, crc, header_offset=start)
