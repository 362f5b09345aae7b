"""Adaptive arithmetic coding and the static rate model used for RD search.

The payload coder is a 32-bit arithmetic coder over adaptive frequency
tables (one table per syntax context). Rate-distortion decisions do not use
the live coder state: they use a fixed, order-independent bit estimate
(exp-Golomb-style lengths, documented in docs/bitstream.md) so any decision
can be re-checked exactly after the fact.
"""

from __future__ import annotations

import math

STATE_BITS = 32
MAX_RANGE = 1 << STATE_BITS
MIN_RANGE = (MAX_RANGE >> 2) + 2
MASK = MAX_RANGE - 1
TOP_MASK = MAX_RANGE >> 1
SECOND_MASK = TOP_MASK >> 1

ADAPT_INCREMENT = 32
ADAPT_LIMIT = 1 << 13  # keeps totals well under the coder's MAX_TOTAL


class BitstreamError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message if offset is None else f"{message} (byte offset {offset})")
        self.offset = offset


class AdaptiveTable:
    """Frequency table over a small alphabet; counts halve at ADAPT_LIMIT."""

    __slots__ = ("counts", "total")

    def __init__(self, n: int):
        self.counts = [1] * n
        self.total = n

    def cum(self, s: int) -> int:
        return sum(self.counts[:s])

    def find(self, value: int) -> tuple[int, int, int]:
        """Symbol whose cumulative interval contains value; returns (s, lo, hi)."""
        lo = 0
        for s, c in enumerate(self.counts):
            if value < lo + c:
                return s, lo, lo + c
            lo += c
        raise BitstreamError("arithmetic decoder state out of range")

    def update(self, s: int) -> None:
        self.counts[s] += ADAPT_INCREMENT
        self.total += ADAPT_INCREMENT
        if self.total >= ADAPT_LIMIT:
            total = 0
            for i, c in enumerate(self.counts):
                c = (c + 1) >> 1
                self.counts[i] = c
                total += c
            self.total = total


class _CoderBase:
    def __init__(self):
        self.low = 0
        self.high = MASK

    def _narrow(self, cum_lo: int, cum_hi: int, total: int) -> None:
        span = self.high - self.low + 1
        self.high = self.low + cum_hi * span // total - 1
        self.low = self.low + cum_lo * span // total
        while ((self.low ^ self.high) & TOP_MASK) == 0:
            self._shift()
            self.low = (self.low << 1) & MASK
            self.high = ((self.high << 1) & MASK) | 1
        while (self.low & ~self.high & SECOND_MASK) != 0:
            self._underflow()
            self.low = (self.low << 1) & (MASK >> 1)
            self.high = ((self.high << 1) & (MASK >> 1)) | TOP_MASK | 1


class Encoder(_CoderBase):
    def __init__(self):
        super().__init__()
        self._bits: list[int] = []
        self._pending = 0

    def encode(self, table: AdaptiveTable, symbol: int) -> None:
        lo = table.cum(symbol)
        self._narrow(lo, lo + table.counts[symbol], table.total)
        table.update(symbol)

    def encode_bypass(self, bit: int) -> None:
        self._narrow(bit, bit + 1, 2)

    def encode_bypass_bits(self, value: int, nbits: int) -> None:
        for i in range(nbits - 1, -1, -1):
            self.encode_bypass((value >> i) & 1)

    def _shift(self) -> None:
        bit = self.low >> (STATE_BITS - 1)
        self._bits.append(bit)
        self._bits.extend([bit ^ 1] * self._pending)
        self._pending = 0

    def _underflow(self) -> None:
        self._pending += 1

    def finish(self) -> bytes:
        # low's top bit is 0 and high's is 1, so the value "1000..." always
        # falls inside [low, high]; pending underflow bits can be dropped.
        self._bits.append(1)
        bits = self._bits
        if len(bits) % 8:
            bits = bits + [0] * (8 - len(bits) % 8)
        out = bytearray()
        for i in range(0, len(bits), 8):
            byte = 0
            for b in bits[i:i + 8]:
                byte = (byte << 1) | b
            out.append(byte)
        return bytes(out)


class Decoder(_CoderBase):
    def __init__(self, payload: bytes):
        super().__init__()
        self._payload = payload
        self._pos = 0
        self._bit = 0
        self.code = 0
        for _ in range(STATE_BITS):
            self.code = (self.code << 1) | self._read_bit()

    def _read_bit(self) -> int:
        if self._pos >= len(self._payload):
            return 0
        bit = (self._payload[self._pos] >> (7 - self._bit)) & 1
        self._bit += 1
        if self._bit == 8:
            self._bit = 0
            self._pos += 1
        return bit

    def decode(self, table: AdaptiveTable) -> int:
        total = table.total
        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * total - 1) // span
        symbol, lo, hi = table.find(value)
        self._narrow(lo, hi, total)
        table.update(symbol)
        return symbol

    def decode_bypass(self) -> int:
        span = self.high - self.low + 1
        value = ((self.code - self.low + 1) * 2 - 1) // span
        bit = 1 if value >= 1 else 0
        self._narrow(bit, bit + 1, 2)
        return bit

    def decode_bypass_bits(self, nbits: int) -> int:
        value = 0
        for _ in range(nbits):
            value = (value << 1) | self.decode_bypass()
        return value

    def _shift(self) -> None:
        self.code = ((self.code << 1) & MASK) | self._read_bit()

    def _underflow(self) -> None:
        self.code = (self.code & TOP_MASK) | ((self.code << 1) & (MASK >> 1)) | self._read_bit()


# ---------------------------------------------------------------------------
# Syntax contexts
# ---------------------------------------------------------------------------
# Coefficient symbols: q clipped to [-COEF_CLIP, COEF_CLIP] maps to
# symbol q + COEF_CLIP; the two extreme symbols are escapes whose remainder
# is bypass-coded as 16 raw bits. Symbol EOB_SYMBOL terminates a tile early.

COEF_CLIP = 16
EOB_SYMBOL = 2 * COEF_CLIP + 1  # alphabet: 33 coefficient symbols + EOB
COEF_ALPHABET = EOB_SYMBOL + 1
MV_RANGE = 64  # half-pel units; alphabet is 2*MV_RANGE + 1
MV_ALPHABET = 2 * MV_RANGE + 1
ESCAPE_BITS = 16


class ContextSet:
    """All adaptive tables for one frame payload; identical at both ends."""

    def __init__(self, n_refs: int):
        self.n_refs = n_refs
        self.split = {64: AdaptiveTable(2), 32: AdaptiveTable(2), 16: AdaptiveTable(2)}
        self.texture = {64: AdaptiveTable(2), 32: AdaptiveTable(2)}
        self.is_inter = AdaptiveTable(2)
        self.ref_select = AdaptiveTable(2)
        self.intra_mode = AdaptiveTable(2)
        self.mv = [AdaptiveTable(MV_ALPHABET), AdaptiveTable(MV_ALPHABET)]
        self.cbf = {"y": AdaptiveTable(2), "c": AdaptiveTable(2)}
        # Coefficient contexts: plane class x zigzag band
        self.coef = {(p, band): AdaptiveTable(COEF_ALPHABET)
                     for p in ("y", "c") for band in range(4)}

    @staticmethod
    def coef_band(pos: int) -> int:
        if pos == 0:
            return 0
        if pos <= 5:
            return 1
        if pos <= 20:
            return 2
        return 3


# ---------------------------------------------------------------------------
# Static rate model (fixed, order independent; used for Eq.-style decisions)
# ---------------------------------------------------------------------------

def eg0_bits(magnitude: int) -> int:
    """Exp-Golomb order 0 code length for a non-negative integer."""
    return 2 * int(math.floor(math.log2(magnitude + 1))) + 1


def signed_value_bits(v: int) -> int:
    """Rate model for one signed value: EG0 of |v| plus a sign bit when nonzero."""
    m = abs(int(v))
    return eg0_bits(m) + (1 if m else 0)


def coef_tile_bits(zigzag_coefs) -> int:
    """Rate model for one transform tile scanned in zigzag order.

    1 bit for the coded-block flag; if any coefficient is nonzero, each
    coefficient up to the last nonzero costs signed_value_bits, plus one
    end-of-block bit.
    """
    last = -1
    for i, v in enumerate(zigzag_coefs):
        if v:
            last = i
    if last < 0:
        return 1
    bits = 1 + 1  # cbf + eob
    for i in range(last + 1):
        bits += signed_value_bits(int(zigzag_coefs[i]))
    return bits


def coef_bits_batch(zigzag_rows) -> int:
    """Vectorized coef_tile_bits summed over the rows of a (k, n) array."""
    import numpy as np

    flat = np.asarray(zigzag_rows, np.int64)
    k, n = flat.shape
    nz = flat != 0
    any_nz = nz.any(axis=1)
    bits = k  # one cbf bit per tile
    if not any_nz.any():
        return bits
    rows = flat[any_nz]
    rnz = nz[any_nz]
    last = n - 1 - np.argmax(rnz[:, ::-1], axis=1)
    prefix = np.arange(n)[None, :] <= last[:, None]
    mags = np.abs(rows)
    eg = 2 * (np.frexp((mags + 1).astype(np.float64))[1] - 1) + 1
    per_value = eg + (mags != 0)
    bits += int((per_value * prefix).sum()) + len(rows)  # + one eob bit each
    return bits


def mv_bits(dy: int, dx: int) -> int:
    return signed_value_bits(dy) + signed_value_bits(dx)


MODE_FLAG_BITS = 1      # is_inter, ref select, intra mode, texture flag: 1 bit each
SPLIT_FLAG_BITS = 1
