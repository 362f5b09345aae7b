"""Closed-loop encoder with the texture mode.

Each frame is encoded in two passes per superblock: a decision pass that
performs the partition/mode search (with the texture override rules) and
commits reconstructions, then a write pass that emits the decided syntax
through the adaptive arithmetic coder. Rate terms in the decision pass come
from the static rate model in entropy.py, so decisions are exactly
re-checkable after the fact.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..analyzer import CnnWeights, segment_frame
from ..config import PipelineParams
from ..core import Frame, Rect, TextureMask, yuv420_to_rgb
from ..metrics import EncodeReport, FrameStats, flicker_score, psnr, ssim
from ..motion import AffineModel, NoModelError, estimate_texture_motion_detailed
from ..refine import MaskSequence, refine_sequence
from . import bitstream as bs
from . import predict as pr
from .entropy import (COEF_CLIP, ContextSet, Encoder, EOB_SYMBOL, ESCAPE_BITS,
                      MODE_FLAG_BITS, MV_RANGE, SPLIT_FLAG_BITS,
                      coef_bits_batch, mv_bits)
from .plan import CodingConfig, GfGroupPlan, PlanEntry, flatten_plan, plan_gf_groups
from .transform import (dct_matrix, qp_to_step, quantize, rd_lambda,
                        reconstruct_residual, split_tiles, tile_size, zigzag_order)


class CodecError(RuntimeError):
    pass


# Gather indices mapping (dy, dx, sub-block i, sub-block j) into the dense
# correlation planes of the motion cost table.
_I8 = np.arange(8)
_DW = np.arange(2 * pr.SEARCH_RANGE + 1)
_GY = _DW[:, None, None, None] + 8 * _I8[None, None, :, None]
_GX = _DW[None, :, None, None] + 8 * _I8[None, None, None, :]
_GK = (_I8[:, None] * 8 + _I8[None, :])[None, None, :, :]


@dataclass
class Leaf:
    mode: str                     # "texture" | "inter" | "intra"
    ref_idx: int = 0
    mv: tuple[int, int] = (0, 0)  # half-pel (dy, dx)
    intra: str = "dc"
    qcoefs: tuple = ()            # (y_tiles, u_tiles, v_tiles) int32 arrays
    recon_blocks: tuple = ()
    coef_bits: int = 0            # static-model rate of the residual syntax


@dataclass
class Node:
    x: int
    y: int
    s: int
    split: bool = False
    children: list = field(default_factory=list)
    leaf: Leaf | None = None
    cost: float = 0.0


@dataclass
class EncodeResult:
    bitstream: bytes
    report: EncodeReport
    recons: list[Frame]
    masks: MaskSequence | None
    texture_maps: list[np.ndarray]
    models: dict[tuple[int, int], AffineModel]
    plan: list[GfGroupPlan]
    model_inliers: dict[tuple[int, int], int] = field(default_factory=dict)
    debug: dict | None = None

    def model_log_rows(self):
        for (d, ref) in sorted(self.models):
            yield d, ref, self.models[(d, ref)], self.model_inliers.get((d, ref), -1)


def seed_for(seed: int, display: int, ref: int) -> int:
    return (seed * 1_000_003 + display * 101 + ref) & 0x7FFFFFFF


# ---------------------------------------------------------------------------
# Texture block decision
# ---------------------------------------------------------------------------

def node_texture_cells(mask: TextureMask, x: int, y: int, s: int) -> tuple[bool, bool]:
    """(all_texture, any_texture) for the 32-grid cells covered by a node.

    A node reaching past the mask grid (remainder or padding area) can never
    be all-texture; those pixels are non-texture by definition.
    """
    grid = mask.grid
    c0, r0 = x // 32, y // 32
    c1, r1 = (x + s - 1) // 32, (y + s - 1) // 32
    inside = c1 < grid.cols and r1 < grid.rows
    cells = mask.texture[r0:min(r1 + 1, grid.rows), c0:min(c1 + 1, grid.cols)]
    any_tex = bool(cells.any()) if cells.size else False
    all_tex = inside and bool(cells.all()) and cells.size > 0
    return all_tex, any_tex


def is_texture_block(rect: Rect,
                     cur_mask: TextureMask,
                     tex_refs: tuple[int, ...],
                     ref_masks: dict[int, TextureMask],
                     models: dict[int, AffineModel],
                     strict: bool = False) -> bool:
    """Two-step texture block test.

    Step 1: every 32x32 cell of the rect is texture in the current mask.
    Step 2: for each texture reference, the rect's four corner pixels and
    center (every pixel under the strict flag) map inside that reference's
    texture region. Sample points sit at pixel centers so a numerically
    near-identity model cannot fail on an epsilon excursion at the frame
    origin.
    """
    all_tex, _ = node_texture_cells(cur_mask, rect.x, rect.y, rect.w)
    if not all_tex or rect.w != rect.h or rect.w < 32:
        return False
    if not tex_refs:
        return False
    for ref in tex_refs:
        model = models.get(ref)
        ref_mask = ref_masks.get(ref)
        if model is None or ref_mask is None:
            return False
        if strict:
            xs, ys = np.meshgrid(np.arange(rect.x, rect.x + rect.w, dtype=np.float64) + 0.5,
                                 np.arange(rect.y, rect.y + rect.h, dtype=np.float64) + 0.5)
            pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
        else:
            pts = np.array([
                (rect.x + 0.5, rect.y + 0.5),
                (rect.x + rect.w - 0.5, rect.y + 0.5),
                (rect.x + 0.5, rect.y + rect.h - 0.5),
                (rect.x + rect.w - 0.5, rect.y + rect.h - 0.5),
                (rect.x + rect.w / 2, rect.y + rect.h / 2),
            ], np.float64)
        mapped = model.apply(pts)
        for mx, my in mapped:
            if not ref_mask.is_texture_at(mx, my):
                return False
    return True


# ---------------------------------------------------------------------------
# Per-frame encoder
# ---------------------------------------------------------------------------

class FrameEncoder:
    def __init__(self, entry: PlanEntry, source: Frame, qp: int,
                 recon_store: dict, mc_pad_store: dict,
                 cur_mask: TextureMask | None,
                 ref_masks: dict[int, TextureMask],
                 tex_models: dict[int, AffineModel],
                 texture_on: bool,
                 strict_containment: bool = False,
                 trace: list | None = None):
        self.entry = entry
        self.qp = qp
        self.step = qp_to_step(qp)
        self.lmbda = rd_lambda(qp)
        self.width = source.width
        self.height = source.height
        self.cw = pr.coding_size(self.width)
        self.ch = pr.coding_size(self.height)
        self.src = (pr.pad_plane(source.y, self.ch, self.cw),
                    pr.pad_plane(source.u, self.ch // 2, self.cw // 2),
                    pr.pad_plane(source.v, self.ch // 2, self.cw // 2))
        self.src16 = tuple(p.astype(np.int16) for p in self.src)
        self.recon = (np.zeros((self.ch, self.cw), np.uint8),
                      np.zeros((self.ch // 2, self.cw // 2), np.uint8),
                      np.zeros((self.ch // 2, self.cw // 2), np.uint8))
        self.refs = entry.refs
        self.ref_recons = [recon_store[r] for r in entry.refs]
        self.ref_pads = [mc_pad_store[r] for r in entry.refs]
        self.cur_mask = cur_mask
        self.ref_masks = ref_masks
        self.tex_models = tex_models
        self.texture_on = texture_on
        self.tex_refs = entry.tex_refs if texture_on else ()
        self.tex_views = {r: tuple(p[:self.height, :self.width] if i == 0
                                   else p[:self.height // 2, :self.width // 2]
                                   for i, p in enumerate(recon_store[r]))
                          for r in self.tex_refs} if texture_on else {}
        self.strict = strict_containment
        self.trace = trace
        self.texture_map = np.zeros((self.height, self.width), bool)
        self.texture_leaf_count = 0
        self.texture_coef_bits = 0.0
        self._sad_tables: dict[tuple[int, int, int], np.ndarray] = {}

    # -- decision pass ------------------------------------------------------

    def decide_frame(self) -> list[Node]:
        trees = []
        for sy in range(0, self.ch, pr.SB_SIZE):
            for sx in range(0, self.cw, pr.SB_SIZE):
                self._sad_tables.clear()
                trees.append(self._decide_node(sx, sy, pr.SB_SIZE))
        return trees

    def _decide_node(self, x: int, y: int, s: int) -> Node:
        node = Node(x, y, s)
        if self.texture_on and self.cur_mask is not None:
            all_tex, any_tex = node_texture_cells(self.cur_mask, x, y, s)
            if s >= 32 and all_tex and is_texture_block(
                    Rect(x, y, s, s), self.cur_mask, self.tex_refs,
                    self.ref_masks, self.tex_models, self.strict):
                self._commit_texture_leaf(node)
                return node
            if s == 64 and any_tex:
                node.split = True
                half = s // 2
                for cy in (y, y + half):
                    for cx in (x, x + half):
                        node.children.append(self._decide_node(cx, cy, half))
                if self.trace is not None:
                    self.trace.append({"kind": "split", "x": x, "y": y, "s": s,
                                       "forced": True, "chosen_split": True})
                return node

        leaf_cost, leaf = self._eval_leaf(x, y, s)
        leaf_cost += self.lmbda * (SPLIT_FLAG_BITS if s > 8 else 0)
        if s == 8:
            node.leaf = leaf
            node.cost = leaf_cost
            self._commit_leaf(node)
            return node

        saved = self._save_region(x, y, s)
        half = s // 2
        children = []
        split_cost = self.lmbda * SPLIT_FLAG_BITS
        for cy in (y, y + half):
            for cx in (x, x + half):
                child = self._decide_node(cx, cy, half)
                children.append(child)
                split_cost += child_cost_of(child)
        if leaf_cost <= split_cost:
            self._restore_region(x, y, s, saved)
            node.leaf = leaf
            self._commit_leaf(node)
        else:
            node.split = True
            node.children = children
        node.cost = min(leaf_cost, split_cost)
        if self.trace is not None:
            self.trace.append({"kind": "split", "x": x, "y": y, "s": s, "forced": False,
                               "leaf_cost": leaf_cost, "split_cost": split_cost,
                               "chosen_split": node.split})
        return node

    def _commit_texture_leaf(self, node: Node) -> None:
        x, y, s = node.x, node.y, node.s
        rect = Rect(x, y, s, s)
        yb, ub, vb = pr.texture_predict(rect, self.tex_refs, self.tex_models, self.tex_views)
        self.recon[0][y:y + s, x:x + s] = yb
        self.recon[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = ub
        self.recon[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = vb
        node.leaf = Leaf(mode="texture")
        node.cost = 0.0
        self.texture_map[y:y + s, x:x + s] = True
        self.texture_leaf_count += 1

    def _eval_leaf(self, x: int, y: int, s: int) -> tuple[float, Leaf]:
        rect = Rect(x, y, s, s)
        src_y = self.src16[0][y:y + s, x:x + s]
        src_u = self.src16[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2]
        src_v = self.src16[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2]
        extra_bits = MODE_FLAG_BITS if (self.texture_on and s >= 32) else 0

        candidates = []
        for ri, _ in enumerate(self.refs):
            mv = self._motion_search(x, y, s, ri, src_y)
            pred = pr.inter_predict(self.ref_pads[ri], rect, mv)
            bits = MODE_FLAG_BITS + (MODE_FLAG_BITS if len(self.refs) == 2 else 0) + mv_bits(*mv)
            candidates.append(("inter", ri, mv, pred, bits))
        for mode in ("dc", "planar"):
            pred = pr.intra_predict(self.recon, rect, mode)
            bits = (MODE_FLAG_BITS if self.refs else 0) + MODE_FLAG_BITS
            candidates.append(("intra", 0, mode, pred, bits))

        best = None
        trace_cands = []
        for label, ri, aux, pred, mode_bits in candidates:
            dist, coef_bits, qcoefs = self._code_candidate((src_y, src_u, src_v), pred)
            rate = mode_bits + coef_bits + extra_bits
            cost = dist + self.lmbda * rate
            trace_cands.append({"label": (label, ri, aux), "D": dist, "R": rate,
                                "mode_bits": mode_bits + extra_bits, "coef_bits": coef_bits})
            if best is None or cost < best[0]:
                leaf = Leaf(mode=label, ref_idx=ri,
                            mv=aux if label == "inter" else (0, 0),
                            intra=aux if label == "intra" else "dc",
                            qcoefs=qcoefs, coef_bits=coef_bits)
                best = (cost, leaf, pred, len(trace_cands) - 1)
        cost, leaf, pred, chosen = best
        leaf.recon_blocks = tuple(
            np.clip(pred[i].astype(np.int32)
                    + reconstruct_residual(leaf.qcoefs[i], pred[i].shape[0], self.step),
                    0, 255).astype(np.uint8)
            for i in range(3))
        if self.trace is not None:
            self.trace.append({"kind": "leaf", "x": x, "y": y, "s": s,
                               "lambda": self.lmbda, "candidates": trace_cands,
                               "chosen": chosen})
        return cost, leaf

    def _code_candidate(self, src, pred):
        """Transform-domain D (Parseval) and model rate for one candidate.

        Luma and chroma tiles of equal size are pushed through a single
        batched transform; at 8-pixel nodes the 4x4 chroma tiles get their
        own batch.
        """
        residuals = [np.subtract(src[i], pred[i], dtype=np.int16) for i in range(3)]
        groups: dict[int, list[tuple[int, np.ndarray]]] = {}
        for plane_idx, res in enumerate(residuals):
            groups.setdefault(tile_size(res.shape[0]), []).append((plane_idx, res))
        dist = 0.0
        coef_bits = 0
        qcoefs: list = [None, None, None]
        for t, members in groups.items():
            tiles = np.concatenate([split_tiles(res.astype(np.float64))[1] for _, res in members])
            d = dct_matrix(t)
            coefs = np.einsum("ij,njk,lk->nil", d, tiles, d)
            qtiles = quantize(coefs, self.step).astype(np.int32)
            err = coefs - qtiles * self.step
            dist += float((err * err).sum())
            zz = zigzag_order(t)
            coef_bits += coef_bits_batch(qtiles.reshape(qtiles.shape[0], -1)[:, zz])
            offset = 0
            for plane_idx, res in members:
                k = (res.shape[0] // t) ** 2
                qcoefs[plane_idx] = qtiles[offset:offset + k]
                offset += k
        return dist, coef_bits, tuple(qcoefs)

    def _commit_leaf(self, node: Node) -> None:
        x, y, s = node.x, node.y, node.s
        yb, ub, vb = node.leaf.recon_blocks
        self.recon[0][y:y + s, x:x + s] = yb
        self.recon[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = ub
        self.recon[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = vb

    def _save_region(self, x, y, s):
        return (self.recon[0][y:y + s, x:x + s].copy(),
                self.recon[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2].copy(),
                self.recon[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2].copy())

    def _restore_region(self, x, y, s, saved):
        self.recon[0][y:y + s, x:x + s] = saved[0]
        self.recon[1][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = saved[1]
        self.recon[2][y // 2:(y + s) // 2, x // 2:(x + s) // 2] = saved[2]

    # -- motion search ------------------------------------------------------
    # Full search minimizes SSD over +-SEARCH_RANGE integer displacements.
    # The per-superblock table holds the SSD of every 8x8 sub-block at every
    # displacement (SSD is additive over a node's sub-blocks), computed
    # exactly via one GEMM: every partial sum stays below 2^24, so float32
    # products are integer exact.

    def _motion_search(self, x: int, y: int, s: int, ri: int, src_y: np.ndarray) -> tuple[int, int]:
        sbx, sby = x // pr.SB_SIZE * pr.SB_SIZE, y // pr.SB_SIZE * pr.SB_SIZE
        table = self._cost_table(sbx, sby, ri)
        i0 = (y - sby) // 8
        j0 = (x - sbx) // 8
        k = s // 8
        node_cost = table[:, :, i0:i0 + k, j0:j0 + k].sum(axis=(2, 3))
        best = int(np.argmin(node_cost))
        dy = best // node_cost.shape[1] - pr.SEARCH_RANGE
        dx = best % node_cost.shape[1] - pr.SEARCH_RANGE

        # half-pel refinement around the best integer vector
        ref_pad = self.ref_pads[ri][0]
        best_mv = (2 * dy, 2 * dx)
        best_cost = int(node_cost.flat[best])
        src64 = src_y.astype(np.int64)
        for ddy in (-1, 0, 1):
            for ddx in (-1, 0, 1):
                if ddy == 0 and ddx == 0:
                    continue
                hy, hx = 2 * dy + ddy, 2 * dx + ddx
                if abs(hy) > 2 * pr.SEARCH_RANGE + 1 or abs(hx) > 2 * pr.SEARCH_RANGE + 1:
                    continue
                pred = pr.mc_predict(ref_pad, x, y, s, s, hx * 2, hy * 2)
                diff = src64 - pred.astype(np.int64)
                cost = int((diff * diff).sum())
                if cost < best_cost:
                    best_cost = cost
                    best_mv = (hy, hx)
        return best_mv

    def _cost_table(self, sbx: int, sby: int, ri: int) -> np.ndarray:
        key = (sbx, sby, ri)
        cached = self._sad_tables.get(key)
        if cached is not None:
            return cached
        ref_pad = self.ref_pads[ri][0]
        r = pr.SEARCH_RANGE
        base_y = sby - r + pr.REF_PAD
        base_x = sbx - r + pr.REF_PAD
        span = pr.SB_SIZE + 2 * r            # 112
        region = ref_pad[base_y:base_y + span, base_x:base_x + span]
        src = self.src[0][sby:sby + pr.SB_SIZE, sbx:sbx + pr.SB_SIZE]
        # current SB as 64 row-major 8x8 sub-blocks, flattened
        subs = src.reshape(8, 8, 8, 8).transpose(0, 2, 1, 3).reshape(64, 64).astype(np.float32)
        cur2 = (subs.astype(np.float64) ** 2).sum(axis=1)
        win8 = sliding_window_view(region, (8, 8))      # (105,105,8,8)
        nwin = span - 7
        mat = np.ascontiguousarray(win8.reshape(nwin * nwin, 64), dtype=np.float32)
        cross = (mat @ subs.T).reshape(nwin, nwin, 64)
        r64 = region.astype(np.int64)
        sq = np.zeros((span + 1, span + 1), np.int64)
        sq[1:, 1:] = np.cumsum(np.cumsum(r64 * r64, 0), 1)
        box = (sq[8:, 8:][:nwin, :nwin] + sq[:-8, :-8][:nwin, :nwin]
               - sq[:-8, 8:][:nwin, :nwin] - sq[8:, :-8][:nwin, :nwin])
        ssd_full = box.astype(np.float64)[:, :, None] + cur2[None, None, :] - 2.0 * cross
        table = np.rint(ssd_full[_GY, _GX, _GK]).astype(np.int64)
        self._sad_tables[key] = table
        return table

    # -- write pass ---------------------------------------------------------

    def write_frame(self, trees: list[Node]) -> bytes:
        enc = Encoder()
        ctx = ContextSet(len(self.refs))
        for tree in trees:
            self._write_node(enc, ctx, tree)
        return enc.finish()

    def _write_node(self, enc: Encoder, ctx: ContextSet, node: Node) -> None:
        if node.s > 8:
            enc.encode(ctx.split[node.s], 1 if node.split else 0)
        if node.split:
            for child in node.children:
                self._write_node(enc, ctx, child)
            return
        leaf = node.leaf
        if self.texture_on and node.s >= 32:
            enc.encode(ctx.texture[node.s], 1 if leaf.mode == "texture" else 0)
        if leaf.mode == "texture":
            return
        if self.refs:
            enc.encode(ctx.is_inter, 1 if leaf.mode == "inter" else 0)
        if leaf.mode == "inter":
            if len(self.refs) == 2:
                enc.encode(ctx.ref_select, leaf.ref_idx)
            write_mv(enc, ctx, leaf.mv)
        else:
            enc.encode(ctx.intra_mode, 0 if leaf.intra == "dc" else 1)
        for plane_idx, plane_cls in ((0, "y"), (1, "c"), (2, "c")):
            write_coefs(enc, ctx, plane_cls, leaf.qcoefs[plane_idx])


def child_cost_of(node: Node) -> float:
    return getattr(node, "cost", 0.0)


def iter_leaves(node: Node):
    if node.split:
        for child in node.children:
            yield from iter_leaves(child)
    else:
        yield node


def write_mv(enc: Encoder, ctx: ContextSet, mv: tuple[int, int]) -> None:
    for axis, comp in enumerate(mv):
        enc.encode(ctx.mv[axis], comp + MV_RANGE)


def write_coefs(enc: Encoder, ctx: ContextSet, plane_cls: str, qtiles: np.ndarray) -> None:
    n = qtiles.shape[1]
    zz = zigzag_order(n)
    for tile in qtiles.reshape(qtiles.shape[0], -1)[:, zz]:
        nz = np.nonzero(tile)[0]
        enc.encode(ctx.cbf[plane_cls], 1 if len(nz) else 0)
        if not len(nz):
            continue
        last = int(nz[-1])
        for i in range(last + 1):
            v = int(tile[i])
            clipped = max(-COEF_CLIP, min(COEF_CLIP, v))
            enc.encode(ctx.coef[(plane_cls, ContextSet.coef_band(i))], clipped + COEF_CLIP)
            if abs(clipped) == COEF_CLIP:
                enc.encode_bypass_bits(abs(v) - COEF_CLIP, ESCAPE_BITS)
        if last < len(tile) - 1:
            enc.encode(ctx.coef[(plane_cls, ContextSet.coef_band(last + 1))], EOB_SYMBOL)


# ---------------------------------------------------------------------------
# Sequence encoder
# ---------------------------------------------------------------------------

def encode_sequence(frames: Sequence[Frame],
                    config: CodingConfig | str,
                    qp: int,
                    weights: CnnWeights | None = None,
                    seed: int = 0,
                    *,
                    masks: MaskSequence | None = None,
                    models: dict[tuple[int, int], AffineModel] | None = None,
                    rgb_sources: Sequence[np.ndarray] | None = None,
                    params: PipelineParams | None = None,
                    video_id: str = "clip",
                    debug_trace: bool = False,
                    strict_containment: bool = False) -> EncodeResult:
    """Encode a sequence under one configuration and QP.

    Texture configs run the full pipeline (segment, refine, per-reference
    motion estimation) unless precomputed masks are passed in; the baseline
    config never touches the analyzer. Frame-level failures (empty texture
    region, no motion model) degrade that frame to conventional coding and
    are recorded in the report.
    """
    config = CodingConfig(config)
    params = params or PipelineParams()
    n = len(frames)
    if n < 2:
        raise CodecError(f"need at least 2 frames, got {n}")
    width, height = frames[0].width, frames[0].height
    for f in frames:
        if (f.width, f.height) != (width, height):
            raise CodecError("all frames must share dimensions")

    if config.uses_texture and masks is None:
        if weights is None:
            raise CodecError(f"config {config.value} needs CNN weights or precomputed masks")
        rgbs = rgb_sources if rgb_sources is not None else [yuv420_to_rgb(f) for f in frames]
        raw = [segment_frame(rgbs[i], weights, params.threshold, frame_index=i) for i in range(n)]
        masks = refine_sequence(frames, raw, params.min_blocks, params.tau_split, params.k_max)

    groups = plan_gf_groups(n, config)
    entries = flatten_plan(groups)

    # Frame-level texture motion estimation; precomputed models (from an
    # earlier encode of the same clip and seed) short-circuit it per pair.
    models = dict(models) if models else {}
    model_inliers: dict[tuple[int, int], int] = {}
    degraded: dict[int, list[str]] = {}
    texture_active: dict[int, bool] = {}
    for e in entries:
        if not e.texture_enabled:
            texture_active[e.display_index] = False
            continue
        d = e.display_index
        reasons = []
        if masks[d].texture_block_count() == 0:
            reasons.append("no-texture-region")
        else:
            for ref in e.tex_refs:
                if (d, ref) in models:
                    continue
                if masks[ref].texture_block_count() == 0:
                    reasons.append(f"ref-{ref}-no-texture")
                    continue
                try:
                    est, n_inliers = estimate_texture_motion_detailed(
                        frames[d], frames[ref], masks[d], masks[ref],
                        seed=seed_for(seed, d, ref),
                        fast_threshold=params.fast_threshold,
                        ransac_iters=params.ransac_iters,
                        ransac_tol=params.ransac_tol)
                    # round to the header's float32 precision before any use:
                    # encoder and decoder must warp with identical parameters
                    models[(d, ref)] = AffineModel(
                        *(float(np.float32(p)) for p in est.as_tuple()))
                    model_inliers[(d, ref)] = n_inliers
                except NoModelError as exc:
                    reasons.append(f"ref-{ref}-no-model: {exc}")
        active = not reasons and all((d, ref) in models for ref in e.tex_refs)
        texture_active[d] = active
        if reasons:
            degraded[d] = reasons

    structure = bs.STRUCTURE_PYRAMID if config.pyramid else bs.STRUCTURE_FLAT
    out = bytearray(bs.write_global_header(width, height, n, structure, 8))

    recon_store: dict[int, tuple] = {}
    mc_pad_store: dict[int, tuple] = {}
    stats_by_display: dict[int, FrameStats] = {}
    texture_maps: dict[int, np.ndarray] = {}
    traces = {} if debug_trace else None

    for e in entries:
        d = e.display_index
        active = texture_active.get(d, False)
        frame_models = {ref: models[(d, ref)] for ref in e.tex_refs if (d, ref) in models}
        frame_trace = [] if debug_trace else None
        fe = FrameEncoder(
            entry=e, source=frames[d], qp=qp,
            recon_store=recon_store, mc_pad_store=mc_pad_store,
            cur_mask=masks[d] if masks is not None else None,
            ref_masks={r: masks[r] for r in e.tex_refs} if masks is not None else {},
            tex_models=frame_models, texture_on=active,
            strict_containment=strict_containment, trace=frame_trace)
        trees = fe.decide_frame()
        payload = fe.write_frame(trees)

        recon_store[d] = fe.recon
        mc_pad_store[d] = tuple(pr.mc_ref_pad(p) for p in fe.recon)
        texture_maps[d] = fe.texture_map

        crop = (fe.recon[0][:height, :width], fe.recon[1][:height // 2, :width // 2],
                fe.recon[2][:height // 2, :width // 2])
        crc = zlib.crc32(crop[0].tobytes() + crop[1].tobytes() + crop[2].tobytes())
        tex_model_params = tuple((ref, frame_models[ref].as_tuple()) for ref in e.tex_refs) if active else ()
        rec = bs.FrameRecord(
            display_index=d, kind=e.kind, qp=qp, refs=e.refs,
            texture_enabled=active, tex_models=tex_model_params,
            payload=payload, recon_crc=crc)
        rec_bytes = bs.write_frame_record(rec)
        out += rec_bytes

        coef_bits = 0
        tex_coef_bits = 0
        tex_leaf_count = 0
        for tree in trees:
            for leaf_node in iter_leaves(tree):
                if leaf_node.leaf.mode == "texture":
                    tex_leaf_count += 1
                    tex_coef_bits += leaf_node.leaf.coef_bits
                else:
                    coef_bits += leaf_node.leaf.coef_bits

        nontex = ~fe.texture_map
        stats_by_display[d] = FrameStats(
            display_index=d,
            kind=e.kind.value,
            bits=len(rec_bytes) * 8,
            texture_coverage=float(fe.texture_map.mean()),
            psnr_full=psnr(frames[d].y, crop[0]),
            psnr_nontexture=psnr(frames[d].y, crop[0], nontex) if nontex.any() else None,
            ssim=ssim(frames[d].y, crop[0]),
            texture_enabled=active,
            degraded=tuple(degraded.get(d, ())),
            coef_bits_estimate=float(coef_bits),
            texture_coef_bits=float(tex_coef_bits),
            texture_leaf_count=tex_leaf_count,
        )
        if debug_trace:
            traces[d] = {"trace": frame_trace, "trees": trees,
                         "texture_leaves": fe.texture_leaf_count,
                         "texture_coef_bits": fe.texture_coef_bits}

    recons = []
    for d in range(n):
        planes = recon_store[d]
        recons.append(Frame(y=planes[0][:height, :width].copy(),
                            u=planes[1][:height // 2, :width // 2].copy(),
                            v=planes[2][:height // 2, :width // 2].copy(),
                            index=d))

    report = EncodeReport(video_id=video_id, config=config.value, qp=qp, seed=seed,
                          n_frames=n, frames=[stats_by_display[d] for d in range(n)],
                          total_bytes=len(out))
    if masks is not None and n >= 2:
        score, empty = flicker_score(recons, masks, frames)
        report.flicker = score
        report.flicker_region_empty = empty

    maps = [texture_maps[d] for d in range(n)]
    return EncodeResult(bitstream=bytes(out), report=report, recons=recons,
                        masks=masks, texture_maps=maps,
                        models=models, plan=groups,
                        model_inliers=model_inliers, debug=traces)
