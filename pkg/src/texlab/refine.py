"""Mask refinement: clustering, temporal vote, spatial vote, component pruning.

Raw per-frame masks from the analyzer flicker and carry isolated errors.
The pipeline applied per frame is: adaptive k-means clustering of texture
blocks into texture types, 3-frame temporal majority voting, synchronous
4-neighbor spatial voting, then removal of small connected components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import NON_TEXTURE, Frame, TextureMask

TAU_SPLIT = 1.0
K_MAX = 4
MIN_COMPONENT_BLOCKS = 5


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class MaskSequence:
    masks: tuple[TextureMask, ...]

    def __post_init__(self):
        grids = {m.grid for m in self.masks}
        if len(grids) > 1:
            raise InputError("all masks in a sequence must share one grid")
        indices = [m.frame_index for m in self.masks]
        if indices != list(range(indices[0], indices[0] + len(indices))):
            raise InputError("mask frame indices must be consecutive")

    def __len__(self) -> int:
        return len(self.masks)

    def __getitem__(self, i: int) -> TextureMask:
        return self.masks[i]


# ---------------------------------------------------------------------------
# Adaptive k-means over per-block features
# ---------------------------------------------------------------------------

def _block_features(frame: Frame, mask: TextureMask) -> tuple[np.ndarray, np.ndarray]:
    """Features (mean Y, mean U, mean V, Y variance) for each texture block.

    Features are standardized over the texture blocks so the split threshold
    is in comparable units for any content. The scale is floored (absolute
    floor of 2 units, relative floor of 5% of the feature magnitude) so a
    uniform region's sampling noise is not amplified into fake structure.
    """
    rows, cols = np.nonzero(mask.texture)
    feats = np.empty((len(rows), 4), np.float64)
    for i, (r, c) in enumerate(zip(rows, cols)):
        rect = mask.grid.block_rect(r, c)
        yb = frame.y[rect.y:rect.y + rect.h, rect.x:rect.x + rect.w].astype(np.float64)
        ub = frame.u[rect.y // 2:(rect.y + rect.h) // 2, rect.x // 2:(rect.x + rect.w) // 2]
        vb = frame.v[rect.y // 2:(rect.y + rect.h) // 2, rect.x // 2:(rect.x + rect.w) // 2]
        feats[i] = (yb.mean(), ub.mean(), vb.mean(), yb.var())
    scale = np.maximum(feats.std(axis=0), np.maximum(2.0, 0.05 * np.abs(feats).mean(axis=0)))
    feats = (feats - feats.mean(axis=0)) / scale
    return feats, np.stack([rows, cols], axis=1)


def _two_means(points: np.ndarray) -> np.ndarray:
    """Deterministic 2-means: seed with the farthest pair, Lloyd iterations.

    Returns a 0/1 assignment per point. Ties in distance go to cluster 0.
    """
    n = len(points)
    d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2)
    i, j = np.unravel_index(np.argmax(d2), d2.shape)
    centers = np.stack([points[i], points[j]])
    assign = np.zeros(n, np.int64)
    for _ in range(100):
        da = ((points - centers[0]) ** 2).sum(axis=1)
        db = ((points - centers[1]) ** 2).sum(axis=1)
        new_assign = (db < da).astype(np.int64)
        if np.array_equal(new_assign, assign) and _ > 0:
            break
        assign = new_assign
        for k in (0, 1):
            members = points[assign == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    return assign


def adaptive_kmeans_cluster(frame: Frame, mask: TextureMask,
                            tau_split: float = TAU_SPLIT, k_max: int = K_MAX) -> TextureMask:
    """Group texture blocks into texture-type clusters.

    Starts with one cluster and keeps splitting the cluster with the largest
    within-cluster variance until every cluster's mean distance to its
    centroid is <= tau_split (standardized units) or k_max is reached.
    Cluster ids are renumbered by first occurrence in raster order.
    """
    if mask.texture_block_count() == 0:
        return mask
    feats, cells = _block_features(frame, mask)
    clusters = [np.arange(len(feats))]
    while len(clusters) < k_max:
        # Mean distance to centroid per cluster; split the worst offender.
        spreads = []
        for idx in clusters:
            centroid = feats[idx].mean(axis=0)
            spreads.append(np.sqrt(((feats[idx] - centroid) ** 2).sum(axis=1)).mean())
        worst = int(np.argmax(spreads))
        if spreads[worst] <= tau_split or len(clusters[worst]) < 2:
            break
        idx = clusters[worst]
        assign = _two_means(feats[idx])
        a, b = idx[assign == 0], idx[assign == 1]
        if len(a) == 0 or len(b) == 0:
            break
        clusters[worst:worst + 1] = [a, b]

    labels = np.full(mask.labels.shape, NON_TEXTURE, np.int16)
    member_cluster = np.zeros(len(feats), np.int64)
    for k, idx in enumerate(clusters):
        member_cluster[idx] = k
    # Raster-order renumbering keeps ids stable across runs.
    remap: dict[int, int] = {}
    order = np.lexsort((cells[:, 1], cells[:, 0]))
    for i in order:
        k = int(member_cluster[i])
        if k not in remap:
            remap[k] = len(remap)
        labels[cells[i, 0], cells[i, 1]] = remap[k]
    return mask.with_labels(labels)


# ---------------------------------------------------------------------------
# Temporal and spatial correction
# ---------------------------------------------------------------------------

def temporal_correct(prev: TextureMask, cur: TextureMask, nxt: TextureMask) -> TextureMask:
    """Majority vote of three consecutive masks, applied to the middle frame.

    A block is texture iff texture in at least 2 of the 3 masks. Cluster ids
    come from the middle frame when it agrees, otherwise from the previous
    frame if it is texture there, else from the next.
    """
    if not (prev.grid == cur.grid == nxt.grid):
        raise InputError("temporal vote needs masks on the same grid")
    votes = prev.texture.astype(np.int8) + cur.texture.astype(np.int8) + nxt.texture.astype(np.int8)
    texture = votes >= 2
    labels = np.full(cur.labels.shape, NON_TEXTURE, np.int16)
    labels[texture & cur.texture] = cur.labels[texture & cur.texture]
    fill_prev = texture & ~cur.texture & prev.texture
    labels[fill_prev] = prev.labels[fill_prev]
    fill_next = texture & ~cur.texture & ~prev.texture & nxt.texture
    labels[fill_next] = nxt.labels[fill_next]
    return cur.with_labels(labels)


def spatial_correct(mask: TextureMask) -> TextureMask:
    """Fill holes: synchronous 4-neighbor vote on the input mask.

    A non-texture block flips to texture when at least ceil(3*n/4) of its n
    existing 4-neighbors are texture (3-of-4 in the interior). Its cluster id
    is the most common id among voting neighbors, smallest id on ties.
    """
    rows, cols = mask.labels.shape
    src = mask.labels
    out = src.copy()
    for r in range(rows):
        for c in range(cols):
            if src[r, c] != NON_TEXTURE:
                continue
            neigh = [src[rr, cc]
                     for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                     if 0 <= rr < rows and 0 <= cc < cols]
            if not neigh:
                continue
            tex = [lab for lab in neigh if lab != NON_TEXTURE]
            need = -(-3 * len(neigh) // 4)  # ceil(3n/4)
            if len(tex) >= need:
                ids, counts = np.unique(tex, return_counts=True)
                out[r, c] = ids[counts == counts.max()].min()
    return mask.with_labels(out)


def _components(texture: np.ndarray) -> list[list[tuple[int, int]]]:
    """4-connected components of True cells, by iterative flood fill."""
    rows, cols = texture.shape
    seen = np.zeros_like(texture, bool)
    comps = []
    for r in range(rows):
        for c in range(cols):
            if not texture[r, c] or seen[r, c]:
                continue
            stack = [(r, c)]
            seen[r, c] = True
            comp = []
            while stack:
                rr, cc = stack.pop()
                comp.append((rr, cc))
                for nr, nc in ((rr - 1, cc), (rr + 1, cc), (rr, cc - 1), (rr, cc + 1)):
                    if 0 <= nr < rows and 0 <= nc < cols and texture[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        stack.append((nr, nc))
            comps.append(comp)
    return comps


def remove_small_components(mask: TextureMask, min_blocks: int = MIN_COMPONENT_BLOCKS) -> TextureMask:
    """Relabel 4-connected texture components smaller than min_blocks as non-texture.

    Connectivity ignores cluster ids: adjacent texture blocks of different
    clusters belong to one component.
    """
    if min_blocks < 1:
        raise InputError(f"min_blocks must be >= 1, got {min_blocks}")
    labels = mask.labels.copy()
    for comp in _components(mask.texture):
        if len(comp) < min_blocks:
            for r, c in comp:
                labels[r, c] = NON_TEXTURE
    return mask.with_labels(labels)


def refine_sequence(
    frames: Sequence[Frame],
    raw_masks: Sequence[TextureMask],
    min_blocks: int = MIN_COMPONENT_BLOCKS,
    tau_split: float = TAU_SPLIT,
    k_max: int = K_MAX,
) -> MaskSequence:
    """Full refinement: cluster, temporal vote, spatial vote, prune; in that order.

    Each stage runs over the whole sequence before the next starts, so the
    temporal vote always sees clustered (not yet voted) neighbor masks.
    First and last frames degenerate to an identity temporal vote.
    """
    if len(frames) != len(raw_masks):
        raise InputError(f"{len(frames)} frames vs {len(raw_masks)} masks")
    clustered = [adaptive_kmeans_cluster(f, m, tau_split, k_max) for f, m in zip(frames, raw_masks)]
    n = len(clustered)
    voted = []
    for i in range(n):
        if 0 < i < n - 1:
            voted.append(temporal_correct(clustered[i - 1], clustered[i], clustered[i + 1]))
        else:
            voted.append(clustered[i])
    final = [remove_small_components(spatial_correct(m), min_blocks) for m in voted]
    return MaskSequence(tuple(final))
