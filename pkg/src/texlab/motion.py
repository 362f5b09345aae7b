"""Texture-region affine motion estimation.

FAST-9 corners restricted to texture blocks, SAD patch matching with a
ratio test and mutual-best filtering, then seeded RANSAC fitting a
6-parameter affine model. The whole chain is deterministic for a given
seed; RANSAC samples indices after a canonical sort so match order never
changes the result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Frame, TextureMask

FAST_THRESHOLD = 20
FAST_ARC = 9
PATCH_RADIUS = 8
MATCH_RATIO = 0.8
MATCH_MAX_DIST = 64.0
RANSAC_ITERS = 2000
RANSAC_TOL = 1.5
MIN_DET = 1e-3
MAX_KEYPOINTS = 400

# Bresenham circle of radius 3, clockwise from 12 o'clock: (dx, dy) offsets.
CIRCLE = [
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
]


class NoModelError(RuntimeError):
    """Raised when no non-degenerate affine model can be fitted."""


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    score: float


@dataclass(frozen=True)
class Match:
    kp_cur: Keypoint
    kp_ref: Keypoint
    distance: float


@dataclass(frozen=True)
class AffineModel:
    """Maps current-frame (x, y) to reference-frame (a*x + b*y + tx, c*x + d*y + ty)."""

    a: float
    b: float
    c: float
    d: float
    tx: float
    ty: float

    def __post_init__(self):
        params = (self.a, self.b, self.c, self.d, self.tx, self.ty)
        if not all(np.isfinite(p) for p in params):
            raise NoModelError(f"non-finite affine parameters: {params}")
        if abs(self.det) < MIN_DET:
            raise NoModelError(f"degenerate affine model, |det| = {abs(self.det):.2e}")

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, xy: np.ndarray) -> np.ndarray:
        """Map an Nx2 array of points into the reference frame."""
        x, y = xy[:, 0], xy[:, 1]
        return np.stack([self.a * x + self.b * y + self.tx,
                         self.c * x + self.d * y + self.ty], axis=1)

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.a, self.b, self.c, self.d, self.tx, self.ty)

    @staticmethod
    def identity() -> "AffineModel":
        return AffineModel(1.0, 0.0, 0.0, 1.0, 0.0, 0.0)


# ---------------------------------------------------------------------------
# FAST-9 corner detection
# ---------------------------------------------------------------------------

def detect_fast(luma: np.ndarray, region_mask: TextureMask | None, threshold: int = FAST_THRESHOLD) -> list[Keypoint]:
    """FAST-9 corners with 3x3 non-maximum suppression.

    A pixel is a corner when >= 9 contiguous circle pixels are all brighter
    than p + t or all darker than p - t. The corner score is the best arc's
    summed margin beyond the threshold. When region_mask is given, only
    corners inside its texture blocks are kept.
    """
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    h, w = luma.shape
    if h < 7 or w < 7:
        return []
    p = luma.astype(np.int16)
    inner = np.s_[3:h - 3, 3:w - 3]
    center = p[inner]
    bright = np.empty((16,) + center.shape, bool)
    dark = np.empty((16,) + center.shape, bool)
    ring = np.empty((16,) + center.shape, np.int16)
    for k, (dx, dy) in enumerate(CIRCLE):
        shifted = p[3 + dy:h - 3 + dy, 3 + dx:w - 3 + dx]
        ring[k] = shifted
        bright[k] = shifted > center + threshold
        dark[k] = shifted < center - threshold
    score = np.zeros(center.shape, np.float64)
    is_corner = np.zeros(center.shape, bool)
    bright2 = np.concatenate([bright, bright], axis=0)
    dark2 = np.concatenate([dark, dark], axis=0)
    margin_b = np.concatenate([ring - center - threshold] * 2, axis=0).astype(np.float64)
    margin_d = np.concatenate([center - threshold - ring] * 2, axis=0).astype(np.float64)
    for start in range(16):
        wb = bright2[start:start + FAST_ARC].all(axis=0)
        wd = dark2[start:start + FAST_ARC].all(axis=0)
        if wb.any():
            s = margin_b[start:start + FAST_ARC].sum(axis=0)
            score = np.where(wb, np.maximum(score, s), score)
            is_corner |= wb
        if wd.any():
            s = margin_d[start:start + FAST_ARC].sum(axis=0)
            score = np.where(wd, np.maximum(score, s), score)
            is_corner |= wd
    score[~is_corner] = 0.0

    # 3x3 NMS on scores; raster-earlier pixel wins score ties.
    full = np.zeros((h, w), np.float64)
    full[inner] = score
    kps = []
    ys, xs = np.nonzero(full > 0)
    for y, x in zip(ys, xs):
        s = full[y, x]
        suppressed = False
        for ny in range(y - 1, y + 2):
            for nx in range(x - 1, x + 2):
                if (ny, nx) == (y, x) or not (0 <= ny < h and 0 <= nx < w):
                    continue
                ns = full[ny, nx]
                if ns > s or (ns == s and (ny, nx) < (y, x)):
                    suppressed = True
                    break
            if suppressed:
                break
        if suppressed:
            continue
        if region_mask is not None and not region_mask.is_texture_at(x, y):
            continue
        kps.append(Keypoint(int(x), int(y), float(s)))
    return kps


# ---------------------------------------------------------------------------
# Patch matching
# ---------------------------------------------------------------------------

def _patches(luma: np.ndarray, kps: list[Keypoint], radius: int) -> np.ndarray:
    padded = np.pad(luma, radius, mode="edge").astype(np.int32)
    size = 2 * radius + 1
    out = np.empty((len(kps), size * size), np.int32)
    for i, kp in enumerate(kps):
        out[i] = padded[kp.y:kp.y + size, kp.x:kp.x + size].ravel()
    return out


def match_features(
    kps_cur: list[Keypoint],
    kps_ref: list[Keypoint],
    luma_cur: np.ndarray,
    luma_ref: np.ndarray,
    patch_radius: int = PATCH_RADIUS,
) -> list[Match]:
    """SAD patch matching with ratio test, search radius, and mutual-best filter."""
    if not kps_cur or not kps_ref:
        return []
    pc = _patches(luma_cur, kps_cur, patch_radius)
    pr = _patches(luma_ref, kps_ref, patch_radius)
    cxy = np.array([(k.x, k.y) for k in kps_cur], np.float64)
    rxy = np.array([(k.x, k.y) for k in kps_ref], np.float64)
    dist2 = ((cxy[:, None, :] - rxy[None, :, :]) ** 2).sum(axis=2)
    reachable = dist2 <= MATCH_MAX_DIST ** 2
    sad = np.abs(pc[:, None, :] - pr[None, :, :]).sum(axis=2).astype(np.float64)
    sad[~reachable] = np.inf

    best_ref = sad.argmin(axis=1)
    best_cur = sad.argmin(axis=0)
    matches = []
    for i, j in enumerate(best_ref):
        s = sad[i, j]
        if not np.isfinite(s) or best_cur[j] != i:
            continue
        row = sad[i].copy()
        row[j] = np.inf
        second = row.min()
        if np.isfinite(second):
            if second == 0.0:  # duplicate zero-cost candidates: ambiguous
                continue
            if s / second > MATCH_RATIO:
                continue
        matches.append(Match(kps_cur[i], kps_ref[int(j)], float(s)))
    return matches


# ---------------------------------------------------------------------------
# RANSAC affine fitting
# ---------------------------------------------------------------------------

def _canonical(matches: list[Match]) -> list[Match]:
    return sorted(matches, key=lambda m: (m.kp_cur.x, m.kp_cur.y, m.kp_ref.x, m.kp_ref.y))


def _solve_affine(src: np.ndarray, dst: np.ndarray) -> AffineModel | None:
    """Least-squares affine from Nx2 correspondences; None when degenerate."""
    n = len(src)
    a = np.column_stack([src, np.ones(n)])
    try:
        sol_x, *_ = np.linalg.lstsq(a, dst[:, 0], rcond=None)
        sol_y, *_ = np.linalg.lstsq(a, dst[:, 1], rcond=None)
    except np.linalg.LinAlgError:
        return None
    try:
        return AffineModel(sol_x[0], sol_x[1], sol_y[0], sol_y[1], sol_x[2], sol_y[2])
    except NoModelError:
        return None


def ransac_affine(
    matches: list[Match],
    iters: int = RANSAC_ITERS,
    inlier_tol: float = RANSAC_TOL,
    seed: int = 0,
) -> tuple[AffineModel, list[Match]]:
    """Robust affine fit: minimal 3-point samples, inlier counting, LS refit.

    Deterministic for a given seed. Raises NoModelError with < 3 matches or
    when every sample is degenerate; callers fall back to conventional coding.
    """
    if len(matches) < 3:
        raise NoModelError(f"need >= 3 matches, got {len(matches)}")
    matches = _canonical(matches)
    src = np.array([(m.kp_cur.x, m.kp_cur.y) for m in matches], np.float64)
    dst = np.array([(m.kp_ref.x, m.kp_ref.y) for m in matches], np.float64)
    n = len(matches)

    rng = np.random.default_rng(seed)
    samples = np.array([rng.choice(n, 3, replace=False) for _ in range(iters)])
    s_src = src[samples]  # iters x 3 x 2
    s_dst = dst[samples]
    a = np.concatenate([s_src, np.ones((iters, 3, 1))], axis=2)  # iters x 3 x 3
    dets = np.linalg.det(a)
    ok = np.abs(dets) > 1e-9
    if not ok.any():
        raise NoModelError("all RANSAC samples degenerate")
    params = np.zeros((iters, 6))
    sol = np.linalg.solve(a[ok], s_dst[ok])  # k x 3 x 2: columns (a,b,tx) and (c,d,ty)
    params[ok] = sol.transpose(0, 2, 1).reshape(-1, 6)

    px = params[:, 0:1] * src[:, 0] + params[:, 1:2] * src[:, 1] + params[:, 2:3]
    py = params[:, 3:4] * src[:, 0] + params[:, 4:5] * src[:, 1] + params[:, 5:6]
    err2 = (px - dst[:, 0]) ** 2 + (py - dst[:, 1]) ** 2
    inliers = (err2 <= inlier_tol ** 2) & ok[:, None]
    counts = inliers.sum(axis=1)
    best = int(np.argmax(counts))  # first best wins ties
    if counts[best] < 3:
        raise NoModelError("no sample produced >= 3 inliers")
    inlier_idx = np.nonzero(inliers[best])[0]
    model = _solve_affine(src[inlier_idx], dst[inlier_idx])
    if model is None:
        raise NoModelError("refit on inlier set degenerate")
    return model, [matches[i] for i in inlier_idx]


def estimate_texture_motion(
    cur_frame: Frame,
    ref_frame: Frame,
    cur_mask: TextureMask,
    ref_mask: TextureMask,
    seed: int = 0,
    fast_threshold: int = FAST_THRESHOLD,
    ransac_iters: int = RANSAC_ITERS,
    ransac_tol: float = RANSAC_TOL,
) -> AffineModel:
    """Frame-level affine texture motion between two frames.

    Corners are detected only inside each frame's texture region, so moving
    foreground objects outside the region cannot pollute the model. The
    resulting parameters stand in for global motion in the frame header.
    """
    return estimate_texture_motion_detailed(
        cur_frame, ref_frame, cur_mask, ref_mask, seed,
        fast_threshold, ransac_iters, ransac_tol)[0]


def estimate_texture_motion_detailed(
    cur_frame: Frame,
    ref_frame: Frame,
    cur_mask: TextureMask,
    ref_mask: TextureMask,
    seed: int = 0,
    fast_threshold: int = FAST_THRESHOLD,
    ransac_iters: int = RANSAC_ITERS,
    ransac_tol: float = RANSAC_TOL,
) -> tuple[AffineModel, int]:
    """estimate_texture_motion plus the surviving inlier count (for logging)."""
    if cur_mask.texture_block_count() == 0 or ref_mask.texture_block_count() == 0:
        raise NoModelError("texture region empty in current or reference frame")
    kps_cur = _top_keypoints(detect_fast(cur_frame.y, cur_mask, fast_threshold))
    kps_ref = _top_keypoints(detect_fast(ref_frame.y, ref_mask, fast_threshold))
    matches = match_features(kps_cur, kps_ref, cur_frame.y, ref_frame.y)
    model, inliers = ransac_affine(matches, iters=ransac_iters, inlier_tol=ransac_tol, seed=seed)
    bound = float(max(cur_frame.width, cur_frame.height))
    if abs(model.tx) > bound or abs(model.ty) > bound:
        raise NoModelError(f"translation out of range: ({model.tx:.1f}, {model.ty:.1f})")
    return model, len(inliers)


def models_to_csv(rows) -> str:
    """CSV log of per-(frame, reference) models.

    rows: iterable of (frame_display, ref_display, AffineModel, inlier_count).
    """
    lines = ["frame,ref,a,b,c,d,tx,ty,inlier_count"]
    for frame, ref, model, inliers in rows:
        a, b, c, d, tx, ty = model.as_tuple()
        lines.append(f"{frame},{ref},{a:.8f},{b:.8f},{c:.8f},{d:.8f},{tx:.4f},{ty:.4f},{inliers}")
    return "\n".join(lines) + "\n"


def _top_keypoints(kps: list[Keypoint], cap: int = MAX_KEYPOINTS) -> list[Keypoint]:
    if len(kps) <= cap:
        return kps
    return sorted(kps, key=lambda k: (-k.score, k.y, k.x))[:cap]
