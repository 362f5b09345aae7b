"""FAST detection, matching, RANSAC fitting, texture motion estimation."""

import numpy as np
import pytest

from texlab.core import BlockGrid, TextureMask, frame_from_planes
from texlab.motion import (AffineModel, Keypoint, Match, NoModelError, detect_fast,
                           estimate_texture_motion, match_features, ransac_affine)


def full_mask(width, height):
    g = BlockGrid(width, height)
    return TextureMask(g, np.zeros((g.rows, g.cols), np.int16))


CIRCLE = [
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
]


def fast_loop_oracle(luma, t):
    """Naive segment-test: per-pixel circle walk plus the same score + NMS rules."""
    h, w = luma.shape
    p = luma.astype(int)
    score = np.zeros((h, w))
    for y in range(3, h - 3):
        for x in range(3, w - 3):
            ring = [p[y + dy, x + dx] for dx, dy in CIRCLE]
            best = 0.0
            for start in range(16):
                arc = [ring[(start + k) % 16] for k in range(9)]
                if all(v > p[y, x] + t for v in arc):
                    best = max(best, sum(v - p[y, x] - t for v in arc))
                if all(v < p[y, x] - t for v in arc):
                    best = max(best, sum(p[y, x] - t - v for v in arc))
            score[y, x] = best
    kps = []
    for y in range(h):
        for x in range(w):
            s = score[y, x]
            if s <= 0:
                continue
            ok = True
            for ny in range(y - 1, y + 2):
                for nx in range(x - 1, x + 2):
                    if (ny, nx) == (y, x) or not (0 <= ny < h and 0 <= nx < w):
                        continue
                    if score[ny, nx] > s or (score[ny, nx] == s and (ny, nx) < (y, x)):
                        ok = False
            if ok:
                kps.append((x, y, s))
    return kps


class TestDetectFast:
    def test_constant_image_no_corners(self):
        assert detect_fast(np.full((64, 64), 80, np.uint8), None, 20) == []

    def test_single_bright_dot(self):
        luma = np.zeros((64, 64), np.uint8)
        luma[16, 16] = 255
        kps = detect_fast(luma, full_mask(64, 64), 20)
        assert len(kps) == 1 and (kps[0].x, kps[0].y) == (16, 16)
        # the loop oracle agrees exactly
        assert [(k.x, k.y, k.score) for k in kps] == fast_loop_oracle(luma, 20)

    def test_matches_loop_oracle_on_texture(self):
        rng = np.random.default_rng(21)
        luma = np.clip(rng.normal(128, 50, (48, 48)), 0, 255).astype(np.uint8)
        got = [(k.x, k.y, k.score) for k in detect_fast(luma, None, 20)]
        want = fast_loop_oracle(luma, 20)
        assert got == want

    def test_region_restriction(self):
        rng = np.random.default_rng(22)
        luma = np.clip(rng.normal(128, 50, (64, 64)), 0, 255).astype(np.uint8)
        g = BlockGrid(64, 64)
        labels = np.full((2, 2), -1, np.int16)
        labels[0, 0] = 0
        mask = TextureMask(g, labels)
        kps = detect_fast(luma, mask, 20)
        assert kps and all(k.x < 32 and k.y < 32 for k in kps)

    def test_empty_region_empty_list(self):
        rng = np.random.default_rng(23)
        luma = np.clip(rng.normal(128, 50, (64, 64)), 0, 255).astype(np.uint8)
        g = BlockGrid(64, 64)
        mask = TextureMask(g, np.full((2, 2), -1, np.int16))
        assert detect_fast(luma, mask, 20) == []

    def test_threshold_validated(self):
        with pytest.raises(ValueError):
            detect_fast(np.zeros((16, 16), np.uint8), None, 0)


class TestMatchFeatures:
    def test_identical_frames_self_match(self):
        rng = np.random.default_rng(24)
        luma = np.clip(rng.normal(128, 50, (64, 64)), 0, 255).astype(np.uint8)
        kps = detect_fast(luma, None, 20)
        matches = match_features(kps, kps, luma, luma)
        assert len(matches) == len(kps)
        for m in matches:
            assert (m.kp_cur.x, m.kp_cur.y) == (m.kp_ref.x, m.kp_ref.y)
            assert m.distance == 0.0

    def test_translated_copy_displacement(self):
        rng = np.random.default_rng(25)
        base = np.clip(rng.normal(128, 50, (64, 80)), 0, 255).astype(np.uint8)
        cur = base[:, 3:67]
        ref = base[:, 0:64]
        kc = detect_fast(cur, None, 20)
        kr = detect_fast(ref, None, 20)
        matches = match_features(kc, kr, cur, ref)
        assert len(matches) >= 10
        for m in matches:
            assert (m.kp_ref.x - m.kp_cur.x, m.kp_ref.y - m.kp_cur.y) == (3, 0)

    def test_unrelated_noise_mostly_rejected(self):
        rng = np.random.default_rng(26)
        a = np.clip(rng.normal(128, 50, (64, 64)), 0, 255).astype(np.uint8)
        b = np.clip(rng.normal(128, 50, (64, 64)), 0, 255).astype(np.uint8)
        ka = detect_fast(a, None, 20)
        kb = detect_fast(b, None, 20)
        matches = match_features(ka, kb, a, b)
        assert len(matches) <= 0.1 * len(ka)


def synth_matches(model, n=50, seed=0, span=300.0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(10, span, (n, 2))
    mapped = model.apply(pts)
    return [Match(Keypoint(float(px), float(py), 1.0), Keypoint(float(qx), float(qy), 1.0), 0.0)
            for (px, py), (qx, qy) in zip(pts, mapped)]


class TestRansac:
    TRUTH = AffineModel(1.02, 0.01, -0.004, 0.985, 4.5, -2.25)

    def test_exact_recovery_within_1e6(self):
        matches = synth_matches(self.TRUTH, seed=30)
        model, inliers = ransac_affine(matches, seed=1)
        for got, want in zip(model.as_tuple(), self.TRUTH.as_tuple()):
            assert abs(got - want) <= 1e-6
        assert len(inliers) == 50

    def test_forty_percent_outliers(self):
        clean = synth_matches(self.TRUTH, seed=31)
        rng = np.random.default_rng(32)
        outliers = []
        for _ in range(33):  # 33 / 83 ~ 40%
            p = rng.uniform(10, 300, 2)
            q = self.TRUTH.apply(p[None])[0] + rng.uniform(8, 60, 2) * rng.choice([-1, 1], 2)
            outliers.append(Match(Keypoint(float(p[0]), float(p[1]), 1.0),
                                  Keypoint(float(q[0]), float(q[1]), 1.0), 0.0))
        model, inliers = ransac_affine(clean + outliers, seed=2)
        assert set(map(id, inliers)) == set(map(id, clean)) or \
            {(m.kp_cur.x, m.kp_cur.y) for m in inliers} == {(m.kp_cur.x, m.kp_cur.y) for m in clean}
        for got, want in zip(model.as_tuple(), self.TRUTH.as_tuple()):
            assert abs(got - want) <= 1e-3

    def test_identity_correspondences(self):
        matches = synth_matches(AffineModel.identity(), seed=33)
        model, _ = ransac_affine(matches, seed=3)
        assert np.allclose(model.as_tuple(), (1, 0, 0, 1, 0, 0), atol=1e-9)

    def test_too_few_matches(self):
        with pytest.raises(NoModelError):
            ransac_affine(synth_matches(self.TRUTH)[:2], seed=4)

    def test_permutation_invariant(self):
        matches = synth_matches(self.TRUTH, seed=34)
        rng = np.random.default_rng(35)
        shuffled = list(matches)
        rng.shuffle(shuffled)
        m1, _ = ransac_affine(matches, seed=5)
        m2, _ = ransac_affine(shuffled, seed=5)
        assert m1.as_tuple() == m2.as_tuple()

    def test_inverse_composition_bound(self):
        matches = synth_matches(self.TRUTH, seed=36)
        model, inliers = ransac_affine(matches, seed=6, inlier_tol=1.5)
        det = model.det
        inv = AffineModel(model.d / det, -model.b / det, -model.c / det, model.a / det,
                          (model.b * model.ty - model.d * model.tx) / det,
                          (model.c * model.tx - model.a * model.ty) / det)
        pts = np.array([(m.kp_cur.x, m.kp_cur.y) for m in inliers])
        back = inv.apply(model.apply(pts))
        assert np.max(np.hypot(*(back - pts).T)) <= 2 * 1.5

    def test_degenerate_model_rejected(self):
        with pytest.raises(NoModelError):
            AffineModel(0.0, 0.0, 0.0, 0.0, 1.0, 1.0)


class TestEstimateTextureMotion:
    def _make_frame(self, luma):
        h, w = luma.shape
        return frame_from_planes(luma, np.full((h // 2, w // 2), 128, np.uint8),
                                 np.full((h // 2, w // 2), 128, np.uint8))

    def test_static_scene_identity(self):
        rng = np.random.default_rng(40)
        luma = np.clip(rng.normal(128, 55, (96, 96)), 0, 255).astype(np.uint8)
        frame = self._make_frame(luma)
        mask = full_mask(96, 96)
        model = estimate_texture_motion(frame, frame, mask, mask, seed=7)
        assert np.allclose(model.as_tuple(), (1, 0, 0, 1, 0, 0), atol=1e-6)

    def test_global_pan_recovered(self):
        rng = np.random.default_rng(41)
        base = np.clip(rng.normal(128, 55, (96, 110)), 0, 255).astype(np.uint8)
        cur = self._make_frame(base[:, 4:100])
        ref = self._make_frame(base[:, 0:96])
        mask = full_mask(96, 96)
        model = estimate_texture_motion(cur, ref, mask, mask, seed=8)
        assert abs(model.tx - 4.0) <= 0.1
        assert abs(model.ty) <= 0.1
        assert abs(model.a - 1) <= 0.01 and abs(model.d - 1) <= 0.01

    def test_foreground_object_excluded(self):
        rng = np.random.default_rng(42)
        base = np.clip(rng.normal(128, 55, (96, 110)), 0, 255).astype(np.uint8)
        cur_l = base[:, 4:100].copy()
        ref_l = base[:, 0:96].copy()
        # object moves opposite to the texture pan, in non-texture blocks
        cur_l[64:96, 0:32] = 0
        ref_l[64:96, 0:32] = 0
        cur_l[70:80, 8:18] = 250
        ref_l[70:80, 14:24] = 250
        g = BlockGrid(96, 96)
        labels = np.zeros((3, 3), np.int16)
        labels[2, 0] = -1  # object block is non-texture
        mask = TextureMask(g, labels)
        model = estimate_texture_motion(self._make_frame(cur_l), self._make_frame(ref_l),
                                        mask, mask, seed=9)
        assert abs(model.tx - 4.0) <= 0.2  # texture pan, not the object motion

    def test_empty_region_raises(self):
        rng = np.random.default_rng(43)
        luma = np.clip(rng.normal(128, 55, (64, 64)), 0, 255).astype(np.uint8)
        frame = self._make_frame(luma)
        g = BlockGrid(64, 64)
        empty = TextureMask(g, np.full((2, 2), -1, np.int16))
        with pytest.raises(NoModelError):
            estimate_texture_motion(frame, frame, empty, empty, seed=10)
