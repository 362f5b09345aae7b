"""Mask refinement: clustering, voting rules, component pruning."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from texlab.core import BlockGrid, NON_TEXTURE, TextureMask, frame_from_planes
from texlab.refine import (InputError, adaptive_kmeans_cluster, remove_small_components,
                           refine_sequence, spatial_correct, temporal_correct)
from oracles.flood_fill import prune_small


def mask_of(labels, frame_index=0):
    labels = np.asarray(labels, np.int16)
    return TextureMask(BlockGrid(labels.shape[1] * 32, labels.shape[0] * 32), labels, frame_index)


def frame_with_blocks(grid_rows, grid_cols, block_pixels):
    """Build a frame where block (r, c) is filled from block_pixels[r][c] = (y, u, v, noise)."""
    rng = np.random.default_rng(77)
    h, w = grid_rows * 32, grid_cols * 32
    y = np.zeros((h, w), np.float64)
    u = np.zeros((h // 2, w // 2), np.float64)
    v = np.zeros((h // 2, w // 2), np.float64)
    for r in range(grid_rows):
        for c in range(grid_cols):
            ym, um, vm, sigma = block_pixels[r][c]
            y[r * 32:(r + 1) * 32, c * 32:(c + 1) * 32] = ym + rng.normal(0, sigma, (32, 32))
            u[r * 16:(r + 1) * 16, c * 16:(c + 1) * 16] = um
            v[r * 16:(r + 1) * 16, c * 16:(c + 1) * 16] = vm
    return frame_from_planes(y.clip(0, 255), u.clip(0, 255), v.clip(0, 255))


class TestAdaptiveKmeans:
    def test_uniform_region_single_cluster(self):
        spec = [[(120, 100, 100, 3)] * 4 for _ in range(2)]
        frame = frame_with_blocks(2, 4, spec)
        mask = mask_of(np.zeros((2, 4)))
        out = adaptive_kmeans_cluster(frame, mask)
        assert set(np.unique(out.labels)) == {0}

    def test_two_color_regions_split(self):
        # grass-vs-water stand-in: two feature-separable block populations
        spec = [[(90, 80, 90, 4)] * 4, [(170, 170, 60, 4)] * 4]
        frame = frame_with_blocks(2, 4, spec)
        mask = mask_of(np.zeros((2, 4)))
        out = adaptive_kmeans_cluster(frame, mask)
        top = set(out.labels[0].tolist())
        bottom = set(out.labels[1].tolist())
        assert len(top) == 1 and len(bottom) == 1 and top != bottom
        assert self._matches_exhaustive_two_means(frame, mask, out)

    @staticmethod
    def _matches_exhaustive_two_means(frame, mask, out):
        """Best 2-partition by total within-cluster squared distance, brute force."""
        from texlab.refine import _block_features
        feats, cells = _block_features(frame, mask)
        n = len(feats)
        best_cost, best_assign = None, None
        for bits in range(1, 2 ** n - 1):
            assign = np.array([(bits >> i) & 1 for i in range(n)])
            cost = 0.0
            for k in (0, 1):
                pts = feats[assign == k]
                cost += ((pts - pts.mean(axis=0)) ** 2).sum()
            if best_cost is None or cost < best_cost:
                best_cost, best_assign = cost, assign
        got = np.array([out.labels[r, c] for r, c in cells])
        return (np.array_equal(got, best_assign) or np.array_equal(got, 1 - best_assign))

    def test_empty_texture_identity(self):
        frame = frame_with_blocks(2, 2, [[(100, 128, 128, 2)] * 2] * 2)
        mask = mask_of(np.full((2, 2), NON_TEXTURE))
        out = adaptive_kmeans_cluster(frame, mask)
        assert np.array_equal(out.labels, mask.labels)


class TestTemporalCorrect:
    def test_majority_two_of_three(self):
        prev = mask_of([[0]])
        cur = mask_of([[0]], 1)
        nxt = mask_of([[NON_TEXTURE]], 2)
        out = temporal_correct(prev, cur, nxt)
        assert out.labels[0, 0] == 0

    def test_identity_on_equal_masks(self):
        m = mask_of([[0, NON_TEXTURE], [1, 2]])
        out = temporal_correct(m, m, m)
        assert np.array_equal(out.labels, m.labels)

    def test_single_frame_spike_removed(self):
        prev = mask_of([[NON_TEXTURE]])
        cur = mask_of([[0]], 1)
        nxt = mask_of([[NON_TEXTURE]], 2)
        assert temporal_correct(prev, cur, nxt).labels[0, 0] == NON_TEXTURE

    def test_exhaustive_truth_table(self):
        for p, c, n in itertools.product([False, True], repeat=3):
            prev = mask_of([[0 if p else NON_TEXTURE]])
            cur = mask_of([[1 if c else NON_TEXTURE]], 1)
            nxt = mask_of([[2 if n else NON_TEXTURE]], 2)
            out = temporal_correct(prev, cur, nxt).labels[0, 0]
            expect_texture = (p + c + n) >= 2
            assert (out >= 0) == expect_texture
            if expect_texture:
                # middle's id when it agrees, else nearest agreeing neighbor (prev first)
                assert out == (1 if c else (0 if p else 2))

    def test_cluster_id_from_neighbor_when_filled(self):
        prev = mask_of([[3]])
        cur = mask_of([[NON_TEXTURE]], 1)
        nxt = mask_of([[5]], 2)
        assert temporal_correct(prev, cur, nxt).labels[0, 0] == 3


class TestSpatialCorrect:
    def test_hole_surrounded_filled(self):
        labels = np.array([
            [NON_TEXTURE, 0, NON_TEXTURE],
            [0, NON_TEXTURE, 0],
            [NON_TEXTURE, 0, NON_TEXTURE],
        ])
        out = spatial_correct(mask_of(labels))
        assert out.labels[1, 1] == 0

    def test_all_nontexture_unchanged(self):
        m = mask_of(np.full((3, 3), NON_TEXTURE))
        assert np.array_equal(spatial_correct(m).labels, m.labels)

    def test_corner_two_of_two(self):
        labels = np.full((3, 3), NON_TEXTURE, np.int16)
        labels[0, 1] = 0
        labels[1, 0] = 0
        out = spatial_correct(mask_of(labels))
        assert out.labels[0, 0] == 0

    def test_exhaustive_neighborhood_rule(self):
        # every position class x every existing-neighbor combination
        for pos in [(0, 0), (0, 1), (1, 1)]:  # corner, edge, interior on a 3x3 grid
            r0, c0 = pos
            neighbors = [(r0 - 1, c0), (r0 + 1, c0), (r0, c0 - 1), (r0, c0 + 1)]
            existing = [(r, c) for r, c in neighbors if 0 <= r < 3 and 0 <= c < 3]
            n = len(existing)
            for bits in range(2 ** n):
                labels = np.full((3, 3), NON_TEXTURE, np.int16)
                tex_count = 0
                for i, (r, c) in enumerate(existing):
                    if (bits >> i) & 1:
                        labels[r, c] = 0
                        tex_count += 1
                out = spatial_correct(mask_of(labels))
                need = -(-3 * n // 4)
                assert (out.labels[r0, c0] >= 0) == (tex_count >= need), (pos, bits)

    def test_never_removes_texture(self):
        rng = np.random.default_rng(8)
        labels = rng.choice([NON_TEXTURE, 0, 1], size=(6, 8))
        out = spatial_correct(mask_of(labels))
        assert np.all(out.labels[labels >= 0] == labels[labels >= 0])

    def test_mode_tie_takes_smallest_id(self):
        labels = np.array([
            [NON_TEXTURE, 7, NON_TEXTURE],
            [2, NON_TEXTURE, 2],
            [NON_TEXTURE, 7, NON_TEXTURE],
        ])
        out = spatial_correct(mask_of(labels))
        assert out.labels[1, 1] == 2


class TestRemoveSmallComponents:
    def test_lone_block_removed(self):
        labels = np.full((3, 3), NON_TEXTURE, np.int16)
        labels[1, 1] = 0
        out = remove_small_components(mask_of(labels))
        assert out.texture_block_count() == 0

    def test_five_block_plus_kept(self):
        labels = np.full((3, 3), NON_TEXTURE, np.int16)
        for r, c in [(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)]:
            labels[r, c] = 0
        out = remove_small_components(mask_of(labels))
        assert out.texture_block_count() == 5

    def test_matches_flood_fill_oracle_on_random_masks(self):
        rng = np.random.default_rng(9)
        for _ in range(1000):
            rows = int(rng.integers(2, 10))
            cols = int(rng.integers(2, 12))
            tex = rng.random((rows, cols)) < rng.uniform(0.2, 0.8)
            labels = np.where(tex, 0, NON_TEXTURE).astype(np.int16)
            got = remove_small_components(mask_of(labels)).texture
            want = np.array(prune_small(tex.tolist(), 5))
            assert np.array_equal(got, want)

    @given(st.integers(0, 2 ** 30 - 1))
    @settings(max_examples=40, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        tex = rng.random((6, 8)) < 0.5
        labels = np.where(tex, 0, NON_TEXTURE).astype(np.int16)
        once = remove_small_components(mask_of(labels))
        twice = remove_small_components(once)
        assert np.array_equal(once.labels, twice.labels)

    def test_min_blocks_validated(self):
        with pytest.raises(InputError):
            remove_small_components(mask_of([[0]]), min_blocks=0)


class TestRefineSequence:
    def _frames(self, n, rows=2, cols=6):
        spec = [[(100, 128, 128, 40)] * cols for _ in range(rows)]
        return [frame_with_blocks(rows, cols, spec) for _ in range(n)]

    def test_all_nontexture_unchanged(self):
        frames = self._frames(3)
        raw = [mask_of(np.full((2, 6), NON_TEXTURE), i) for i in range(3)]
        out = refine_sequence(frames, raw)
        for m in out.masks:
            assert m.texture_block_count() == 0

    def test_single_frame_flicker_removed(self):
        frames = self._frames(3)
        full = np.zeros((2, 6), np.int16)
        hole = full.copy()
        hole[1, 3] = NON_TEXTURE
        raw = [mask_of(full, 0), mask_of(hole, 1), mask_of(full, 2)]
        out = refine_sequence(frames, raw)
        assert out[1].labels[1, 3] >= 0  # temporal vote restores the block

    def test_constant_masks_reduce_to_spatial_effects(self):
        frames = self._frames(4)
        labels = np.zeros((2, 6), np.int16)
        raw = [mask_of(labels, i) for i in range(4)]
        out = refine_sequence(frames, raw)
        for m in out.masks:
            assert np.all(m.texture)

    def test_every_component_large_after_refine(self):
        rng = np.random.default_rng(10)
        frames = self._frames(5, rows=4, cols=6)
        raw = []
        for i in range(5):
            tex = rng.random((4, 6)) < 0.5
            raw.append(mask_of(np.where(tex, 0, NON_TEXTURE), i))
        out = refine_sequence(frames, raw)
        for m in out.masks:
            pruned = remove_small_components(m)
            assert np.array_equal(pruned.labels, m.labels)

    def test_length_mismatch(self):
        frames = self._frames(3)
        with pytest.raises(InputError):
            refine_sequence(frames, [mask_of(np.zeros((2, 6)), 0)])
