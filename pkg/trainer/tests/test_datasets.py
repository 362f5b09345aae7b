"""Patch extraction and dataset bookkeeping."""

import numpy as np
import pytest
from PIL import Image

from textrain.datasets import (NON_TEXTURE, TEXTURE, PatchDataset, concat,
                               nontexture_patch_from_image, prepare_nontexture_patches,
                               prepare_texture_patches, texture_patches_from_image)


class TestTexturePatches:
    def test_one_512_image_yields_21_patches(self, texture_image_dir):
        data = prepare_texture_patches(texture_image_dir)
        assert len(data.patches) == 2 * (1 + 4 + 16)
        assert np.all(data.labels == TEXTURE)

    def test_constant_color_passes_through(self):
        rgb = np.full((512, 512, 3), 77, np.uint8)
        crops = texture_patches_from_image(rgb)
        assert len(crops) == 21
        for c in crops:
            assert np.allclose(c, 77 / 255.0)

    def test_undersized_image_skipped_with_warning(self, tmp_path):
        d = tmp_path / "small"
        d.mkdir()
        Image.fromarray(np.zeros((256, 256, 3), np.uint8)).save(d / "small.png")
        Image.fromarray(np.zeros((512, 512, 3), np.uint8)).save(d / "big.png")
        with pytest.warns(UserWarning):
            data = prepare_texture_patches(d)
        assert len(data.patches) == 21
        assert data.skipped == 1

    def test_corrupt_file_skipped_and_counted(self, texture_image_dir):
        (texture_image_dir / "broken.png").write_bytes(b"not an image")
        data = prepare_texture_patches(texture_image_dir)
        assert data.skipped == 1
        assert len(data.patches) == 42

    def test_values_in_unit_range(self, texture_image_dir):
        data = prepare_texture_patches(texture_image_dir)
        assert data.patches.min() >= 0.0 and data.patches.max() <= 1.0


class TestNonTexturePatches:
    def test_one_patch_per_image(self, scene_image_dir):
        data = prepare_nontexture_patches(scene_image_dir)
        assert len(data.patches) == 3
        assert np.all(data.labels == NON_TEXTURE)

    def test_center_crop_square_shape(self):
        rgb = np.zeros((240, 320, 3), np.uint8)
        rgb[:, 40:280] = 200  # the centered square region
        patch = nontexture_patch_from_image(rgb)
        assert patch.shape == (32, 32, 3)
        assert np.allclose(patch, 200 / 255.0)

    def test_empty_dir_errors(self, tmp_path):
        d = tmp_path / "empty"
        d.mkdir()
        with pytest.raises(ValueError):
            prepare_nontexture_patches(d)


class TestDatasetInvariants:
    def test_split_disjoint_and_complete(self, corpus):
        data = PatchDataset(corpus.patches.copy(), corpus.labels.copy()).split(seed=3)
        train = set(data.train_idx.tolist())
        val = set(data.val_idx.tolist())
        assert not train & val
        assert train | val == set(range(len(data.patches)))

    def test_class_counts(self, corpus):
        n_non, n_tex = corpus.class_counts
        assert (n_non, n_tex) == (100, 100)

    def test_concat_preserves_counts(self, corpus):
        merged = concat(corpus, corpus)
        assert merged.class_counts == (200, 200)

    def test_shape_validated(self):
        with pytest.raises(ValueError):
            PatchDataset(np.zeros((4, 16, 16, 3), np.float32), np.zeros(4, np.int64))
