import numpy as np
import pytest
from PIL import Image

from textrain.synth import synthetic_corpus


@pytest.fixture(scope="session")
def corpus():
    return synthetic_corpus(100, 100, seed=42)


@pytest.fixture()
def texture_image_dir(tmp_path):
    rng = np.random.default_rng(1)
    d = tmp_path / "textures"
    d.mkdir()
    for i in range(2):
        img = rng.integers(0, 256, (512, 512, 3), np.uint8)
        Image.fromarray(img).save(d / f"tex_{i}.png")
    return d


@pytest.fixture()
def scene_image_dir(tmp_path):
    rng = np.random.default_rng(2)
    d = tmp_path / "scenes"
    d.mkdir()
    for i, size in enumerate([(240, 320), (300, 300), (400, 250)]):
        img = rng.integers(0, 256, (*size, 3), np.uint8)
        Image.fromarray(img).save(d / f"scene_{i}.png")
    return d
