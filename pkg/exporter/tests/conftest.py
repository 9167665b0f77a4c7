import numpy as np
import pytest
from PIL import Image


@pytest.fixture(scope="session")
def image_folder(tmp_path_factory):
    """Tiny 3-class image folder: 4 images per class, distinct solid-ish colors."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    palette = {"apples": (200, 30, 30), "leaves": (30, 180, 40), "sky": (40, 60, 220)}
    for cls, color in palette.items():
        sub = root / cls
        sub.mkdir()
        for i in range(4):
            pixels = np.clip(
                rng.normal(0, 12, size=(32, 32, 3)) + np.asarray(color), 0, 255
            ).astype(np.uint8)
            Image.fromarray(pixels).save(sub / f"img_{i}.png")
    return root
