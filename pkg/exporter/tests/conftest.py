import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def bright_square_image(tmp_path):
    """64x48 PNG: dark background, bright block in the upper-left."""
    rng = np.random.default_rng(7)
    arr = rng.integers(10, 40, size=(48, 64, 3)).astype(np.uint8)  # (H, W, 3)
    arr[4:20, 8:24] = rng.integers(200, 255, size=(16, 16, 3))
    path = tmp_path / "img.png"
    Image.fromarray(arr).save(path)
    return path
