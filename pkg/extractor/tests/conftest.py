import numpy as np
import pytest
from PIL import Image


@pytest.fixture
def image_dir(tmp_path):
    """Ten small distinct images plus an aligned prompt file."""
    rng = np.random.default_rng(42)
    img_dir = tmp_path / "images"
    img_dir.mkdir()
    names = []
    for i in range(10):
        pixels = rng.integers(0, 256, size=(24, 24, 3), dtype=np.uint8)
        pixels[:, :, 0] = min(20 * i, 255)  # make every image distinct
        name = f"img_{i:02d}.png"
        Image.fromarray(pixels).save(img_dir / name)
        names.append(name)
    prompts = tmp_path / "prompts.txt"
    prompts.write_text("".join(f"a picture number {i}\n" for i in range(10)))
    return img_dir, prompts, names
