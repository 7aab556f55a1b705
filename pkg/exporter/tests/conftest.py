import numpy as np
import pytest
from PIL import Image

from embedding_exporter import Backbone, register_backbone

STUB_BACKBONE = "test-pixel-patch"
STUB_DIM = 8 * 8 * 3


def _stub_factory() -> Backbone:
    """Torch-free backbone: 8x8 RGB downsample, flattened to unit range."""

    def preprocess(img):
        small = img.resize((8, 8), Image.BILINEAR)
        return np.asarray(small, dtype=np.float32).reshape(-1) / 255.0

    def embed_batch(inputs):
        return np.stack(inputs).astype(np.float32)

    return Backbone(STUB_BACKBONE, STUB_DIM, preprocess, embed_batch)


register_backbone(STUB_BACKBONE, _stub_factory, overwrite=True)


@pytest.fixture(scope="session")
def image_tree(tmp_path_factory):
    """Two-class directory dataset: cat/{0,1,2}.png, dog/{0,1,2}.png."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(5)
    for cls in ("cat", "dog"):
        (root / cls).mkdir()
        for i in range(3):
            arr = rng.integers(0, 256, size=(32, 32, 3), dtype=np.uint8)
            Image.fromarray(arr).save(root / cls / f"{i}.png")
    return root


@pytest.fixture(scope="session")
def flat_dir(tmp_path_factory):
    """A directory holding a single image directly (no class folders)."""
    root = tmp_path_factory.mktemp("flat")
    arr = np.zeros((16, 16, 3), dtype=np.uint8)
    arr[:, :8] = 255
    Image.fromarray(arr).save(root / "only.png")
    return root
