import numpy as np
import pytest

from cyltouch.types import FeatureMap, GridShape, IntentLabel, TactileWindow


@pytest.fixture
def shape():
    return GridShape(11, 5)


def random_feature_map(rng, shape=GridShape(11, 5)):
    """Structurally valid random feature map (max >= mean, std >= 0)."""
    mean = rng.random((shape.rows, shape.cols))
    vmax = mean + rng.random((shape.rows, shape.cols)) * 0.2
    std = rng.random((shape.rows, shape.cols)) * 0.1
    grad = rng.random((shape.rows, shape.cols)) * 0.3
    return FeatureMap(shape, np.stack([mean, vmax, std, grad]))


def random_window(rng, shape=GridShape(11, 5), n_frames=45):
    return TactileWindow(shape, rng.random((n_frames, shape.rows, shape.cols)))


def toy_raw_dataset(rng, shape=GridShape(11, 5), per_class=4, n_frames=12):
    from cyltouch.dataset import LabeledDataset
    from cyltouch.types import LABELS

    items = []
    for label in LABELS:
        base = rng.random((shape.rows, shape.cols)) * 0.5
        for _ in range(per_class):
            vals = np.clip(base + rng.normal(0, 0.05, (n_frames, shape.rows, shape.cols)), 0, 1)
            items.append((TactileWindow(shape, vals), label))
    return LabeledDataset("raw", items, {"source": "test"})
