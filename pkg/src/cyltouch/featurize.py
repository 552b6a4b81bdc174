"""Collapse a one-second tactile window into a 4-channel feature map.

Per cell: temporal mean, temporal max, temporal (population) std, and the
spatial gradient magnitude of the temporal-mean plane.  The gradient uses
central differences that wrap circularly along the row axis and fall back
to one-sided differences at the first/last column, so the whole map is
equivariant under circular row shifts — the property the cylindrical
kernel relies on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset
from .types import FeatureMap, TactileWindow


@dataclass(frozen=True)
class FeaturizerConfig:
    gradient_mode: str = "central_wrap"
    epsilon: float = 0.0  # added under the sqrt of the std plane

    def __post_init__(self):
        if self.gradient_mode != "central_wrap":
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


DEFAULT_FEATURIZER = FeaturizerConfig()


def _gradient_magnitude(mean_plane: np.ndarray) -> np.ndarray:
    rows, cols = mean_plane.shape
    # circumferential axis wraps: row 0 and row rows-1 are physical neighbours
    g_r = (np.roll(mean_plane, -1, axis=0) - np.roll(mean_plane, 1, axis=0)) / 2.0
    g_c = np.zeros_like(mean_plane)
    if cols >= 2:
        g_c[:, 1:-1] = (mean_plane[:, 2:] - mean_plane[:, :-2]) / 2.0
        g_c[:, 0] = mean_plane[:, 1] - mean_plane[:, 0]
        g_c[:, -1] = mean_plane[:, -1] - mean_plane[:, -2]
    return np.hypot(g_r, g_c)


def featurize(window: TactileWindow, cfg: FeaturizerConfig = DEFAULT_FEATURIZER) -> FeatureMap:
    v = window.values
    if v.shape[0] == 0:
        raise ValueError("cannot featurize an empty window")
    mean = v.mean(axis=0)
    vmax = v.max(axis=0)
    var = v.var(axis=0)  # population variance; the window length is fixed
    std = np.sqrt(var + cfg.epsilon)
    grad = _gradient_magnitude(mean)
    return FeatureMap(window.shape, np.stack([mean, vmax, std, grad]))


def featurize_dataset(ds: LabeledDataset, cfg: FeaturizerConfig = DEFAULT_FEATURIZER) -> LabeledDataset:
    if ds.kind != "raw":
        raise ValueError("featurize_dataset expects a raw dataset")
    items = [(featurize(w, cfg), label) for w, label in ds.items]
    meta = dict(ds.meta)
    meta["featurizer"] = {"gradient_mode": cfg.gradient_mode, "epsilon": cfg.epsilon}
    return LabeledDataset("featurized", items, meta)
