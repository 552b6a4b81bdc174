"""Labeled dataset container, validation, splitting and the JSONL file format.

File format (one JSON object per line, UTF-8):

    {"format": "cyltouch-dataset", "version": 1, "meta": {...}}
    {"label": "turn_left", "kind": "raw", "shape": [45, 11, 5], "data": [...]}
    ...

Raw records hold a full window (frames, rows, cols); featurized records hold
a 4-channel feature map (4, rows, cols).  Floats are written with Python's
repr, so a load/save round trip is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .types import (
    FeatureMap,
    GridShape,
    IntentLabel,
    LABELS,
    N_CHANNELS,
    TactileWindow,
)

FORMAT_NAME = "cyltouch-dataset"
FORMAT_VERSION = 1

Payload = Union[TactileWindow, FeatureMap]


@dataclass
class LabeledDataset:
    """Homogeneous collection of (window-or-feature-map, label) pairs."""

    kind: str  # "raw" | "featurized"
    items: list  # list[tuple[Payload, IntentLabel]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("raw", "featurized"):
            raise ValueError(f"kind must be 'raw' or 'featurized', got {self.kind!r}")

    def __len__(self) -> int:
        return len(self.items)

    def payloads(self) -> list:
        return [p for p, _ in self.items]

    def labels(self) -> np.ndarray:
        return np.array([int(l) for _, l in self.items], dtype=np.int64)

    def class_counts(self) -> dict:
        counts = {label: 0 for label in LABELS}
        for _, label in self.items:
            counts[label] += 1
        return counts

    def grid_shape(self) -> GridShape:
        if not self.items:
            raise ValueError("empty dataset has no grid shape")
        return self.items[0][0].shape

    def feature_array(self) -> np.ndarray:
        """Stack featurized payloads into (n, 4, rows, cols)."""
        if self.kind != "featurized":
            raise ValueError("feature_array requires a featurized dataset")
        return np.stack([p.channels for p, _ in self.items])

    def window_array(self) -> np.ndarray:
        """Stack raw payloads into (n, frames, rows, cols)."""
        if self.kind != "raw":
            raise ValueError("window_array requires a raw dataset")
        return np.stack([p.values for p, _ in self.items])

    def subset(self, indices, extra_meta: dict | None = None) -> "LabeledDataset":
        meta = dict(self.meta)
        if extra_meta:
            meta.update(extra_meta)
        return LabeledDataset(self.kind, [self.items[i] for i in indices], meta)

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.meta == other.meta
            and self.items == other.items
        )


@dataclass
class ValidationReport:
    """Accumulated invariant violations; the dataset is valid iff none."""

    violations: list
    class_counts: dict

    @property
    def valid(self) -> bool:
        return not self.violations


def validate_dataset(ds: LabeledDataset) -> ValidationReport:
    """Report every invariant violation instead of raising.

    Checked: payload kind/shape homogeneity, window length consistency,
    finiteness, raw pressures within [0, 1], featurized std >= 0 and
    max >= mean, and absent intent classes.
    """
    violations = []
    counts = {label.name: 0 for label in LABELS}
    ref_shape = None
    ref_frames = None

    for i, (payload, label) in enumerate(ds.items):
        counts[label.name] += 1

        if ds.kind == "raw" and not isinstance(payload, TactileWindow):
            violations.append(f"item {i}: raw dataset holds {type(payload).__name__}")
            continue
        if ds.kind == "featurized" and not isinstance(payload, FeatureMap):
            violations.append(
                f"item {i}: featurized dataset holds {type(payload).__name__}"
            )
            continue

        if ref_shape is None:
            ref_shape = payload.shape
        elif payload.shape != ref_shape:
            violations.append(
                f"item {i}: grid shape {payload.shape.rows}x{payload.shape.cols} "
                f"!= {ref_shape.rows}x{ref_shape.cols}"
            )

        data = payload.values if isinstance(payload, TactileWindow) else payload.channels
        if not np.all(np.isfinite(data)):
            violations.append(f"item {i}: non-finite value")

        if isinstance(payload, TactileWindow):
            if ref_frames is None:
                ref_frames = payload.n_frames
            elif payload.n_frames != ref_frames:
                violations.append(
                    f"item {i}: window length {payload.n_frames} != {ref_frames}"
                )
            finite = data[np.isfinite(data)]
            if finite.size and finite.min() < 0:
                violations.append(f"item {i}: negative pressure")
            if finite.size and finite.max() > 1:
                violations.append(f"item {i}: pressure exceeds 1")
        else:
            from .types import CH_MAX, CH_MEAN, CH_STD

            std = data[CH_STD]
            if np.any(std[np.isfinite(std)] < 0):
                violations.append(f"item {i}: negative std channel")
            both = np.isfinite(data[CH_MAX]) & np.isfinite(data[CH_MEAN])
            # tiny float slack: max is computed from the same samples as mean
            if np.any(data[CH_MAX][both] < data[CH_MEAN][both] - 1e-12):
                violations.append(f"item {i}: max channel below mean channel")

    if ds.items:
        for label in LABELS:
            if counts[label.name] == 0:
                violations.append(f"empty class: {label.name}")

    return ValidationReport(violations, counts)


def split_train_test(
    ds: LabeledDataset,
    train_fraction: float,
    seed: int,
    stratified: bool = False,
):
    """Shuffle globally, then split; deterministic for a given seed.

    ``stratified=True`` splits each class separately instead of globally;
    kept behind this flag for robustness experiments.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(ds)
    if n < 2:
        raise ValueError("need at least 2 samples to split")

    rng = np.random.default_rng(seed)
    if stratified:
        labels = ds.labels()
        train_idx, test_idx = [], []
        for label in LABELS:
            cls = np.flatnonzero(labels == int(label))
            if not cls.size:
                continue
            perm = cls[rng.permutation(cls.size)]
            k = int(round(len(perm) * train_fraction))
            k = min(max(k, 1), len(perm) - 1) if len(perm) > 1 else 1
            train_idx.extend(perm[:k])
            test_idx.extend(perm[k:])
        train_idx = list(np.array(train_idx)[rng.permutation(len(train_idx))])
        test_idx = list(np.array(test_idx)[rng.permutation(len(test_idx))])
    else:
        perm = rng.permutation(n)
        k = int(round(n * train_fraction))
        k = min(max(k, 1), n - 1)
        train_idx = [int(i) for i in perm[:k]]
        test_idx = [int(i) for i in perm[k:]]

    split_info = {"train_fraction": train_fraction, "seed": seed,
                  "stratified": stratified}
    train = ds.subset(train_idx, {"split": {**split_info, "role": "train",
                                            "indices": [int(i) for i in train_idx]}})
    test = ds.subset(test_idx, {"split": {**split_info, "role": "test",
                                          "indices": [int(i) for i in test_idx]}})
    return train, test


def _record_to_item(rec: dict, line_no: int, sample_rate_hz: float):
    label = IntentLabel.from_name(rec["label"])
    kind = rec["kind"]
    shape = rec["shape"]
    data = np.array(rec["data"], dtype=np.float64)
    if kind == "raw":
        if len(shape) != 3:
            raise ValueError(f"line {line_no}: raw shape must be [frames, rows, cols]")
        frames, rows, cols = shape
        payload = TactileWindow(
            GridShape(rows, cols), data.reshape(frames, rows, cols), sample_rate_hz
        )
    elif kind == "featurized":
        if len(shape) != 3 or shape[0] != N_CHANNELS:
            raise ValueError(f"line {line_no}: featurized shape must be [4, rows, cols]")
        _, rows, cols = shape
        payload = FeatureMap(GridShape(rows, cols), data.reshape(N_CHANNELS, rows, cols))
    else:
        raise ValueError(f"line {line_no}: unknown record kind {kind!r}")
    return payload, label, kind


def save_dataset(ds: LabeledDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION,
                             "meta": ds.meta}))
        fh.write("\n")
        for payload, label in ds.items:
            if isinstance(payload, TactileWindow):
                shape = [payload.n_frames, payload.shape.rows, payload.shape.cols]
                data = payload.values
            else:
                shape = [N_CHANNELS, payload.shape.rows, payload.shape.cols]
                data = payload.channels
            rec = {"label": label.name, "kind": ds.kind, "shape": shape,
                   "data": data.ravel().tolist()}
            fh.write(json.dumps(rec))
            fh.write("\n")


def dataset_to_jsonl(ds: LabeledDataset) -> str:
    """Serialize to the JSONL text without touching the filesystem."""
    import io

    buf = io.StringIO()
    lines = [json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION,
                         "meta": ds.meta})]
    for payload, label in ds.items:
        if isinstance(payload, TactileWindow):
            shape = [payload.n_frames, payload.shape.rows, payload.shape.cols]
            data = payload.values
        else:
            shape = [N_CHANNELS, payload.shape.rows, payload.shape.cols]
            data = payload.channels
        lines.append(json.dumps({"label": label.name, "kind": ds.kind,
                                 "shape": shape, "data": data.ravel().tolist()}))
    buf.write("\n".join(lines))
    buf.write("\n")
    return buf.getvalue()


def load_dataset(path) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return _parse_jsonl(fh, str(path))


def dataset_from_jsonl(text: str) -> LabeledDataset:
    import io

    return _parse_jsonl(io.StringIO(text), "<string>")


def _parse_jsonl(fh, name: str) -> LabeledDataset:
    header_line = fh.readline()
    if not header_line.strip():
        raise ValueError(f"{name}: missing header line")
    header = json.loads(header_line)
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"{name}: not a {FORMAT_NAME} file "
                         f"(format={header.get('format')!r})")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"{name}: unsupported version {header.get('version')!r}")
    meta = header.get("meta", {})
    sample_rate = float(meta.get("sample_rate_hz", 45.0))

    items = []
    kind = None
    for line_no, line in enumerate(fh, start=2):
        if not line.strip():
            continue
        rec = json.loads(line)
        payload, label, rec_kind = _record_to_item(rec, line_no, sample_rate)
        if kind is None:
            kind = rec_kind
        elif rec_kind != kind:
            raise ValueError(f"{name} line {line_no}: mixed record kinds")
        items.append((payload, label))
    if kind is None:
        raise ValueError(f"{name}: dataset has no records")
    return LabeledDataset(kind, items, meta)
