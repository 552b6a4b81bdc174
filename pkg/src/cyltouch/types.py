"""Shared domain types: grids, frames, windows, feature maps and intent labels.

The row axis of every grid is circumferential (it wraps around the handle),
the column axis is axial.  Constructors enforce structural invariants only
(shapes, lengths); value-level checks such as finiteness live in
``cyltouch.dataset.validate_dataset`` so that broken data can still be
loaded and reported on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

# FeatureMap channel indices, fixed by the dataset/model file formats.
CH_MEAN, CH_MAX, CH_STD, CH_GRADIENT = 0, 1, 2, 3
CHANNEL_NAMES = ("mean", "max", "std", "gradient")
N_CHANNELS = 4


class IntentLabel(IntEnum):
    """Five-way grasp-intent vocabulary with a stable wire encoding."""

    turn_left = 0
    turn_right = 1
    speed_up = 2
    stop = 3
    neutral = 4

    @classmethod
    def from_name(cls, name: str) -> "IntentLabel":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown intent label {name!r}") from None


LABELS = tuple(IntentLabel)
LABEL_NAMES = tuple(label.name for label in LABELS)


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a:
        out = a.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class GridShape:
    """Dimensions of the tactile grid."""

    rows: int = 11  # circumferential axis; row 0 and row rows-1 are neighbours
    cols: int = 5   # axial axis along the handle

    def __post_init__(self):
        if self.rows < 2:
            raise ValueError(f"rows must be >= 2, got {self.rows}")
        if self.cols < 1:
            raise ValueError(f"cols must be >= 1, got {self.cols}")

    @property
    def cells(self) -> int:
        return self.rows * self.cols


DEFAULT_SHAPE = GridShape(11, 5)


@dataclass(frozen=True, eq=False)
class TactileFrame:
    """One time slice of pressure readings, normalized to [0, 1]."""

    shape: GridShape
    values: np.ndarray  # (rows, cols) float64

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.shape.rows, self.shape.cols):
            raise ValueError(
                f"frame values shaped {v.shape}, expected "
                f"({self.shape.rows}, {self.shape.cols})"
            )
        object.__setattr__(self, "values", _freeze(v))

    def __eq__(self, other):
        if not isinstance(other, TactileFrame):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.shape, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class TactileWindow:
    """An ordered stack of frames covering one classification window."""

    shape: GridShape
    values: np.ndarray  # (n_frames, rows, cols) float64
    sample_rate_hz: float = 45.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 3 or v.shape[1:] != (self.shape.rows, self.shape.cols):
            raise ValueError(
                f"window values shaped {v.shape}, expected "
                f"(n, {self.shape.rows}, {self.shape.cols})"
            )
        if v.shape[0] == 0:
            raise ValueError("window must contain at least one frame")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_frames(cls, frames, sample_rate_hz: float = 45.0) -> "TactileWindow":
        frames = list(frames)
        if not frames:
            raise ValueError("window must contain at least one frame")
        shape = frames[0].shape
        if any(f.shape != shape for f in frames):
            raise ValueError("all frames in a window must share one grid shape")
        return cls(shape, np.stack([f.values for f in frames]), sample_rate_hz)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    def frame(self, t: int) -> TactileFrame:
        return TactileFrame(self.shape, self.values[t])

    def __eq__(self, other):
        if not isinstance(other, TactileWindow):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.shape, self.sample_rate_hz, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """4-channel summary of a window: mean, max, std and spatial gradient.

    Channel order is fixed (see CH_* constants); every channel keeps the
    grid layout so circular row shifts remain meaningful.
    """

    shape: GridShape
    channels: np.ndarray  # (4, rows, cols) float64

    def __post_init__(self):
        c = np.asarray(self.channels, dtype=np.float64)
        if c.shape != (N_CHANNELS, self.shape.rows, self.shape.cols):
            raise ValueError(
                f"channels shaped {c.shape}, expected "
                f"({N_CHANNELS}, {self.shape.rows}, {self.shape.cols})"
            )
        object.__setattr__(self, "channels", _freeze(c))

    def channel(self, index: int) -> np.ndarray:
        return self.channels[index]

    def __eq__(self, other):
        if not isinstance(other, FeatureMap):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(
            self.channels, other.channels
        )

    def __hash__(self):
        return hash((self.shape, self.channels.tobytes()))
