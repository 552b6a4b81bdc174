"""Simulated tactile dataset: five base grasp patterns, random rotational
shifts and Gaussian noise, emitted as raw windows so the full downstream
pipeline (featurizer included) is exercised.

Base patterns are data, not code: the packaged ``data/patterns.json`` holds
the defaults and any file with the same schema can replace it.  max_shift
stays small relative to the grid (shifts within a class mean "same gesture,
hand rotated slightly"; large displacements between classes must remain
distinguishable through the kernel's shift penalty).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .dataset import LabeledDataset
from .types import GridShape, IntentLabel, LABELS, TactileWindow

PATTERNS_FORMAT_KEYS = ("shape", "patterns")

# Default pattern geometry, tuned on the 11x5 grid.  The turn bumps are
# chiral: a sharp leading edge and a slow trailing decay, so the mirror
# image cannot be reproduced by any rotation.  Rotational shifts therefore
# fragment the turn classes in flattened feature space while the pair
# stays separable after alignment on the cylinder.
_HOLD = 0.15        # light holding pressure shared by every gesture
_SQUEEZE = 0.75     # stop: strong uniform squeeze
_RAMP = 0.5         # speed_up: extra axial-forward loading at the front edge
_BUMP_AMP = 0.30    # turn bump amplitude on top of the hold band
_BUMP_RISE = 0.7    # rows; the sharp edge of the bump
_BUMP_FALL = 1.2    # rows; the slow decay side
_BUMP_TAIL = (1, 2)  # rows of profile kept on the (rise, fall) sides


def _bump_profile() -> dict:
    prof = {0: 1.0}
    n_rise, n_fall = _BUMP_TAIL
    for d in range(1, n_rise + 1):
        prof[-d] = float(np.exp(-((d / _BUMP_RISE) ** 2)))
    for d in range(1, n_fall + 1):
        prof[d] = float(np.exp(-((d / _BUMP_FALL) ** 2)))
    return prof


def default_patterns(shape: GridShape = GridShape()) -> dict:
    """The shipped interpretation of the five base grasp patterns.

    neutral is a uniform hold band; stop adds a strong uniform squeeze;
    speed_up adds axial-forward loading across all rows; turn_left
    concentrates pressure on one circumferential side and turn_right is its
    exact mirror image under row reflection about the grasp center (row 0).
    """
    rows, cols = shape.rows, shape.cols
    hold = np.full((rows, cols), _HOLD)

    neutral = hold.copy()
    stop = np.full((rows, cols), _SQUEEZE)
    ramp = _RAMP * (np.arange(cols) / max(cols - 1, 1))
    speed_up = hold + ramp[None, :]

    # center at ~rows/4 puts the mirror bump at the maximal circular
    # separation from this one
    center = max(1, round(rows / 4))
    left = hold.copy()
    for off, w in _bump_profile().items():
        left[(center + off) % rows, :] += _BUMP_AMP * w
    right = left[(-np.arange(rows)) % rows, :]  # reflect about row 0

    patterns = {
        IntentLabel.turn_left: left,
        IntentLabel.turn_right: right,
        IntentLabel.speed_up: speed_up,
        IntentLabel.stop: stop,
        IntentLabel.neutral: neutral,
    }
    return {k: np.clip(v, 0.0, 1.0) for k, v in patterns.items()}


def save_patterns(patterns: dict, path, shape: GridShape) -> None:
    doc = {"shape": [shape.rows, shape.cols],
           "patterns": {label.name: patterns[label].tolist() for label in LABELS}}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _patterns_from_doc(doc: dict) -> tuple:
    rows, cols = doc["shape"]
    shape = GridShape(rows, cols)
    patterns = {}
    for label in LABELS:
        if label.name not in doc["patterns"]:
            raise ValueError(f"patterns file missing intent {label.name!r}")
        arr = np.array(doc["patterns"][label.name], dtype=np.float64)
        if arr.shape != (rows, cols):
            raise ValueError(f"pattern {label.name!r} shaped {arr.shape}, "
                             f"expected ({rows}, {cols})")
        patterns[label] = arr
    return shape, patterns


def load_patterns(path) -> tuple:
    """Load (GridShape, {IntentLabel: array}) from a patterns.json file."""
    with open(path, "r", encoding="utf-8") as fh:
        return _patterns_from_doc(json.load(fh))


def packaged_patterns() -> tuple:
    doc = json.loads(resources.files("cyltouch.data").joinpath("patterns.json")
                     .read_text(encoding="utf-8"))
    return _patterns_from_doc(doc)


@dataclass(frozen=True)
class GeneratorConfig:
    shape: GridShape = GridShape()
    samples_per_class: int = 40
    frames_per_sample: int = 45
    max_shift: int = 2
    noise_sigma: float = 0.05
    temporal_jitter_sigma: float = 0.02
    forward_bias: float = 0.0  # palm-contact contamination; off by default
    base_patterns: dict | None = None  # IntentLabel -> (rows, cols); None = defaults
    seed: int = 0
    sample_rate_hz: float = 45.0

    def resolved_patterns(self) -> dict:
        patterns = self.base_patterns or default_patterns(self.shape)
        validate_patterns(patterns, self.shape)
        return patterns

    def validate(self):
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        if self.frames_per_sample < 1:
            raise ValueError("frames_per_sample must be >= 1")
        if not 0 <= self.max_shift <= self.shape.rows // 2 - 1:
            raise ValueError(
                f"max_shift must be within [0, {self.shape.rows // 2 - 1}] "
                f"for {self.shape.rows} rows, got {self.max_shift}")
        if self.noise_sigma < 0 or self.temporal_jitter_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.forward_bias < 0:
            raise ValueError("forward_bias must be >= 0")
        self.resolved_patterns()

    def to_meta(self) -> dict:
        patterns = self.resolved_patterns()
        return {
            "shape": [self.shape.rows, self.shape.cols],
            "samples_per_class": self.samples_per_class,
            "frames_per_sample": self.frames_per_sample,
            "max_shift": self.max_shift,
            "noise_sigma": self.noise_sigma,
            "temporal_jitter_sigma": self.temporal_jitter_sigma,
            "forward_bias": self.forward_bias,
            "seed": self.seed,
            "sample_rate_hz": self.sample_rate_hz,
            "base_patterns": {l.name: patterns[l].tolist() for l in LABELS},
        }


def validate_patterns(patterns: dict, shape: GridShape) -> None:
    for label in LABELS:
        if label not in patterns:
            raise ValueError(f"missing base pattern for {label.name}")
        p = patterns[label]
        if p.shape != (shape.rows, shape.cols):
            raise ValueError(f"pattern {label.name} shaped {p.shape}, expected "
                             f"({shape.rows}, {shape.cols})")
        if not np.all(np.isfinite(p)) or p.min() < 0 or p.max() > 1:
            raise ValueError(f"pattern {label.name} must lie in [0, 1]")
    for i, a in enumerate(LABELS):
        for b in LABELS[i + 1:]:
            d = float(np.linalg.norm(patterns[a] - patterns[b]))
            if d <= 0.5:
                raise ValueError(
                    f"base patterns {a.name}/{b.name} too close "
                    f"(Frobenius distance {d:.3f} <= 0.5)")


def _forward_ramp(shape: GridShape) -> np.ndarray:
    return (np.arange(shape.cols) / max(shape.cols - 1, 1))[None, :]


def generate_window(cfg: GeneratorConfig, label: IntentLabel, index: int,
                    patterns: dict | None = None):
    """One sample: shifted base pattern plus noise; returns
    (TactileWindow, applied_shift).  Deterministic in (seed, label, index).

    The per-cell noise is drawn once per sample (a contact-quality field:
    how this particular grasp seats against each taxel) and held constant
    across the window; the temporal jitter is a per-frame scalar (overall
    grip-pressure fluctuation).
    """
    patterns = patterns if patterns is not None else cfg.resolved_patterns()
    rng = np.random.default_rng([cfg.seed, int(label), index])
    s = int(rng.integers(-cfg.max_shift, cfg.max_shift + 1)) if cfg.max_shift else 0
    base = patterns[label]
    if cfg.forward_bias:
        base = base + cfg.forward_bias * _forward_ramp(cfg.shape)
    base = np.roll(base, s, axis=0)
    T = cfg.frames_per_sample
    field = rng.normal(0.0, cfg.noise_sigma,
                       size=(cfg.shape.rows, cfg.shape.cols)) \
        if cfg.noise_sigma else 0.0
    jitter = rng.normal(0.0, cfg.temporal_jitter_sigma, size=(T, 1, 1)) \
        if cfg.temporal_jitter_sigma else np.zeros((T, 1, 1))
    frames = np.clip(base[None, :, :] + field + jitter, 0.0, 1.0)
    return TactileWindow(cfg.shape, frames, cfg.sample_rate_hz), s


def generate(cfg: GeneratorConfig) -> LabeledDataset:
    """Full dataset: samples_per_class windows for each of the five intents."""
    cfg.validate()
    patterns = cfg.resolved_patterns()
    items = []
    shift_hist = {}
    for label in LABELS:
        for i in range(cfg.samples_per_class):
            window, s = generate_window(cfg, label, i, patterns)
            items.append((window, label))
            shift_hist[str(s)] = shift_hist.get(str(s), 0) + 1
    meta = {
        "source": "simgen",
        "sample_rate_hz": cfg.sample_rate_hz,
        "generator": cfg.to_meta(),
        "shift_histogram": {k: shift_hist[k]
                            for k in sorted(shift_hist, key=lambda v: int(v))},
    }
    return LabeledDataset("raw", items, meta)
