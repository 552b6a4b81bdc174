"""Live intent loop: a one-second window sliding in 100 ms hops, a
seven-deep unanimous output buffer, and the intent-to-velocity mapping.

Hops are scheduled on stream timestamps, not wall clock, so an offline
replay of a frame log reproduces the live command sequence exactly.  Every
hop with a full prediction buffer emits exactly one command: the buffered
intent when all predictions agree, neutral otherwise.  Commands are the
discrete events of this layer; kinematics belong to the consumer.

Sign convention: turn_left is positive angular velocity (right-handed,
z-up).
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .featurize import FeaturizerConfig, DEFAULT_FEATURIZER, featurize
from .svm import SvmModel, predict
from .types import GridShape, IntentLabel, TactileFrame, TactileWindow


@dataclass(frozen=True)
class PipelineConfig:
    window_seconds: float = 1.0
    hop_ms: float = 100.0
    buffer_len: int = 7
    angular_speed_rps: float = 0.15
    speed_increment_mps: float = 0.01
    max_speed_mps: float = 0.15
    sample_rate_hz: float = 45.0

    def __post_init__(self):
        if min(self.window_seconds, self.hop_ms, self.angular_speed_rps,
               self.speed_increment_mps, self.max_speed_mps,
               self.sample_rate_hz) <= 0:
            raise ValueError("pipeline constants must be positive")
        if self.buffer_len < 1:
            raise ValueError("buffer_len must be >= 1")
        if self.speed_increment_mps > self.max_speed_mps:
            raise ValueError("speed increment cannot exceed the maximum speed")

    @property
    def window_frames(self) -> int:
        return int(round(self.window_seconds * self.sample_rate_hz))

    @property
    def window_ms(self) -> float:
        return self.window_seconds * 1000.0


@dataclass
class MotionCommand:
    t_ms: float
    intent: IntentLabel
    linear_mps: float
    angular_rps: float

    def to_dict(self) -> dict:
        return {"t": self.t_ms, "intent": self.intent.name,
                "linear_mps": self.linear_mps, "angular_rps": self.angular_rps}


@dataclass
class HopEvent:
    """One classification hop: the prediction, the buffer snapshot and the
    command emitted at this hop (None while the buffer is still filling)."""

    t_ms: float
    intent: IntentLabel
    buffer: tuple
    command: Optional[MotionCommand]


class IntentPipeline:
    """Single-owner state machine; push frames in, get hop events out.

    ``model`` is an SvmModel, or any callable FeatureMap -> IntentLabel
    (useful for driving the buffer logic with scripted predictions).
    """

    def __init__(self, model, config: PipelineConfig = PipelineConfig(),
                 featurizer: FeaturizerConfig = DEFAULT_FEATURIZER):
        if isinstance(model, SvmModel):
            self._classify = lambda fm: predict(model, fm)[0]
            self._frame_shape: Optional[GridShape] = model.grid_shape()
        elif callable(model):
            self._classify = model
            self._frame_shape = None
        else:
            raise TypeError("model must be an SvmModel or a classifier callable")
        self.model = model
        self.config = config
        self.featurizer = featurizer
        self._ring = deque(maxlen=config.window_frames)
        self._buffer = deque(maxlen=config.buffer_len)
        self._linear_mps = 0.0
        self._next_hop_t: Optional[float] = None
        self._last_t: Optional[float] = None

    @property
    def linear_mps(self) -> float:
        return self._linear_mps

    @property
    def prediction_buffer(self) -> tuple:
        return tuple(self._buffer)

    def reset(self) -> None:
        self._ring.clear()
        self._buffer.clear()
        self._linear_mps = 0.0
        self._next_hop_t = None
        self._last_t = None

    def apply_intent(self, intent: IntentLabel, t_ms: float = 0.0) -> MotionCommand:
        """Map an intent to a velocity command, updating the linear speed."""
        cfg = self.config
        if intent == IntentLabel.turn_left:
            angular = cfg.angular_speed_rps
        elif intent == IntentLabel.turn_right:
            angular = -cfg.angular_speed_rps
        else:
            angular = 0.0
        if intent == IntentLabel.speed_up:
            self._linear_mps = min(self._linear_mps + cfg.speed_increment_mps,
                                   cfg.max_speed_mps)
        elif intent == IntentLabel.stop:
            self._linear_mps = 0.0
        # turn/neutral leave the linear speed unchanged
        return MotionCommand(t_ms, intent, self._linear_mps, angular)

    def push_frame(self, frame: TactileFrame, t_ms: float) -> list:
        """Feed one frame; returns the hop events whose boundary it crossed.

        Normally zero or one event per frame; a sparse stream can cross
        several hop boundaries at once, in which case every hop is processed
        (each with the then-current window) in order.
        """
        if self._frame_shape is not None and frame.shape != self._frame_shape:
            raise ValueError("frame shape does not match the model")
        if self._last_t is not None and t_ms < self._last_t:
            raise ValueError(f"non-monotone timestamp {t_ms} after {self._last_t}")
        self._last_t = t_ms
        if self._next_hop_t is None:
            self._next_hop_t = t_ms + self.config.window_ms
        self._ring.append((t_ms, frame))

        events = []
        while t_ms >= self._next_hop_t:
            hop_t = self._next_hop_t
            self._next_hop_t += self.config.hop_ms
            if len(self._ring) < self.config.window_frames:
                continue
            window = TactileWindow.from_frames(
                [f for _, f in self._ring], self.config.sample_rate_hz)
            intent = self._classify(featurize(window, self.featurizer))
            self._buffer.append(intent)
            command = None
            if len(self._buffer) == self.config.buffer_len:
                buf = set(self._buffer)
                emitted = intent if len(buf) == 1 else IntentLabel.neutral
                command = self.apply_intent(emitted, hop_t)
            events.append(HopEvent(hop_t, intent, tuple(self._buffer), command))
        return events


def replay(frames, model: SvmModel, config: PipelineConfig = PipelineConfig(),
           featurizer: FeaturizerConfig = DEFAULT_FEATURIZER) -> list:
    """Feed a timestamped frame stream through a fresh pipeline.

    ``frames`` yields (t_ms, TactileFrame) with non-decreasing timestamps.
    Returns the command log as a list of MotionCommand; a pure function of
    (stream, model, config).
    """
    pipe = IntentPipeline(model, config, featurizer)
    commands = []
    for t_ms, frame in frames:
        for event in pipe.push_frame(frame, t_ms):
            if event.command is not None:
                commands.append(event.command)
    return commands


# --- frame / command logs ------------------------------------------------------

def save_command_log(commands, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for cmd in commands:
            fh.write(json.dumps(cmd.to_dict()))
            fh.write("\n")


def load_frame_log(path, shape: GridShape):
    """Frame log JSONL: {"t": <ms>, "grid": [[rows x cols]]} per line."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            grid = np.array(rec["grid"], dtype=np.float64)
            out.append((float(rec["t"]), TactileFrame(shape, grid)))
    return out


def save_frame_log(frames, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t_ms, frame in frames:
            fh.write(json.dumps({"t": t_ms, "grid": frame.values.tolist()}))
            fh.write("\n")
