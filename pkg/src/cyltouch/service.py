"""Streaming classification service.

One session per connection, carrying newline-delimited JSON messages over a
plain TCP socket; the same messages ride WebSocket text frames on the HTTP
port, which also serves the browser UI's static assets.  Sessions share
nothing: each owns its pipeline state, captured data and simulated robot
pose (unicycle model, integrated server-side at the hop rate so clients
stay thin views).

Client -> server message types: frame, mode, end_sample, train, export,
reset_pose.  Server -> client: hello, intent, command, pose, mode, sample,
progress, ready, dataset, error.
"""

from __future__ import annotations

import asyncio
import http
import json
import math
import mimetypes
import time
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import LabeledDataset, dataset_to_jsonl
from .featurize import featurize_dataset
from .kernels import KernelSpec
from .pipeline import IntentPipeline, PipelineConfig
from .svm import DEFAULT_C, SvmModel, train_multiclass
from .types import IntentLabel, LABELS, TactileFrame, TactileWindow


class Session:
    """Transport-agnostic state machine for one client connection."""

    def __init__(self, model: SvmModel, config: PipelineConfig = PipelineConfig(),
                 patterns: Optional[dict] = None, train_C: float = DEFAULT_C,
                 train_seed: int = 0):
        self.model = model
        self.config = config
        self.patterns = patterns
        self.train_C = train_C
        self.train_seed = train_seed
        self.mode = "live"
        self.pipeline = IntentPipeline(model, config)
        self.capture_frames: list = []
        self.capture_items: list = []
        self.pose = [0.0, 0.0, 0.0]  # x (m), y (m), heading (rad)

    # -- helpers ---------------------------------------------------------------

    def hello(self) -> dict:
        shape = self.model.grid_shape()
        return {
            "type": "hello",
            "mode": self.mode,
            "shape": [shape.rows, shape.cols],
            "labels": [l.name for l in LABELS],
            "kernel": self.model.spec.to_dict(),
            "window_frames": self.config.window_frames,
            "buffer_len": self.config.buffer_len,
        }

    def _pose_message(self) -> dict:
        return {"type": "pose", "x": self.pose[0], "y": self.pose[1],
                "heading": self.pose[2]}

    def _integrate(self, linear: float, angular: float) -> None:
        # unicycle step over one hop; position uses the pre-step heading
        dt = self.config.hop_ms / 1000.0
        x, y, heading = self.pose
        x += linear * math.cos(heading) * dt
        y += linear * math.sin(heading) * dt
        heading += angular * dt
        self.pose = [x, y, heading]

    def _parse_frame(self, msg: dict) -> tuple:
        grid = np.asarray(msg.get("grid"), dtype=np.float64)
        shape = self.model.grid_shape()
        if grid.shape != (shape.rows, shape.cols):
            raise ValueError(f"frame grid shaped {grid.shape}, expected "
                             f"({shape.rows}, {shape.cols})")
        if not np.all(np.isfinite(grid)):
            raise ValueError("frame contains non-finite values")
        t = msg.get("t")
        if t is None:
            t = time.monotonic() * 1000.0  # server receipt time
        return TactileFrame(shape, np.clip(grid, 0.0, 1.0)), float(t)

    # -- message handling --------------------------------------------------------

    def handle(self, msg: dict) -> list:
        """Process one client message; returns the replies in order."""
        kind = msg.get("type")
        if kind == "frame":
            return self._on_frame(msg)
        if kind == "mode":
            return self._on_mode(msg)
        if kind == "end_sample":
            return self._on_end_sample(msg)
        if kind == "export":
            return self._on_export()
        if kind == "reset_pose":
            self.pose = [0.0, 0.0, 0.0]
            return [self._pose_message()]
        if kind == "train":
            raise _NeedsTraining()
        raise ValueError(f"unknown message type {kind!r}")

    def _on_frame(self, msg: dict) -> list:
        frame, t = self._parse_frame(msg)
        if self.mode == "capture":
            self.capture_frames.append(frame)
            return []
        out = []
        for ev in self.pipeline.push_frame(frame, t):
            out.append({"type": "intent", "t": ev.t_ms, "label": ev.intent.name,
                        "buffer": [l.name for l in ev.buffer]})
            if ev.command is not None:
                cmd = ev.command
                out.append({"type": "command", **cmd.to_dict()})
                self._integrate(cmd.linear_mps, cmd.angular_rps)
                out.append(self._pose_message())
        return out

    def _on_mode(self, msg: dict) -> list:
        mode = msg.get("mode")
        if mode not in ("live", "capture"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        if mode == "live":
            self.pipeline = IntentPipeline(self.model, self.config)
        else:
            self.capture_frames = []
        return [{"type": "mode", "mode": mode}]

    def _on_end_sample(self, msg: dict) -> list:
        if self.mode != "capture":
            raise ValueError("end_sample is only valid in capture mode")
        label = IntentLabel.from_name(msg.get("label", ""))
        need = self.config.window_frames
        if len(self.capture_frames) < need:
            raise ValueError(f"sample needs {need} frames, have "
                             f"{len(self.capture_frames)}")
        window = TactileWindow.from_frames(self.capture_frames[-need:],
                                           self.config.sample_rate_hz)
        self.capture_items.append((window, label))
        self.capture_frames = []
        counts = {}
        for _, l in self.capture_items:
            counts[l.name] = counts.get(l.name, 0) + 1
        return [{"type": "sample", "label": label.name,
                 "count": len(self.capture_items), "counts": counts}]

    def _capture_dataset(self) -> LabeledDataset:
        if not self.capture_items:
            raise ValueError("no captured samples")
        return LabeledDataset("raw", list(self.capture_items),
                              {"source": "capture",
                               "sample_rate_hz": self.config.sample_rate_hz})

    def _on_export(self) -> list:
        ds = self._capture_dataset()
        counts = {l.name: c for l, c in ds.class_counts().items() if c}
        return [{"type": "dataset", "jsonl": dataset_to_jsonl(ds),
                 "counts": counts}]

    def check_trainable(self) -> None:
        ds = self._capture_dataset()
        present = [l for l, c in ds.class_counts().items() if c > 0]
        if len(present) < 2:
            raise ValueError(f"training needs at least 2 classes, "
                             f"captured {len(present)}")

    def train_blocking(self) -> list:
        """Featurize + retrain on the captured data; swaps the live model."""
        self.check_trainable()
        ds = self._capture_dataset()
        feat = featurize_dataset(ds)
        spec = KernelSpec.default(feat.grid_shape(), self.model.spec.kind)
        new_model = train_multiclass(feat, spec, C=self.train_C,
                                     seed=self.train_seed)
        # atomic swap: predictions change only from this point on
        self.model = new_model
        self.mode = "live"
        self.pipeline = IntentPipeline(new_model, self.config)
        return [{"type": "ready", "n_train": len(feat),
                 "classes": [l.name for l in new_model.labels],
                 "kernel": new_model.spec.to_dict()}]


class _NeedsTraining(Exception):
    """Internal marker: the train message must run off the hot path."""


def _error_reply(exc: Exception) -> dict:
    return {"type": "error", "error": str(exc)}


async def _handle_message(session: Session, line: str) -> list:
    try:
        msg = json.loads(line)
        if not isinstance(msg, dict):
            raise ValueError("messages must be JSON objects")
        return session.handle(msg)
    except _NeedsTraining:
        try:
            session.check_trainable()
        except ValueError as exc:
            return [_error_reply(exc)]
        replies = [{"type": "progress", "stage": "training",
                    "n_samples": len(session.capture_items)}]
        try:
            replies += await asyncio.to_thread(session.train_blocking)
        except ValueError as exc:
            replies.append(_error_reply(exc))
        return replies
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        return [_error_reply(exc)]


class ServiceServer:
    """TCP (NDJSON) plus optional HTTP/WebSocket front door."""

    def __init__(self, model: SvmModel, host: str = "127.0.0.1", port: int = 8800,
                 http_port: Optional[int] = None, patterns: Optional[dict] = None,
                 ui_dir: Optional[str] = None,
                 config: PipelineConfig = PipelineConfig()):
        self.model = model
        self.host = host
        self.port = port
        self.http_port = http_port
        self.patterns = patterns
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        self.config = config
        self.tcp_server = None
        self.ws_server = None

    def _new_session(self) -> Session:
        return Session(self.model, self.config, self.patterns)

    async def _tcp_connection(self, reader: asyncio.StreamReader,
                              writer: asyncio.StreamWriter) -> None:
        session = self._new_session()

        def send(obj: dict) -> None:
            writer.write(json.dumps(obj).encode("utf-8") + b"\n")

        send(session.hello())
        try:
            await writer.drain()
            while True:
                line = await reader.readline()
                if not line:
                    break
                if not line.strip():
                    continue
                for reply in await _handle_message(session, line.decode("utf-8")):
                    send(reply)
                await writer.drain()
        except (ConnectionResetError, BrokenPipeError):
            pass
        finally:
            writer.close()

    # -- HTTP/WS ----------------------------------------------------------------

    def _static_response(self, connection, request):
        """Serve UI assets and patterns.json; None lets the WS upgrade through."""
        from websockets.datastructures import Headers
        from websockets.http11 import Response

        path = request.path.split("?", 1)[0]
        if path == "/ws" or "Upgrade" in request.headers.get("Connection", ""):
            return None

        def respond(status, body: bytes, content_type: str):
            headers = Headers([("Content-Type", content_type),
                               ("Content-Length", str(len(body))),
                               ("Cache-Control", "no-store")])
            return Response(status, http.HTTPStatus(status).phrase, headers, body)

        if path == "/patterns.json" and self.patterns is not None:
            shape = self.model.grid_shape()
            doc = {"shape": [shape.rows, shape.cols],
                   "patterns": {l.name: self.patterns[l].tolist()
                                for l in LABELS}}
            return respond(200, json.dumps(doc).encode(), "application/json")
        if self.ui_dir is None:
            return respond(404, b"no UI assets configured\n", "text/plain")
        if path == "/":
            path = "/index.html"
        target = (self.ui_dir / path.lstrip("/")).resolve()
        if not str(target).startswith(str(self.ui_dir)) or not target.is_file():
            return respond(404, b"not found\n", "text/plain")
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        return respond(200, target.read_bytes(), ctype)

    async def _ws_connection(self, ws) -> None:
        session = self._new_session()
        await ws.send(json.dumps(session.hello()))
        async for raw in ws:
            text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            for line in text.splitlines() or [""]:
                if not line.strip():
                    continue
                for reply in await _handle_message(session, line):
                    await ws.send(json.dumps(reply))

    async def start(self) -> None:
        self.tcp_server = await asyncio.start_server(
            self._tcp_connection, self.host, self.port)
        self.port = self.tcp_server.sockets[0].getsockname()[1]
        if self.http_port is not None:
            from websockets.asyncio.server import serve

            self.ws_server = await serve(
                self._ws_connection, self.host, self.http_port,
                process_request=self._static_response)
            for sock in self.ws_server.sockets:
                self.http_port = sock.getsockname()[1]
                break

    async def stop(self) -> None:
        if self.tcp_server is not None:
            self.tcp_server.close()
            await self.tcp_server.wait_closed()
        if self.ws_server is not None:
            self.ws_server.close()
            await self.ws_server.wait_closed()

    async def serve(self) -> None:
        await self.start()
        try:
            await asyncio.Future()  # run until cancelled
        finally:
            await self.stop()


def serve_forever(model: SvmModel, host: str = "127.0.0.1", port: int = 8800,
                  http_port: Optional[int] = None, patterns: Optional[dict] = None,
                  ui_dir: Optional[str] = None,
                  config: PipelineConfig = PipelineConfig()) -> None:
    server = ServiceServer(model, host, port, http_port, patterns, ui_dir, config)
    try:
        asyncio.run(server.serve())
    except KeyboardInterrupt:
        pass
