import asyncio
import json
import socket
import threading
import urllib.request

import numpy as np
import pytest

from cyltouch.featurize import featurize_dataset
from cyltouch.kernels import KernelSpec
from cyltouch.pipeline import load_frame_log, replay, save_frame_log
from cyltouch.service import ServiceServer
from cyltouch.simgen import GeneratorConfig, generate, packaged_patterns
from cyltouch.svm import train_multiclass
from cyltouch.types import GridShape, IntentLabel, TactileFrame

FRAME_DT = 1000.0 / 45.0


@pytest.fixture(scope="module")
def model():
    feat = featurize_dataset(generate(GeneratorConfig(
        samples_per_class=8, noise_sigma=0.03, seed=0)))
    spec = KernelSpec.default(feat.grid_shape(), "cylindrical")
    return train_multiclass(feat, spec, C=10.0, seed=0)


@pytest.fixture(scope="module")
def server(model):
    _, patterns = packaged_patterns()
    srv = ServiceServer(model, port=0, http_port=0, patterns=patterns)
    loop = asyncio.new_event_loop()
    started = threading.Event()

    def run():
        asyncio.set_event_loop(loop)
        loop.run_until_complete(srv.start())
        started.set()
        loop.run_forever()

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    assert started.wait(10), "server failed to start"
    yield srv
    asyncio.run_coroutine_threadsafe(srv.stop(), loop).result(timeout=10)
    loop.call_soon_threadsafe(loop.stop)
    thread.join(timeout=10)


class NdjsonClient:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = self.sock.makefile("rb")

    def send(self, obj):
        self.sock.sendall(json.dumps(obj).encode() + b"\n")

    def recv(self):
        line = self.reader.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return json.loads(line)

    def close(self):
        self.sock.close()


def frames_for(label, n, rng, sigma=0.02, t0=0.0):
    _, pats = packaged_patterns()
    base = pats[label]
    out = []
    for i in range(n):
        grid = np.clip(base + rng.normal(0, sigma, base.shape), 0, 1).tolist()
        out.append({"type": "frame", "t": t0 + i * FRAME_DT, "grid": grid})
    return out


def drain_until_mode_ack(client):
    """Collect replies up to a mode ack (used as an end-of-stream marker)."""
    client.send({"type": "mode", "mode": "live"})
    replies = []
    while True:
        reply = client.recv()
        if reply.get("type") == "mode":
            return replies
        replies.append(reply)


def test_hello_and_live_turn_left_drives_pose(server):
    c = NdjsonClient(server.port)
    hello = c.recv()
    assert hello["type"] == "hello"
    assert hello["shape"] == [11, 5]
    assert hello["buffer_len"] == 7

    rng = np.random.default_rng(0)
    for msg in frames_for(IntentLabel.turn_left, 150, rng):
        c.send(msg)
    replies = drain_until_mode_ack(c)
    c.close()
    commands = [r for r in replies if r["type"] == "command"]
    headings = [r["heading"] for r in replies if r["type"] == "pose"]
    assert commands, "no commands emitted"
    assert all(cmd["intent"] == "turn_left" for cmd in commands)
    assert all(cmd["angular_rps"] == pytest.approx(0.15) for cmd in commands)
    # heading integrates at 0.15 rad/s x 0.1 s per hop
    deltas = np.diff([0.0] + headings)
    assert np.allclose(deltas, 0.015, atol=1e-9)


def test_malformed_messages_do_not_kill_session(server):
    c = NdjsonClient(server.port)
    c.recv()  # hello
    c.sock.sendall(b"this is not json\n")
    assert c.recv()["type"] == "error"
    c.send({"type": "frame", "t": 0, "grid": [[0.0] * 5] * 10})  # wrong shape
    err = c.recv()
    assert err["type"] == "error" and "grid" in err["error"]
    c.send({"type": "bogus"})
    assert c.recv()["type"] == "error"
    # the session is still alive and processes a valid frame silently
    c.send({"type": "frame", "t": 1.0, "grid": [[0.0] * 5] * 11})
    c.send({"type": "reset_pose"})
    assert c.recv()["type"] == "pose"
    c.close()


def test_capture_export_train_flow(server):
    c = NdjsonClient(server.port)
    c.recv()
    c.send({"type": "mode", "mode": "capture"})
    assert c.recv() == {"type": "mode", "mode": "capture"}

    # training with nothing captured fails but keeps the session alive
    c.send({"type": "train"})
    reply = c.recv()
    assert reply["type"] == "error" and "captured" in reply["error"]

    rng = np.random.default_rng(1)
    t0 = 0.0
    for label in (IntentLabel.stop, IntentLabel.neutral, IntentLabel.turn_left):
        for _ in range(3):
            for msg in frames_for(label, 45, rng, t0=t0):
                c.send(msg)
            t0 += 45 * FRAME_DT
            c.send({"type": "end_sample", "label": label.name})
            reply = c.recv()
            assert reply["type"] == "sample" and reply["label"] == label.name
    c.send({"type": "export"})
    exported = c.recv()
    assert exported["type"] == "dataset"
    assert exported["counts"] == {"stop": 3, "neutral": 3, "turn_left": 3}
    from cyltouch.dataset import dataset_from_jsonl, validate_dataset

    ds = dataset_from_jsonl(exported["jsonl"])
    assert len(ds) == 9 and ds.kind == "raw"
    report = validate_dataset(ds)
    # only absent classes may be flagged for this 3-class capture
    assert all(v.startswith("empty class") for v in report.violations)

    c.send({"type": "train"})
    progress = c.recv()
    assert progress["type"] == "progress"
    ready = c.recv()
    assert ready["type"] == "ready"
    assert ready["classes"] == ["turn_left", "stop", "neutral"]

    # the session switched to live with the retrained model
    for msg in frames_for(IntentLabel.stop, 150, rng, t0=0.0):
        c.send(msg)
    replies = drain_until_mode_ack(c)
    intents = [r["intent"] for r in replies if r["type"] == "command"]
    assert intents and set(intents) == {"stop"}
    c.close()


def test_frames_without_timestamps_are_stamped_on_receipt(server):
    c = NdjsonClient(server.port)
    c.recv()
    c.send({"type": "mode", "mode": "capture"})
    c.recv()
    rng = np.random.default_rng(8)
    for msg in frames_for(IntentLabel.stop, 45, rng):
        del msg["t"]
        c.send(msg)
    c.send({"type": "end_sample", "label": "stop"})
    reply = c.recv()
    assert reply["type"] == "sample" and reply["label"] == "stop"
    c.close()


def test_end_sample_requires_full_window(server):
    c = NdjsonClient(server.port)
    c.recv()
    c.send({"type": "mode", "mode": "capture"})
    c.recv()
    rng = np.random.default_rng(2)
    for msg in frames_for(IntentLabel.stop, 10, rng):
        c.send(msg)
    c.send({"type": "end_sample", "label": "stop"})
    err = c.recv()
    assert err["type"] == "error" and "45" in err["error"]
    c.close()


def test_socket_session_matches_offline_replay(server, model, tmp_path):
    rng = np.random.default_rng(3)
    stream = frames_for(IntentLabel.turn_right, 160, rng)

    c = NdjsonClient(server.port)
    c.recv()
    for msg in stream:
        c.send(msg)
    live_commands = [{"t": r["t"], "intent": r["intent"],
                      "linear_mps": r["linear_mps"],
                      "angular_rps": r["angular_rps"]}
                     for r in drain_until_mode_ack(c) if r["type"] == "command"]
    c.close()

    shape = GridShape(11, 5)
    frames = [(m["t"], TactileFrame(shape, np.array(m["grid"]))) for m in stream]
    offline = [cmd.to_dict() for cmd in replay(frames, model)]
    assert live_commands == offline


def test_sessions_are_isolated(server):
    a = NdjsonClient(server.port)
    b = NdjsonClient(server.port)
    a.recv()
    b.recv()
    rng = np.random.default_rng(4)
    for msg in frames_for(IntentLabel.turn_left, 150, rng):
        a.send(msg)
    replies = drain_until_mode_ack(a)
    assert any(r["type"] == "command" for r in replies)
    # session b never saw a's frames: its pose is pristine
    b.send({"type": "reset_pose"})
    assert b.recv() == {"type": "pose", "x": 0.0, "y": 0.0, "heading": 0.0}
    a.close()
    b.close()


def test_websocket_transport_and_static_http(server):
    import websockets.sync.client as ws_client

    with ws_client.connect(f"ws://127.0.0.1:{server.http_port}/ws") as ws:
        hello = json.loads(ws.recv())
        assert hello["type"] == "hello"
        ws.send(json.dumps({"type": "reset_pose"}))
        assert json.loads(ws.recv())["type"] == "pose"

    from cyltouch.types import LABELS

    with urllib.request.urlopen(
            f"http://127.0.0.1:{server.http_port}/patterns.json") as resp:
        doc = json.loads(resp.read())
    assert doc["shape"] == [11, 5]
    assert set(doc["patterns"]) == {l.name for l in LABELS}
