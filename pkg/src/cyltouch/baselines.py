"""Comparison classifiers: minimum distance to covariance mean (MDCM) and a
small multilayer perceptron.

MDCM treats each raw window as a multi-channel time series: flatten every
frame to a d-vector, take the (shrunk) sample covariance, and classify by
the nearest per-class Fréchet mean under the affine-invariant Riemannian
metric.  Shrinkage is required because a 45-frame window cannot produce a
full-rank 55x55 covariance on its own.

The MLP consumes flattened feature maps and is trained with full-batch
gradient descent on softmax cross-entropy; gradients are plain backprop and
are cross-checked against finite differences in the test suite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import LabeledDataset
from .types import FeatureMap, IntentLabel, LABELS, TactileWindow

MDCM_FORMAT = "cyltouch-mdcm"
MLP_FORMAT = "cyltouch-mlp"
_DEGENERATE_FLOOR = 1e-8  # eps*I replacement for zero-variance windows


# --- covariance geometry ------------------------------------------------------

def sample_covariance(window: TactileWindow, shrinkage: float) -> np.ndarray:
    """Shrunk sample covariance of the flattened frame sequence.

    C = (1/(T-1)) * sum (x_t - mean)(x_t - mean)^T, then
    (1-shrinkage)*C + shrinkage*(trace(C)/d)*I.  A zero-variance window has
    trace 0 and would produce the zero matrix; it is floored to eps*I so the
    manifold machinery stays defined.
    """
    if not 0 < shrinkage <= 1:
        raise ValueError(f"shrinkage must be in (0, 1], got {shrinkage}")
    T = window.n_frames
    if T < 2:
        raise ValueError("covariance needs at least 2 frames")
    X = window.values.reshape(T, -1)
    d = X.shape[1]
    Xc = X - X.mean(axis=0)
    C = (Xc.T @ Xc) / (T - 1)
    mu = float(np.trace(C)) / d
    if mu <= 0.0:
        return _DEGENERATE_FLOOR * np.eye(d)
    out = (1.0 - shrinkage) * C + shrinkage * mu * np.eye(d)
    return 0.5 * (out + out.T)


def _spd_eigh(a: np.ndarray) -> tuple:
    w, V = np.linalg.eigh(a)
    if w[0] <= 0:
        raise ValueError(f"matrix is not positive definite (min eig {w[0]:.3e})")
    return w, V


def _inv_sqrtm(a: np.ndarray) -> np.ndarray:
    w, V = _spd_eigh(a)
    return (V / np.sqrt(w)) @ V.T


def _sqrtm(a: np.ndarray) -> np.ndarray:
    w, V = _spd_eigh(a)
    return (V * np.sqrt(w)) @ V.T


def _logm_sym(a: np.ndarray) -> np.ndarray:
    w, V = _spd_eigh(a)
    return (V * np.log(w)) @ V.T


def _expm_sym(a: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(a)
    return (V * np.exp(w)) @ V.T


def geodesic_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Affine-invariant distance ||log(a^-1/2 b a^-1/2)||_F between SPD matrices."""
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("geodesic_distance needs two square matrices of one size")
    if not np.allclose(a, a.T, atol=1e-9) or not np.allclose(b, b.T, atol=1e-9):
        raise ValueError("geodesic_distance needs symmetric matrices")
    s = _inv_sqrtm(a)
    m = s @ b @ s
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    if lam[0] <= 0:
        raise ValueError("second matrix is not positive definite")
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def frechet_mean(mats: Sequence[np.ndarray], max_iter: int = 50,
                 tol: float = 1e-6) -> np.ndarray:
    """Fréchet mean by fixed-point iteration on the mean of matrix logs.

    Starts from the arithmetic mean; stops when the Frobenius norm of the
    tangent-space update drops below tol or after max_iter iterations.
    """
    mats = list(mats)
    if not mats:
        raise ValueError("cannot average zero matrices")
    M = np.mean(mats, axis=0)
    M = 0.5 * (M + M.T)
    for _ in range(max_iter):
        half = _sqrtm(M)
        inv_half = _inv_sqrtm(M)
        logs = [_logm_sym(inv_half @ C @ inv_half) for C in mats]
        S = np.mean(logs, axis=0)
        S = 0.5 * (S + S.T)
        M = half @ _expm_sym(S) @ half
        M = 0.5 * (M + M.T)
        if np.linalg.norm(S, ord="fro") < tol:
            break
    return M


@dataclass
class CovarianceModel:
    centroids: dict  # IntentLabel -> (d, d) SPD centroid
    shrinkage: float
    meta: dict = field(default_factory=dict)


def train_mdcm(ds: LabeledDataset, shrinkage: float = 0.1) -> CovarianceModel:
    """Per-class Fréchet-mean covariance centroids from a raw dataset."""
    if ds.kind != "raw":
        raise ValueError("train_mdcm expects a raw dataset (it needs time series)")
    counts = ds.class_counts()
    present = [l for l in LABELS if counts[l] > 0]
    for label in present:
        if counts[label] < 2:
            raise ValueError(f"class {label.name} has {counts[label]} sample(s); "
                             "need at least 2")
    covs = {label: [] for label in present}
    for window, label in ds.items:
        covs[label].append(sample_covariance(window, shrinkage))
    centroids = {label: frechet_mean(covs[label]) for label in present}
    shape = ds.grid_shape()
    meta = {
        "input": "raw_windows",
        "shrinkage": shrinkage,
        "d": shape.rows * shape.cols,
        "class_counts": {l.name: counts[l] for l in present},
    }
    return CovarianceModel(centroids, shrinkage, meta)


def mdcm_distances(model: CovarianceModel, window: TactileWindow) -> dict:
    C = sample_covariance(window, model.shrinkage)
    return {label: geodesic_distance(C, M) for label, M in model.centroids.items()}


def predict_mdcm(model: CovarianceModel, window: TactileWindow) -> IntentLabel:
    """Nearest centroid by geodesic distance; ties go to the smaller label."""
    dists = mdcm_distances(model, window)
    return min(dists, key=lambda label: (dists[label], int(label)))


# --- MLP ----------------------------------------------------------------------

@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple = (64,)
    lr: float = 0.01
    epochs: int = 300
    seed: int = 0


@dataclass
class MlpModel:
    layer_sizes: list
    weights: list  # per layer, (fan_in, fan_out)
    biases: list   # per layer, (fan_out,)
    config: MlpConfig
    loss_curve: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _flatten_features(ds: LabeledDataset) -> tuple:
    if ds.kind != "featurized":
        raise ValueError("the MLP consumes featurized datasets")
    X = ds.feature_array().reshape(len(ds), -1)
    y = ds.labels()
    return X, y


def _forward(weights, biases, X):
    """Returns (activations per layer incl. input, logits)."""
    acts = [X]
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
        acts.append(h)
    logits = h @ weights[-1] + biases[-1]
    return acts, logits


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def mlp_loss_and_grads(weights, biases, X, y_onehot):
    """Mean softmax cross-entropy and its gradients (plain backprop)."""
    n = X.shape[0]
    acts, logits = _forward(weights, biases, X)
    probs = _softmax(logits)
    # clip only inside the log; the gradient uses the exact probs
    loss = float(-np.mean(np.sum(y_onehot * np.log(np.maximum(probs, 1e-300)),
                                 axis=1)))
    delta = (probs - y_onehot) / n
    grads_W = [None] * len(weights)
    grads_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grads_W[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (acts[layer] > 0)
    return loss, grads_W, grads_b


def train_mlp(ds: LabeledDataset, config: MlpConfig = MlpConfig()) -> MlpModel:
    """Full-batch gradient descent; deterministic for a given seed."""
    X, y = _flatten_features(ds)
    n_classes = len(LABELS)
    y_onehot = np.zeros((len(y), n_classes))
    y_onehot[np.arange(len(y)), y] = 1.0

    sizes = [X.shape[1], *config.hidden, n_classes]
    rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))

    curve = []
    for _ in range(config.epochs):
        loss, gW, gb = mlp_loss_and_grads(weights, biases, X, y_onehot)
        curve.append(loss)
        for layer in range(len(weights)):
            weights[layer] -= config.lr * gW[layer]
            biases[layer] -= config.lr * gb[layer]

    shape = ds.grid_shape()
    meta = {"architecture": "->".join(str(s) for s in sizes),
            "grid_shape": [shape.rows, shape.cols],
            "final_loss": curve[-1] if curve else None}
    return MlpModel(sizes, weights, biases, config, curve, meta)


def predict_mlp_batch(model: MlpModel, fms: Sequence[FeatureMap]) -> np.ndarray:
    X = np.stack([fm.channels.ravel() for fm in fms])
    _, logits = _forward(model.weights, model.biases, X)
    return np.argmax(logits, axis=1)


def predict_mlp(model: MlpModel, fm: FeatureMap) -> IntentLabel:
    return IntentLabel(int(predict_mlp_batch(model, [fm])[0]))


# --- model files --------------------------------------------------------------

def save_mdcm(model: CovarianceModel, path) -> None:
    doc = {
        "format": MDCM_FORMAT,
        "version": 1,
        "shrinkage": model.shrinkage,
        "labels": [l.name for l in model.centroids],
        "centroids": {l.name: model.centroids[l].tolist() for l in model.centroids},
        "meta": model.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_mdcm(path) -> CovarianceModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MDCM_FORMAT:
        raise ValueError(f"not a {MDCM_FORMAT} file")
    centroids = {IntentLabel.from_name(name): np.array(mat, dtype=np.float64)
                 for name, mat in doc["centroids"].items()}
    return CovarianceModel(centroids, float(doc["shrinkage"]), doc.get("meta", {}))


def save_mlp(model: MlpModel, path) -> None:
    doc = {
        "format": MLP_FORMAT,
        "version": 1,
        "layer_sizes": model.layer_sizes,
        "weights": [W.tolist() for W in model.weights],
        "biases": [b.tolist() for b in model.biases],
        "config": {"hidden": list(model.config.hidden), "lr": model.config.lr,
                   "epochs": model.config.epochs, "seed": model.config.seed},
        "loss_curve": model.loss_curve,
        "meta": model.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_mlp(path) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MLP_FORMAT:
        raise ValueError(f"not a {MLP_FORMAT} file")
    cfg = MlpConfig(tuple(doc["config"]["hidden"]), doc["config"]["lr"],
                    doc["config"]["epochs"], doc["config"]["seed"])
    return MlpModel(doc["layer_sizes"],
                    [np.array(W) for W in doc["weights"]],
                    [np.array(b) for b in doc["biases"]],
                    cfg, doc.get("loss_curve", []), doc.get("meta", {}))
