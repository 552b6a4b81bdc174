"""Soft-margin kernel SVM: SMO on precomputed Gram matrices, one-vs-one
multi-class reduction, and cross-validated hyperparameter search.

The decision function of each binary machine is the usual weighted sum of
kernel similarities against its support vectors plus a bias; multi-class
prediction is majority voting over all C(5,2)=10 machines, with ties broken
by the larger summed |decision value| and then the smaller label index.

Set CYLTOUCH_PURE_PYTHON=1 to force the NumPy SMO fallback.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _smo_numpy
from .dataset import LabeledDataset
from .kernels import (
    GramMatrix,
    KernelSpec,
    cross_kernel,
    gram,
    gram_eigen_report,
    kernel_eval,
    kernel_matrix_from_costs,
    pairwise_shift_costs,
)
from .types import FeatureMap, GridShape, IntentLabel, LABELS

MODEL_FORMAT = "cyltouch-model"
MODEL_VERSION = 1

DEFAULT_C = 10.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 200
_SV_THRESHOLD = 1e-12  # alphas at or below this are dropped

_SMO_BACKENDS = {"numpy": _smo_numpy.smo_solve}
if os.environ.get("CYLTOUCH_PURE_PYTHON") != "1":
    try:
        from . import _speedups

        _SMO_BACKENDS["compiled"] = _speedups.smo_solve
    except ImportError:
        pass

DEFAULT_SMO_BACKEND = "compiled" if "compiled" in _SMO_BACKENDS else "numpy"


def smo_solve(K, y, C, tol=DEFAULT_TOL, max_passes=DEFAULT_MAX_PASSES, seed=0,
              backend: Optional[str] = None):
    """Dispatch to the selected SMO backend; see _smo_numpy.smo_solve."""
    impl = _SMO_BACKENDS[backend or DEFAULT_SMO_BACKEND]
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    return impl(K, y, C, tol, max_passes, seed)


def _pair_seed(seed: int, pair_index: int) -> int:
    return int(np.random.SeedSequence((seed, pair_index))
               .generate_state(1, dtype=np.uint64)[0])


@dataclass
class BinarySvm:
    """One binary machine of the one-vs-one reduction.

    ``class_pair`` is (positive, negative); ``dual_coef`` stores the signed
    alpha_i * y_i, so the decision value is dual_coef . k(x, sv) + bias.
    """

    class_pair: tuple
    support_indices: np.ndarray  # rows into SvmModel.support_vectors
    dual_coef: np.ndarray
    bias: float
    converged: bool = True


@dataclass
class SvmModel:
    spec: KernelSpec
    C: float
    labels: tuple  # IntentLabels present at training time, ascending
    support_vectors: list  # deduplicated FeatureMaps
    binaries: list  # BinarySvm per unordered class pair
    train_meta: dict = field(default_factory=dict)

    def grid_shape(self) -> GridShape:
        return self.support_vectors[0].shape


def train_binary(g: GramMatrix, y: Sequence[float], C: float,
                 tol: float = DEFAULT_TOL, max_passes: int = DEFAULT_MAX_PASSES,
                 seed: int = 0, backend: Optional[str] = None):
    """Train one binary machine on a Gram matrix with +-1 labels.

    Returns (alpha, b, converged, passes); alphas are stored dense over the
    training set.  Raises if only one class is present.
    """
    y = np.asarray(y, dtype=np.float64)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("binary training needs at least one sample per sign")
    return smo_solve(g.entries, y, C, tol=tol, max_passes=max_passes,
                     seed=seed, backend=backend)


def kkt_violation(K: np.ndarray, y: np.ndarray, alpha: np.ndarray, b: float,
                  C: float) -> float:
    """Largest KKT slack over the training set for a converged dual.

    Zero-alpha samples need y*f >= 1, bound samples y*f <= 1, free samples
    y*f == 1; the return value is the worst signed violation.
    """
    y = np.asarray(y, dtype=np.float64)
    f = K @ (alpha * y) + b
    r = y * f - 1.0
    atol = 1e-9 * max(C, 1.0)
    at_zero = alpha <= atol
    at_c = alpha >= C - atol
    free = ~(at_zero | at_c)
    worst = 0.0
    if np.any(at_zero):
        worst = max(worst, float(np.max(-r[at_zero], initial=0.0)))
    if np.any(at_c):
        worst = max(worst, float(np.max(r[at_c], initial=0.0)))
    if np.any(free):
        worst = max(worst, float(np.max(np.abs(r[free]), initial=0.0)))
    return worst


def clip_psd(K: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero (optional indefinite-kernel mode)."""
    w, V = np.linalg.eigh(K)
    w = np.maximum(w, 0.0)
    out = (V * w) @ V.T
    return 0.5 * (out + out.T)


@dataclass
class _RawBinary:
    pair: tuple  # (positive int label, negative int label)
    rows: np.ndarray  # rows into the training set this machine was fit on
    coef: np.ndarray
    bias: float
    converged: bool


def _fit_pairs(K: np.ndarray, y_int: np.ndarray, C: float, tol: float,
               max_passes: int, seed: int, backend: Optional[str] = None):
    present = sorted(int(v) for v in np.unique(y_int))
    if len(present) < 2:
        raise ValueError("multi-class training needs at least 2 classes")
    raw = []
    for pair_index, (a, b) in enumerate(itertools.combinations(present, 2)):
        idx = np.flatnonzero((y_int == a) | (y_int == b))
        y_sub = np.where(y_int[idx] == a, 1.0, -1.0)
        K_sub = np.ascontiguousarray(K[np.ix_(idx, idx)])
        alpha, bias, converged, _ = smo_solve(
            K_sub, y_sub, C, tol=tol, max_passes=max_passes,
            seed=_pair_seed(seed, pair_index), backend=backend)
        sv = alpha > _SV_THRESHOLD
        raw.append(_RawBinary((a, b), idx[sv], (alpha * y_sub)[sv],
                              float(bias), bool(converged)))
    return raw


def _vote(K_cross: np.ndarray, raw: Sequence[_RawBinary], n_classes: int = len(LABELS)):
    """Majority vote over binaries given kernel values against training rows."""
    n = K_cross.shape[0]
    votes = np.zeros((n, n_classes), dtype=np.int64)
    scores = np.zeros((n, n_classes))
    for rb in raw:
        f = K_cross[:, rb.rows] @ rb.coef + rb.bias
        a, b = rb.pair
        wins_a = f > 0
        votes[wins_a, a] += 1
        votes[~wins_a, b] += 1
        scores[wins_a, a] += np.abs(f[wins_a])
        scores[~wins_a, b] += np.abs(f[~wins_a])
    pred = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = max(range(n_classes),
                   key=lambda c: (votes[i, c], scores[i, c], -c))
        pred[i] = best
    return pred, votes


def train_multiclass(ds: LabeledDataset, spec: KernelSpec, C: float = DEFAULT_C,
                     tol: float = DEFAULT_TOL, max_passes: int = DEFAULT_MAX_PASSES,
                     seed: int = 0, psd_clip: bool = False,
                     backend: Optional[str] = None) -> SvmModel:
    """Train the one-vs-one multi-class model on a featurized dataset.

    The Gram matrix is computed once and sliced per class pair.  With
    psd_clip=True, negative eigenvalues of the training Gram are clipped to
    zero before solving (A/B mode for the indefinite cylindrical kernel).
    """
    if ds.kind != "featurized":
        raise ValueError("train_multiclass expects a featurized dataset")
    feats = ds.payloads()
    y_int = ds.labels()
    g = gram(spec, feats, backend=backend)
    eig_report = gram_eigen_report(g)
    K = clip_psd(g.entries) if psd_clip else g.entries

    raw = _fit_pairs(K, y_int, C, tol, max_passes, seed, backend=backend)

    union = sorted({int(r) for rb in raw for r in rb.rows})
    row_to_sv = {row: i for i, row in enumerate(union)}
    support_vectors = [feats[row] for row in union]
    binaries = []
    for rb in raw:
        binaries.append(BinarySvm(
            class_pair=(IntentLabel(rb.pair[0]), IntentLabel(rb.pair[1])),
            support_indices=np.array([row_to_sv[int(r)] for r in rb.rows],
                                     dtype=np.int64),
            dual_coef=rb.coef.copy(),
            bias=rb.bias,
            converged=rb.converged,
        ))
    labels = tuple(IntentLabel(v) for v in sorted(int(v) for v in np.unique(y_int)))
    train_meta = {
        "solver": "smo",
        "multiclass": "one_vs_one",
        "n_train": len(ds),
        "seed": seed,
        "tol": tol,
        "max_passes": max_passes,
        "psd_clip": psd_clip,
        "gram_min_eig": eig_report["min_eig"],
        "gram_n_negative": eig_report["n_negative"],
        "converged_pairs": int(sum(b.converged for b in binaries)),
        "backend": backend or DEFAULT_SMO_BACKEND,
        "class_counts": {l.name: int(np.sum(y_int == int(l))) for l in labels},
    }
    return SvmModel(spec, C, labels, support_vectors, binaries, train_meta)


def _model_raw_binaries(model: SvmModel):
    return [_RawBinary((int(b.class_pair[0]), int(b.class_pair[1])),
                       b.support_indices, b.dual_coef, b.bias, b.converged)
            for b in model.binaries]


def predict_batch(model: SvmModel, fms: Sequence[FeatureMap],
                  backend: Optional[str] = None):
    """Predict labels and per-class vote counts for a batch of feature maps."""
    fms = list(fms)
    if not fms:
        return np.empty(0, dtype=np.int64), np.zeros((0, len(LABELS)), dtype=np.int64)
    if fms[0].shape != model.grid_shape():
        raise ValueError("feature map shape does not match the model")
    K_cross = cross_kernel(model.spec, fms, model.support_vectors, backend=backend)
    return _vote(K_cross, _model_raw_binaries(model))


def predict(model: SvmModel, fm: FeatureMap, backend: Optional[str] = None):
    """Predict one feature map; returns (IntentLabel, votes per class)."""
    pred, votes = predict_batch(model, [fm], backend=backend)
    return IntentLabel(int(pred[0])), votes[0]


def decision_values_slow(model: SvmModel, fm: FeatureMap) -> dict:
    """Independent slow path: re-evaluate the kernel per support vector.

    Used to cross-check the cached/batched prediction path.
    """
    out = {}
    for b in model.binaries:
        f = b.bias
        for idx, coef in zip(b.support_indices, b.dual_coef):
            f += coef * kernel_eval(model.spec, fm, model.support_vectors[int(idx)])
        out[(b.class_pair[0].name, b.class_pair[1].name)] = f
    return out


# --- hyperparameter search -------------------------------------------------

def default_grid(shape: GridShape, kind: str) -> dict:
    grid = {
        "gamma": [0.01, 0.1, 1.0 / (4.0 * shape.cells), 1.0],
        "C": [0.1, 1.0, 10.0, 100.0],
    }
    if kind == "cylindrical":
        grid["delta"] = [1.0, 2.0, 4.0]
    return grid


@dataclass
class GridSearchResult:
    best_spec: KernelSpec
    best_C: float
    best_cv_accuracy: float
    table: list  # one record per grid point
    folds: int
    seed: int


def grid_search(ds: LabeledDataset, kind: str, grid: Optional[dict] = None,
                folds: int = 5, seed: int = 0, tol: float = DEFAULT_TOL,
                max_passes: int = DEFAULT_MAX_PASSES,
                backend: Optional[str] = None) -> GridSearchResult:
    """K-fold cross-validated accuracy over the hyperparameter grid.

    Ties go to the smaller C, then the larger gamma, then the larger delta
    (when cross-validation cannot tell deltas apart, the laxer shift
    penalty is the shift-tolerant choice).  The shift-cost tensor is
    computed once and reused across every grid point and fold.
    """
    if ds.kind != "featurized":
        raise ValueError("grid_search expects a featurized dataset")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    shape = ds.grid_shape()
    grid = grid or default_grid(shape, kind)
    gammas = list(grid.get("gamma", []))
    Cs = list(grid.get("C", []))
    deltas = list(grid.get("delta", [])) if kind == "cylindrical" else [None]
    if not gammas or not Cs or not deltas:
        raise ValueError("empty hyperparameter grid")

    y_int = ds.labels()
    n = len(ds)
    if folds > n:
        raise ValueError(f"cannot run {folds}-fold CV on {n} samples")
    costs = pairwise_shift_costs(ds.feature_array(), backend=backend)

    rng = np.random.default_rng(seed)
    fold_ids = np.array_split(rng.permutation(n), folds)

    table = []
    for gamma in gammas:
        for delta in deltas:
            spec = KernelSpec(kind, gamma, delta)
            K = kernel_matrix_from_costs(spec, costs)
            iu = np.triu_indices(n, k=1)
            K[(iu[1], iu[0])] = K[iu]
            np.fill_diagonal(K, 1.0)
            for C in Cs:
                fold_accs = []
                for va in fold_ids:
                    tr = np.setdiff1d(np.arange(n), va, assume_unique=False)
                    raw = _fit_pairs(K[np.ix_(tr, tr)], y_int[tr], C, tol,
                                     max_passes, seed, backend=backend)
                    pred, _ = _vote(np.ascontiguousarray(K[np.ix_(va, tr)]), raw)
                    fold_accs.append(float(np.mean(pred == y_int[va])))
                table.append({
                    "kind": kind, "gamma": gamma, "C": C, "delta": delta,
                    "fold_accuracies": fold_accs,
                    "mean_accuracy": float(np.mean(fold_accs)),
                })

    def rank(rec):
        return (-rec["mean_accuracy"], rec["C"], -rec["gamma"],
                -(rec["delta"] or 0.0))

    best = min(table, key=rank)
    best_spec = KernelSpec(kind, best["gamma"], best["delta"])
    return GridSearchResult(best_spec, best["C"], best["mean_accuracy"],
                            table, folds, seed)


# --- model files -------------------------------------------------------------

def model_to_dict(model: SvmModel) -> dict:
    shape = model.grid_shape()
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kernel": model.spec.to_dict(),
        "C": model.C,
        "labels": [l.name for l in model.labels],
        "sv_shape": [model.support_vectors[0].channels.shape[0],
                     shape.rows, shape.cols],
        "support_vectors": [sv.channels.ravel().tolist()
                            for sv in model.support_vectors],
        "binaries": [
            {
                "pair": [b.class_pair[0].name, b.class_pair[1].name],
                "dual_coef": b.dual_coef.tolist(),
                "support_indices": b.support_indices.tolist(),
                "bias": b.bias,
                "converged": b.converged,
            }
            for b in model.binaries
        ],
        "train_meta": model.train_meta,
    }


def model_from_dict(d: dict) -> SvmModel:
    if d.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} file (format={d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    ch, rows, cols = d["sv_shape"]
    shape = GridShape(rows, cols)
    svs = [FeatureMap(shape, np.array(flat, dtype=np.float64).reshape(ch, rows, cols))
           for flat in d["support_vectors"]]
    binaries = [
        BinarySvm(
            class_pair=(IntentLabel.from_name(b["pair"][0]),
                        IntentLabel.from_name(b["pair"][1])),
            support_indices=np.array(b["support_indices"], dtype=np.int64),
            dual_coef=np.array(b["dual_coef"], dtype=np.float64),
            bias=float(b["bias"]),
            converged=bool(b.get("converged", True)),
        )
        for b in d["binaries"]
    ]
    return SvmModel(
        spec=KernelSpec.from_dict(d["kernel"]),
        C=float(d["C"]),
        labels=tuple(IntentLabel.from_name(name) for name in d["labels"]),
        support_vectors=svs,
        binaries=binaries,
        train_meta=d.get("train_meta", {}),
    )


def save_model(model: SvmModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path) -> SvmModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
