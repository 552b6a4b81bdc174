"""Experiment harness: trains every requested classifier on identical
splits across seeds, reports mean/std accuracy and aggregated confusion
matrices.

The reported std is across generator seeds (std across human subjects would
need human subjects); this substitution is stated in every rendered header.
Wall-clock timings are collected but kept out of report.json/csv so
identical seeds and config produce byte-identical artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .baselines import (
    MlpConfig,
    predict_mdcm,
    predict_mlp_batch,
    train_mdcm,
    train_mlp,
)
from .dataset import LabeledDataset, load_dataset, split_train_test
from .featurize import featurize_dataset
from .kernels import KernelSpec
from .simgen import GeneratorConfig, generate
from .svm import DEFAULT_C, grid_search, predict_batch, train_multiclass
from .types import LABELS

METHODS = ("rbf_svm", "ck_svm", "mlp", "mdcm")
REPORT_FORMAT = "cyltouch-report"
STD_NOTE = ("accuracy std is taken across generator seeds "
            "(no human subjects in the simulated protocol)")


@dataclass(frozen=True)
class ExperimentConfig:
    generator: Optional[GeneratorConfig] = GeneratorConfig()
    dataset_path: Optional[str] = None  # overrides the generator when set
    methods: tuple = METHODS
    seeds: tuple = (0, 1, 2, 3, 4)
    train_fraction: float = 0.8
    hyper_search: bool = False
    folds: int = 5
    C: float = DEFAULT_C  # used when hyper_search is off
    shrinkage: float = 0.1
    threads: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ValueError("need at least one method")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.generator is None and self.dataset_path is None:
            raise ValueError("need a generator config or a dataset path")

    def to_meta(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "generator": None if self.generator is None or self.dataset_path
            else self.generator.to_meta(),
            "methods": list(self.methods),
            "seeds": list(self.seeds),
            "train_fraction": self.train_fraction,
            "hyper_search": self.hyper_search,
            "folds": self.folds,
            "C": self.C,
            "shrinkage": self.shrinkage,
        }


@dataclass
class MethodResult:
    accuracies: list
    confusion: np.ndarray  # (5, 5) int counts summed over seeds; rows = true
    hyper: list  # per-seed chosen hyperparameters (or None)
    train_seconds: float = 0.0
    score_seconds: float = 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))  # population std over seeds


@dataclass
class ExperimentReport:
    config_meta: dict
    methods: dict  # name -> MethodResult
    label_names: tuple = tuple(l.name for l in LABELS)


def _confusion(y_true: np.ndarray, y_pred: np.ndarray) -> np.ndarray:
    m = np.zeros((len(LABELS), len(LABELS)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        m[int(t), int(p)] += 1
    return m


def _dataset_for_seed(cfg: ExperimentConfig, seed: int) -> LabeledDataset:
    if cfg.dataset_path is not None:
        return load_dataset(cfg.dataset_path)
    return generate(replace(cfg.generator, seed=seed))


def _run_seed(cfg: ExperimentConfig, seed: int) -> dict:
    """Train and score every method for one seed; returns per-method records."""
    raw = _dataset_for_seed(cfg, seed)
    train_raw, test_raw = split_train_test(raw, cfg.train_fraction, seed)
    train_idx = set(train_raw.meta["split"]["indices"])
    test_idx = set(test_raw.meta["split"]["indices"])
    if train_idx & test_idx or len(train_idx | test_idx) != len(raw):
        raise AssertionError("train/test split is not a partition")

    needs_features = any(m != "mdcm" for m in cfg.methods)
    train_feat = featurize_dataset(train_raw) if needs_features else None
    test_feat = featurize_dataset(test_raw) if needs_features else None
    y_test = test_raw.labels()

    out = {}
    for method in cfg.methods:
        t0 = time.perf_counter()
        hyper = None
        if method in ("rbf_svm", "ck_svm"):
            kind = "rbf" if method == "rbf_svm" else "cylindrical"
            if cfg.hyper_search:
                gs = grid_search(train_feat, kind, folds=cfg.folds, seed=seed)
                spec, C = gs.best_spec, gs.best_C
                hyper = {**spec.to_dict(), "C": C,
                         "cv_accuracy": gs.best_cv_accuracy}
            else:
                spec = KernelSpec.default(train_feat.grid_shape(), kind)
                C = cfg.C
                hyper = {**spec.to_dict(), "C": C}
            model = train_multiclass(train_feat, spec, C=C, seed=seed)
            t1 = time.perf_counter()
            pred, _ = predict_batch(model, test_feat.payloads())
        elif method == "mlp":
            model = train_mlp(train_feat, MlpConfig(seed=seed))
            hyper = {"hidden": list(MlpConfig().hidden), "lr": MlpConfig().lr,
                     "epochs": MlpConfig().epochs}
            t1 = time.perf_counter()
            pred = predict_mlp_batch(model, test_feat.payloads())
        else:  # mdcm
            model = train_mdcm(train_raw, cfg.shrinkage)
            hyper = {"shrinkage": cfg.shrinkage}
            t1 = time.perf_counter()
            pred = np.array([int(predict_mdcm(model, w))
                             for w, _ in test_raw.items])
        t2 = time.perf_counter()
        out[method] = {
            "accuracy": float(np.mean(pred == y_test)),
            "confusion": _confusion(y_test, pred),
            "hyper": hyper,
            "train_seconds": t1 - t0,
            "score_seconds": t2 - t1,
        }
    return out


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentReport:
    """Run every (seed, method) cell; deterministic for fixed seeds/config."""
    seeds = list(cfg.seeds)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            per_seed = list(pool.map(lambda s: _run_seed(cfg, s), seeds))
    else:
        per_seed = []
        for s in seeds:
            per_seed.append(_run_seed(cfg, s))
            if progress:
                progress(f"seed {s} done")

    methods = {}
    for method in cfg.methods:
        accs = [rec[method]["accuracy"] for rec in per_seed]
        confusion = np.sum([rec[method]["confusion"] for rec in per_seed], axis=0)
        hyper = [rec[method]["hyper"] for rec in per_seed]
        methods[method] = MethodResult(
            accuracies=accs,
            confusion=confusion,
            hyper=hyper,
            train_seconds=sum(rec[method]["train_seconds"] for rec in per_seed),
            score_seconds=sum(rec[method]["score_seconds"] for rec in per_seed),
        )
    return ExperimentReport(cfg.to_meta(), methods)


def report_to_dict(report: ExperimentReport) -> dict:
    """JSON-ready view; timings are deliberately excluded (determinism)."""
    return {
        "format": REPORT_FORMAT,
        "version": 1,
        "std_note": STD_NOTE,
        "config": report.config_meta,
        "labels": list(report.label_names),
        "methods": {
            name: {
                "accuracies": r.accuracies,
                "mean": r.mean,
                "std": r.std,
                "hyper": r.hyper,
                "confusion": r.confusion.tolist(),
            }
            for name, r in report.methods.items()
        },
    }


def render_report(report: ExperimentReport, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(report)) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["method", "seed", "accuracy"])
        seeds = report.config_meta["seeds"]
        for name, r in report.methods.items():
            for seed, acc in zip(seeds, r.accuracies):
                w.writerow([name, seed, repr(acc)])
            w.writerow([name, "mean", repr(r.mean)])
            w.writerow([name, "std", repr(r.std)])
        return buf.getvalue()
    if fmt == "text":
        lines = [f"# experiment report ({STD_NOTE})", ""]
        lines.append(f"{'method':<10} {'mean':>8} {'std':>8}  per-seed accuracies")
        for name, r in report.methods.items():
            accs = " ".join(f"{a:.4f}" for a in r.accuracies)
            lines.append(f"{name:<10} {r.mean:>8.4f} {r.std:>8.4f}  [{accs}]")
        for name, r in report.methods.items():
            lines.append("")
            lines.append(f"confusion ({name}), rows = true "
                         f"(row sums = per-class test counts x seeds):")
            header = " ".join(f"{n[:9]:>10}" for n in report.label_names)
            lines.append(f"{'':<11}{header}")
            for i, row in enumerate(r.confusion):
                cells = " ".join(f"{int(v):>10}" for v in row)
                total = int(row.sum())
                lines.append(f"{report.label_names[i][:10]:<11}{cells}   | {total}")
            lines.append(f"train {r.train_seconds:.2f}s, "
                         f"score {r.score_seconds:.2f}s")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def confusion_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["method", "true", *report.label_names])
    for name, r in report.methods.items():
        for i, row in enumerate(r.confusion):
            w.writerow([name, report.label_names[i], *[int(v) for v in row]])
    return buf.getvalue()


def parse_report_json(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("format") != REPORT_FORMAT:
        raise ValueError(f"not a {REPORT_FORMAT} document")
    return doc


# --- shift-robustness protocol (real-data substitute) --------------------------

def shift_robustness(gen: GeneratorConfig, seed: int = 0, shifts=(1, 2),
                     hyper_search: bool = True, folds: int = 5) -> dict:
    """Train CK/RBF on unshifted data; score on rotated copies of the test set.

    Returns per-kernel accuracies on the unshifted test set and on the union
    of the row-rotated test sets (one copy per shift in ``shifts``).
    """
    from .kernels import rotate_rows

    cfg = replace(gen, max_shift=0, seed=seed)
    raw = generate(cfg)
    train_raw, test_raw = split_train_test(raw, 0.8, seed)
    train_feat = featurize_dataset(train_raw)
    test_feat = featurize_dataset(test_raw)
    y_test = test_raw.labels()

    shifted_payloads = []
    shifted_labels = []
    for s in shifts:
        shifted_payloads.extend(rotate_rows(fm, s) for fm in test_feat.payloads())
        shifted_labels.extend(y_test)
    shifted_labels = np.array(shifted_labels)

    out = {}
    for method, kind in (("ck_svm", "cylindrical"), ("rbf_svm", "rbf")):
        if hyper_search:
            gs = grid_search(train_feat, kind, folds=folds, seed=seed)
            spec, C = gs.best_spec, gs.best_C
        else:
            spec = KernelSpec.default(train_feat.grid_shape(), kind)
            C = DEFAULT_C
        model = train_multiclass(train_feat, spec, C=C, seed=seed)
        pred_plain, _ = predict_batch(model, test_feat.payloads())
        pred_shift, _ = predict_batch(model, shifted_payloads)
        out[method] = {
            "unshifted_accuracy": float(np.mean(pred_plain == y_test)),
            "shifted_accuracy": float(np.mean(pred_shift == shifted_labels)),
            "hyper": {**spec.to_dict(), "C": C},
        }
    return out
