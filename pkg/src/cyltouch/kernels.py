"""RBF and cylindrical kernels over tactile feature maps.

The cylindrical kernel keeps the Gaussian form of the RBF kernel but
replaces the squared Euclidean distance with an alignment cost: the
minimum over circular row shifts of the squared Frobenius mismatch plus
an exponential penalty on the shift.  Small rotations of the grasp stay
similar; large rotations are penalized back into dissimilarity.

Shift-cost tensors are the hot path (Gram assembly is quadratic in the
dataset).  Two interchangeable backends exist: a compiled direct-sum loop
and a BLAS-backed NumPy expansion.  The NumPy one wins on batch tensors
(GEMM throughput), so it is the default here, while the SMO solver in
cyltouch.svm defaults to its compiled twin; benchmarks/bench_backends.py
shows the comparison.  Set CYLTOUCH_PURE_PYTHON=1 to hide the compiled
backend entirely.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .types import FeatureMap, GridShape, TactileWindow

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy.shift_cost_tensor}
if os.environ.get("CYLTOUCH_PURE_PYTHON") != "1":
    try:
        from . import _speedups

        _BACKENDS["compiled"] = _speedups.shift_cost_tensor
    except ImportError:
        pass

# BLAS beats the compiled loop on batch cost tensors; see the benchmark
DEFAULT_BACKEND = "numpy"


def backend_name() -> str:
    return DEFAULT_BACKEND


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


KERNEL_KINDS = ("rbf", "cylindrical")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel configuration; delta only applies to the cylindrical kind."""

    kind: str
    gamma: float
    delta: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"kind must be one of {KERNEL_KINDS}, got {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.kind == "cylindrical":
            if self.delta is None or not self.delta > 0:
                raise ValueError("cylindrical kernel needs delta > 0")

    @classmethod
    def default(cls, shape: GridShape, kind: str = "cylindrical") -> "KernelSpec":
        gamma = 1.0 / (4.0 * shape.cells)
        delta = 2.0 if kind == "cylindrical" else None
        return cls(kind, gamma, delta)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "gamma": self.gamma}
        if self.kind == "cylindrical":
            d["delta"] = self.delta
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["kind"], d["gamma"], d.get("delta"))


@dataclass
class GramMatrix:
    """Symmetric kernel matrix with unit diagonal."""

    n: int
    entries: np.ndarray  # (n, n) float64
    spec: KernelSpec


def rotate_rows(x, s: int):
    """Circular shift by s along the circumferential (row) axis.

    Output cell (i, j) takes input cell ((i - s) mod rows, j).  Accepts a
    FeatureMap (all four channels shift together), a TactileWindow (every
    frame shifts) or a bare array whose second-to-last axis is the row axis.
    """
    if isinstance(x, FeatureMap):
        return FeatureMap(x.shape, np.roll(x.channels, s, axis=1))
    if isinstance(x, TactileWindow):
        return TactileWindow(x.shape, np.roll(x.values, s, axis=1), x.sample_rate_hz)
    a = np.asarray(x)
    return np.roll(a, s, axis=a.ndim - 2)


def shift_penalty(s: int, k: int, delta: float) -> float:
    """Exponential penalty exp(min(s, k-s)/delta) - 1 for a shift of s rows."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    s = s % k
    return math.exp(min(s, k - s) / delta) - 1.0


def shift_penalties(k: int, delta: float) -> np.ndarray:
    """Penalty vector for all shifts 0..k-1."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    s = np.arange(k)
    return np.exp(np.minimum(s, k - s) / delta) - 1.0


# deterministic argmin tie-break: smaller circular displacement, then smaller s
def _shift_order(k: int) -> np.ndarray:
    return np.array(sorted(range(k), key=lambda s: (min(s, k - s), s)), dtype=np.intp)


def _pair_shift_costs(x1: FeatureMap, x2: FeatureMap) -> np.ndarray:
    """||x1 - rotate_rows(x2, s)||_F^2 for every s, summed over channels."""
    k = x1.shape.rows
    c2 = x2.channels
    costs = np.empty(k)
    for s in range(k):
        d = x1.channels - np.roll(c2, s, axis=1)
        costs[s] = np.dot(d.ravel(), d.ravel())
    return costs


def _check_shapes(x1: FeatureMap, x2: FeatureMap):
    if x1.shape != x2.shape:
        raise ValueError(
            f"shape mismatch: {x1.shape.rows}x{x1.shape.cols} vs "
            f"{x2.shape.rows}x{x2.shape.cols}"
        )


def squared_distance(x1: FeatureMap, x2: FeatureMap) -> float:
    """Plain squared Frobenius distance over all channels (the RBF metric)."""
    _check_shapes(x1, x2)
    d = x1.channels - x2.channels
    return float(np.dot(d.ravel(), d.ravel()))


def cylindrical_distance(x1: FeatureMap, x2: FeatureMap, delta: float):
    """Minimum alignment cost and the minimizing shift.

    Returns (distance, best_shift) where distance is
    min_s ||x1 - rotate_rows(x2, s)||_F^2 + penalty(s).  Ties go to the
    smaller circular displacement min(s, k-s), then to the smaller s.
    """
    _check_shapes(x1, x2)
    k = x1.shape.rows
    total = _pair_shift_costs(x1, x2) + shift_penalties(k, delta)
    best = min(range(k), key=lambda s: (total[s], min(s, k - s), s))
    return float(total[best]), int(best)


def kernel_eval(spec: KernelSpec, x1: FeatureMap, x2: FeatureMap) -> float:
    _check_shapes(x1, x2)
    if spec.kind == "rbf":
        d = squared_distance(x1, x2)
    else:
        d, _ = cylindrical_distance(x1, x2, spec.delta)
    return math.exp(-spec.gamma * d)


def _as_feature_stack(xs) -> np.ndarray:
    if isinstance(xs, np.ndarray):
        if xs.ndim != 4:
            raise ValueError("feature stack must be (n, channels, rows, cols)")
        return np.ascontiguousarray(xs, dtype=np.float64)
    maps = list(xs)
    if not maps:
        raise ValueError("empty feature sequence")
    shape = maps[0].shape
    for fm in maps[1:]:
        if fm.shape != shape:
            raise ValueError("feature maps must share one grid shape")
    return np.ascontiguousarray(np.stack([fm.channels for fm in maps]))


def pairwise_shift_costs(xs, ys=None, backend: Optional[str] = None) -> np.ndarray:
    """Shift-cost tensor D[s, i, j] between two feature-map collections.

    This is the hot kernel behind Gram assembly; both kernel kinds and the
    whole hyperparameter grid can be derived from one tensor because the
    mismatch term depends on neither gamma nor delta.
    """
    X = _as_feature_stack(xs)
    Y = X if ys is None else _as_feature_stack(ys)
    if Y.shape[1:] != X.shape[1:]:
        raise ValueError("feature collections must share one grid shape")
    impl = _BACKENDS[backend or DEFAULT_BACKEND]
    return impl(X, Y)


def kernel_matrix_from_costs(spec: KernelSpec, costs: np.ndarray) -> np.ndarray:
    """Kernel values from a precomputed shift-cost tensor (k, n, m)."""
    if spec.kind == "rbf":
        d = costs[0]
    else:
        k = costs.shape[0]
        d = np.min(costs + shift_penalties(k, spec.delta)[:, None, None], axis=0)
    return np.exp(-spec.gamma * d)


def cross_kernel(spec: KernelSpec, xs, ys, backend: Optional[str] = None) -> np.ndarray:
    """Rectangular kernel matrix K[i, j] = K(xs[i], ys[j])."""
    costs = pairwise_shift_costs(xs, ys, backend=backend)
    return kernel_matrix_from_costs(spec, costs)


def gram(spec: KernelSpec, xs, backend: Optional[str] = None) -> GramMatrix:
    """Full Gram matrix; symmetry and the unit diagonal are enforced exactly.

    The upper triangle is canonical and mirrored into the lower one, so the
    matrix is bit-exactly symmetric regardless of backend rounding.
    """
    X = _as_feature_stack(xs)
    K = cross_kernel(spec, X, X, backend=backend)
    iu = np.triu_indices(K.shape[0], k=1)
    K[(iu[1], iu[0])] = K[iu]
    np.fill_diagonal(K, 1.0)
    return GramMatrix(K.shape[0], K, spec)


def gram_eigen_report(g: GramMatrix) -> dict:
    """Eigenvalue summary; the cylindrical kernel can be indefinite."""
    eig = np.linalg.eigvalsh(g.entries)
    return {
        "n": g.n,
        "min_eig": float(eig[0]),
        "max_eig": float(eig[-1]),
        "n_negative": int(np.sum(eig < 0)),
    }
