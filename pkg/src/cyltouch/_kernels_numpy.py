"""Pure-NumPy backend for the pairwise shift-cost tensor.

Uses the ||x||^2 + ||y||^2 - 2<x,y> expansion with one GEMM per shift.
Cancellation can leave tiny negative values on near-identical pairs, so
the result is clamped at zero; the compiled backend accumulates squared
differences directly and needs no clamp.
"""

from __future__ import annotations

import numpy as np


def shift_cost_tensor(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Squared Frobenius mismatch for every pair under every row shift.

    X: (n, ch, rows, cols), Y: (m, ch, rows, cols); returns D with
    D[s, i, j] = ||X[i] - roll(Y[j], s rows)||_F^2 over all channels.
    """
    n = X.shape[0]
    m = Y.shape[0]
    rows = X.shape[2]
    Xf = np.ascontiguousarray(X.reshape(n, -1))
    xsq = np.einsum("ij,ij->i", Xf, Xf)
    ysq = np.einsum("ijkl,ijkl->i", Y, Y)  # row shifts preserve the norm
    D = np.empty((rows, n, m), dtype=np.float64)
    for s in range(rows):
        Ys = np.roll(Y, s, axis=2).reshape(m, -1)
        G = Xf @ Ys.T
        D[s] = xsq[:, None] + ysq[None, :] - 2.0 * G
    np.maximum(D, 0.0, out=D)
    return D
