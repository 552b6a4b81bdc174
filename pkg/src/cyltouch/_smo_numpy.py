"""Reference SMO solver (Platt-style pairwise coordinate ascent).

Kept in plain NumPy/Python as the fallback for the compiled version; both
implement the same algorithm with the same deterministic RNG, so they take
the same sequence of working-set steps.

Indefinite Gram matrices (the cylindrical kernel can produce them) are
handled at the working-pair level: when the pairwise curvature
eta = K11 + K22 - 2*K12 is not positive, the dual restricted to the pair
is concave along the step direction, so the constrained optimum sits at a
box endpoint; the endpoint with the better dual objective is taken, and a
step counts as progress only if it improves the objective.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_STEP_EPS = 1e-8  # relative progress threshold on alpha steps
_OBJ_EPS = 1e-12  # minimum dual-objective improvement for endpoint steps


class SplitMix64:
    """Tiny deterministic RNG; mirrored bit-for-bit in the compiled backend."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def below(self, n: int) -> int:
        return self.next64() % n


def smo_solve(K: np.ndarray, y: np.ndarray, C: float, tol: float,
              max_passes: int, seed: int):
    """Solve the soft-margin dual on a precomputed kernel matrix.

    Returns (alpha, b, converged, passes).  Converged means a full pass
    found no sample violating the KKT conditions by more than tol (for
    non-positive-curvature pairs: no pair whose endpoint step improves
    the dual objective).
    """
    n = K.shape[0]
    y = np.asarray(y, dtype=np.float64)
    alpha = np.zeros(n)
    state = {"b": 0.0}
    E = -y.copy()  # f == 0 initially, E_i = f(x_i) - y_i
    rng = SplitMix64(seed)

    def take_step(i1: int, i2: int) -> bool:
        nonlocal E
        if i1 == i2:
            return False
        a1_old = alpha[i1]
        a2_old = alpha[i2]
        y1 = y[i1]
        y2 = y[i2]
        E1 = E[i1]
        E2 = E[i2]
        s = y1 * y2
        if s > 0:
            L = max(0.0, a1_old + a2_old - C)
            H = min(C, a1_old + a2_old)
        else:
            L = max(0.0, a2_old - a1_old)
            H = min(C, C + a2_old - a1_old)
        if L == H:
            return False
        k11 = K[i1, i1]
        k12 = K[i1, i2]
        k22 = K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            if a2 < L:
                a2 = L
            elif a2 > H:
                a2 = H
        else:
            # raw kernel sums (no bias), then the pair-restricted objective
            b = state["b"]
            u1 = E1 + y1 - b
            u2 = E2 + y2 - b
            v1 = u1 - y1 * a1_old * k11 - y2 * a2_old * k12
            v2 = u2 - y1 * a1_old * k12 - y2 * a2_old * k22

            def psi(a1c, a2c):
                return (0.5 * k11 * a1c * a1c + 0.5 * k22 * a2c * a2c
                        + s * k12 * a1c * a2c + y1 * a1c * v1 + y2 * a2c * v2
                        - a1c - a2c)

            L1 = a1_old + s * (a2_old - L)
            H1 = a1_old + s * (a2_old - H)
            psi_cur = psi(a1_old, a2_old)
            psi_l = psi(L1, L)
            psi_h = psi(H1, H)
            a2 = L if psi_l <= psi_h else H
            if psi_cur - min(psi_l, psi_h) <= _OBJ_EPS:
                return False
        if abs(a2 - a2_old) < _STEP_EPS * (a2 + a2_old + _STEP_EPS):
            return False
        a1 = a1_old + s * (a2_old - a2)
        if a1 < 0.0:
            a2 += s * a1
            a1 = 0.0
        elif a1 > C:
            a2 += s * (a1 - C)
            a1 = C
        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b = state["b"]
        b1 = b - E1 - d1 * k11 - d2 * k12
        b2 = b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < C:
            b_new = b1
        elif 0.0 < a2 < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        E += d1 * K[:, i1] + d2 * K[:, i2] + (b_new - b)
        alpha[i1] = a1
        alpha[i2] = a2
        state["b"] = b_new
        return True

    def examine(i2: int) -> bool:
        y2 = y[i2]
        a2 = alpha[i2]
        E2 = E[i2]
        r2 = E2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0.0)):
            return False
        nb = np.flatnonzero((alpha > 0.0) & (alpha < C))
        if nb.size > 1:
            i1 = int(nb[np.argmax(np.abs(E[nb] - E2))])
            if take_step(i1, i2):
                return True
        if nb.size > 0:
            start = rng.below(nb.size)
            for t in range(nb.size):
                if take_step(int(nb[(start + t) % nb.size]), i2):
                    return True
        start = rng.below(n)
        for t in range(n):
            if take_step((start + t) % n, i2):
                return True
        return False

    # The error cache is maintained incrementally only; elementwise updates
    # keep this path bit-identical to the compiled backend, and drift over a
    # solve stays orders of magnitude below tol.
    examine_all = True
    converged = False
    passes = 0
    while passes < max_passes:
        passes += 1
        if examine_all:
            candidates = range(n)
        else:
            candidates = [int(i) for i in np.flatnonzero((alpha > 0.0) & (alpha < C))]
        changed = 0
        for i2 in candidates:
            changed += examine(i2)
        if examine_all:
            if changed == 0:
                converged = True
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, state["b"], converged, passes
