# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: the pairwise shift-cost tensor and the SMO solver.

Both mirror the pure-NumPy fallbacks (_kernels_numpy, _smo_numpy) step for
step — same working-set selection, same deterministic RNG — so results
agree to float rounding and the fallbacks remain drop-in replacements.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF STEP_EPS = 1e-8
DEF OBJ_EPS = 1e-12


cdef inline unsigned long long _mix(unsigned long long *state) noexcept nogil:
    cdef unsigned long long z
    state[0] = state[0] + 0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def shift_cost_tensor(X, Y):
    """Squared Frobenius mismatch for every pair under every row shift.

    Same contract as cyltouch._kernels_numpy.shift_cost_tensor; squared
    differences are accumulated through per-row dot products, so no clamp
    is needed.  The pair (i, j) stays resident in cache while all shifts
    are produced from its row-dot matrix.
    """
    cdef double[:, :, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, :, :, ::1] Yv = np.ascontiguousarray(Y, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], m = Yv.shape[0]
    cdef Py_ssize_t ch = Xv.shape[1], rows = Xv.shape[2], cols = Xv.shape[3]
    if Yv.shape[1] != ch or Yv.shape[2] != rows or Yv.shape[3] != cols:
        raise ValueError("X and Y must share (channels, rows, cols)")
    out = np.empty((rows, n, m), dtype=np.float64)
    cdef double[:, :, ::1] D = out
    cdef bint symmetric = (n == m) and (&Xv[0, 0, 0, 0] == &Yv[0, 0, 0, 0])
    sq_np = np.einsum("iqrc,iqrc->i", np.asarray(Xv), np.asarray(Xv))
    ysq_np = sq_np if symmetric else \
        np.einsum("iqrc,iqrc->i", np.asarray(Yv), np.asarray(Yv))
    cdef double[::1] xsq = np.ascontiguousarray(sq_np)
    cdef double[::1] ysq = np.ascontiguousarray(ysq_np)
    rowdot_np = np.empty((rows, rows), dtype=np.float64)
    cdef double[:, ::1] rowdot = rowdot_np
    cdef Py_ssize_t s, i, j, q, rx, ry, cc, j0, src
    cdef double acc, cross

    with nogil:
        for i in range(n):
            j0 = i if symmetric else 0
            for j in range(j0, m):
                for rx in range(rows):
                    for ry in range(rows):
                        acc = 0.0
                        for q in range(ch):
                            for cc in range(cols):
                                acc += Xv[i, q, rx, cc] * Yv[j, q, ry, cc]
                        rowdot[rx, ry] = acc
                for s in range(rows):
                    cross = 0.0
                    for rx in range(rows):
                        src = rx - s
                        if src < 0:
                            src += rows
                        cross += rowdot[rx, src]
                    acc = xsq[i] + ysq[j] - 2.0 * cross
                    D[s, i, j] = acc if acc > 0.0 else 0.0
        if symmetric:
            # ||x_j - t_s x_i|| == ||x_i - t_{rows-s} x_j||
            for s in range(rows):
                for i in range(n):
                    for j in range(i + 1, m):
                        D[s, j, i] = D[(rows - s) % rows, i, j]
    return out


cdef class _Smo:
    cdef double[:, ::1] K
    cdef double[::1] y
    cdef double[::1] alpha
    cdef double[::1] E
    cdef double b, C, tol
    cdef Py_ssize_t n
    cdef unsigned long long rng

    cdef bint take_step(self, Py_ssize_t i1, Py_ssize_t i2) noexcept nogil:
        cdef double a1_old, a2_old, y1, y2, E1, E2, s, L, H
        cdef double k11, k12, k22, eta, a2, a1, d1, d2, b1, b2, b_new
        cdef double u1, u2, v1, v2, L1, H1, psi_cur, psi_l, psi_h
        cdef Py_ssize_t t
        if i1 == i2:
            return False
        a1_old = self.alpha[i1]
        a2_old = self.alpha[i2]
        y1 = self.y[i1]
        y2 = self.y[i2]
        E1 = self.E[i1]
        E2 = self.E[i2]
        s = y1 * y2
        if s > 0:
            L = a1_old + a2_old - self.C
            if L < 0.0:
                L = 0.0
            H = a1_old + a2_old
            if H > self.C:
                H = self.C
        else:
            L = a2_old - a1_old
            if L < 0.0:
                L = 0.0
            H = self.C + a2_old - a1_old
            if H > self.C:
                H = self.C
        if L == H:
            return False
        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2 = a2_old + y2 * (E1 - E2) / eta
            if a2 < L:
                a2 = L
            elif a2 > H:
                a2 = H
        else:
            u1 = E1 + y1 - self.b
            u2 = E2 + y2 - self.b
            v1 = u1 - y1 * a1_old * k11 - y2 * a2_old * k12
            v2 = u2 - y1 * a1_old * k12 - y2 * a2_old * k22
            L1 = a1_old + s * (a2_old - L)
            H1 = a1_old + s * (a2_old - H)
            psi_cur = (0.5 * k11 * a1_old * a1_old + 0.5 * k22 * a2_old * a2_old
                       + s * k12 * a1_old * a2_old + y1 * a1_old * v1
                       + y2 * a2_old * v2 - a1_old - a2_old)
            psi_l = (0.5 * k11 * L1 * L1 + 0.5 * k22 * L * L
                     + s * k12 * L1 * L + y1 * L1 * v1 + y2 * L * v2 - L1 - L)
            psi_h = (0.5 * k11 * H1 * H1 + 0.5 * k22 * H * H
                     + s * k12 * H1 * H + y1 * H1 * v1 + y2 * H * v2 - H1 - H)
            a2 = L if psi_l <= psi_h else H
            if psi_cur - (psi_l if psi_l < psi_h else psi_h) <= OBJ_EPS:
                return False
        if a2 - a2_old < STEP_EPS * (a2 + a2_old + STEP_EPS) \
                and a2_old - a2 < STEP_EPS * (a2 + a2_old + STEP_EPS):
            return False
        a1 = a1_old + s * (a2_old - a2)
        if a1 < 0.0:
            a2 += s * a1
            a1 = 0.0
        elif a1 > self.C:
            a2 += s * (a1 - self.C)
            a1 = self.C
        d1 = y1 * (a1 - a1_old)
        d2 = y2 * (a2 - a2_old)
        b1 = self.b - E1 - d1 * k11 - d2 * k12
        b2 = self.b - E2 - d1 * k12 - d2 * k22
        if 0.0 < a1 < self.C:
            b_new = b1
        elif 0.0 < a2 < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        for t in range(self.n):
            self.E[t] += (d1 * self.K[t, i1] + d2 * self.K[t, i2]
                          + (b_new - self.b))
        self.alpha[i1] = a1
        self.alpha[i2] = a2
        self.b = b_new
        return True

    cdef bint examine(self, Py_ssize_t i2, Py_ssize_t *nb_buf) noexcept nogil:
        cdef double y2 = self.y[i2]
        cdef double a2 = self.alpha[i2]
        cdef double E2 = self.E[i2]
        cdef double r2 = E2 * y2
        cdef Py_ssize_t nb_size = 0, i, t, i1, best
        cdef double gap, best_gap
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return False
        for i in range(self.n):
            if 0.0 < self.alpha[i] < self.C:
                nb_buf[nb_size] = i
                nb_size += 1
        if nb_size > 1:
            best = nb_buf[0]
            best_gap = self.E[best] - E2
            if best_gap < 0.0:
                best_gap = -best_gap
            for t in range(1, nb_size):
                i = nb_buf[t]
                gap = self.E[i] - E2
                if gap < 0.0:
                    gap = -gap
                if gap > best_gap:
                    best_gap = gap
                    best = i
            if self.take_step(best, i2):
                return True
        if nb_size > 0:
            i1 = <Py_ssize_t>(_mix(&self.rng) % <unsigned long long>nb_size)
            for t in range(nb_size):
                if self.take_step(nb_buf[(i1 + t) % nb_size], i2):
                    return True
        i1 = <Py_ssize_t>(_mix(&self.rng) % <unsigned long long>self.n)
        for t in range(self.n):
            if self.take_step((i1 + t) % self.n, i2):
                return True
        return False


def smo_solve(K, y, double C, double tol, int max_passes, seed):
    """Compiled twin of cyltouch._smo_numpy.smo_solve; same return contract."""
    cdef _Smo st = _Smo()
    K = np.ascontiguousarray(K, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    st.K = K
    st.y = y
    st.n = st.K.shape[0]
    if st.K.shape[1] != st.n or st.y.shape[0] != st.n:
        raise ValueError("K must be square and match y")
    alpha_arr = np.zeros(st.n, dtype=np.float64)
    E_arr = np.empty(st.n, dtype=np.float64)
    st.alpha = alpha_arr
    st.E = E_arr
    st.b = 0.0
    st.C = C
    st.tol = tol
    st.rng = <unsigned long long>(int(seed) & 0xFFFFFFFFFFFFFFFF)

    nb_np = np.empty(st.n, dtype=np.intp)
    cand_np = np.empty(st.n, dtype=np.intp)
    cdef Py_ssize_t[::1] nb_buf = nb_np
    cdef Py_ssize_t[::1] cand = cand_np
    cdef bint examine_all = True
    cdef bint converged = False
    cdef int passes = 0
    cdef Py_ssize_t i, t, n_cand, changed

    for i in range(st.n):
        st.E[i] = -st.y[i]

    with nogil:
        while passes < max_passes:
            passes += 1
            if examine_all:
                n_cand = st.n
                for i in range(st.n):
                    cand[i] = i
            else:
                n_cand = 0
                for i in range(st.n):
                    if 0.0 < st.alpha[i] < st.C:
                        cand[n_cand] = i
                        n_cand += 1
            changed = 0
            for t in range(n_cand):
                if st.examine(cand[t], &nb_buf[0]):
                    changed += 1
            if examine_all:
                if changed == 0:
                    converged = True
                    break
                examine_all = False
            elif changed == 0:
                examine_all = True

    return alpha_arr, float(st.b), bool(converged), int(passes)
