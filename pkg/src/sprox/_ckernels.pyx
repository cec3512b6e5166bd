# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled penalty and shrinkage kernels. Same contracts as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def penalty_eval(const cnp.int64_t[::1] row, const cnp.int64_t[::1] col,
                 const double[::1] val, Py_ssize_t n_rows, Py_ssize_t dim,
                 const cnp.int64_t[::1] block_ptr, const double[:, ::1] V,
                 double mu, bint want_grad, bint want_alpha):
    cdef Py_ssize_t n_vec = V.shape[0]
    cdef Py_ssize_t nnz = val.shape[0]
    cdef Py_ssize_t n_blocks = block_ptr.shape[0] - 1
    cdef Py_ssize_t v, k, b, i, lo, hi
    cdef double exact = 0.0, smoothed = 0.0, s, nrm, a, x
    cdef bint box = block_ptr.shape[0] == 0

    grad_arr = np.zeros((n_vec, dim)) if want_grad else None
    alpha_arr = np.zeros((n_vec, n_rows))
    cdef double[:, ::1] A = alpha_arr
    cdef double[:, ::1] G
    if want_grad:
        G = grad_arr
    cdef double[::1] u = np.zeros(n_rows)

    for v in range(n_vec):
        for i in range(n_rows):
            u[i] = 0.0
        for k in range(nnz):
            u[row[k]] += val[k] * V[v, col[k]]
        if box:
            for i in range(n_rows):
                x = u[i]
                exact += fabs(x)
                if mu > 0:
                    a = x / mu
                    if a > 1.0:
                        a = 1.0
                    elif a < -1.0:
                        a = -1.0
                    smoothed += a * x - 0.5 * mu * a * a
                else:
                    a = (x > 0) - (x < 0)
                A[v, i] = a
        else:
            for b in range(n_blocks):
                lo = block_ptr[b]
                hi = block_ptr[b + 1]
                s = 0.0
                for i in range(lo, hi):
                    s += u[i] * u[i]
                nrm = sqrt(s)
                exact += nrm
                if mu > 0:
                    if nrm > mu:
                        a = 1.0 / nrm
                    else:
                        a = 1.0 / mu
                else:
                    a = 1.0 / nrm if nrm > 0 else 0.0
                s = 0.0
                for i in range(lo, hi):
                    A[v, i] = u[i] * a
                    s += A[v, i] * u[i] - 0.5 * mu * A[v, i] * A[v, i]
                smoothed += s
        if want_grad:
            for k in range(nnz):
                G[v, col[k]] += val[k] * A[v, row[k]]
    if not mu > 0:
        smoothed = exact
    return exact, smoothed, grad_arr, (alpha_arr if want_alpha else None)


def soft_threshold(v, double t):
    src = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(src)
    cdef double[::1] x = src.reshape(-1)
    cdef double[::1] y = out.reshape(-1)
    cdef Py_ssize_t j, n = x.shape[0]
    cdef double a
    # branchless so the loop vectorizes; -0.0 + +0.0 gives +0.0 for killed entries
    for j in range(n):
        a = x[j]
        y[j] = <double>(a > t) * (a - t) + <double>(a < -t) * (a + t)
    return out


def polyak_subgradient(const double[:, ::1] G, const double[:, ::1] XtY, double half_yy,
                       const cnp.int64_t[::1] row, const cnp.int64_t[::1] col,
                       const double[::1] val, Py_ssize_t n_rows, Py_ssize_t dim,
                       const cnp.int64_t[::1] block_ptr, double lam,
                       Py_ssize_t budget, double delta0):
    """Subgradient descent with Polyak target-level steps and iterate averaging.

    The iterate is J x K; the penalty acts on consecutive length-``dim``
    slices of its flattened form (``dim == K`` for multi-task, ``dim == J``
    with K == 1 for a single task). Returns ``(best_x, average_x)``.
    """
    cdef Py_ssize_t J = G.shape[0], K = XtY.shape[1]
    cdef Py_ssize_t nnz = val.shape[0], n_blocks = block_ptr.shape[0] - 1
    cdef bint box = block_ptr.shape[0] == 0
    cdef Py_ssize_t it, i, j, k, b, lo, hi
    cdef double f, best_f, s, nrm, a, ss, step, ax

    x_arr = np.zeros((J, K))
    best_arr = np.zeros((J, K))
    avg_arr = np.zeros((J, K))
    cdef double[:, ::1] x = x_arr
    cdef double[:, ::1] best = best_arr
    cdef double[:, ::1] avg = avg_arr
    cdef double[:, ::1] Gx = np.zeros((J, K))
    cdef double[:, ::1] sg = np.zeros((J, K))
    cdef double[::1] u = np.zeros(n_rows)
    cdef Py_ssize_t n_vec = (J * K) // dim, v
    cdef double* xp = &x[0, 0]
    cdef double* sp = &sg[0, 0]

    best_f = half_yy
    for it in range(budget):
        f = half_yy
        for i in range(J):
            for k in range(K):
                s = 0.0
                for j in range(J):
                    s += G[i, j] * x[j, k]
                Gx[i, k] = s
        for i in range(J):
            for k in range(K):
                ax = x[i, k]
                f += 0.5 * ax * Gx[i, k] - ax * XtY[i, k] + lam * fabs(ax)
                sg[i, k] = Gx[i, k] - XtY[i, k] + lam * ((ax > 0) - (ax < 0))
        # penalty value and subgradient, row by row
        for v in range(n_vec):
            for j in range(n_rows):
                u[j] = 0.0
            for j in range(nnz):
                u[row[j]] += val[j] * xp[v * dim + col[j]]
            if box:
                for j in range(n_rows):
                    f += fabs(u[j])
                    u[j] = (u[j] > 0) - (u[j] < 0)
            else:
                for b in range(n_blocks):
                    lo = block_ptr[b]
                    hi = block_ptr[b + 1]
                    s = 0.0
                    for j in range(lo, hi):
                        s += u[j] * u[j]
                    nrm = sqrt(s)
                    f += nrm
                    a = 1.0 / nrm if nrm > 0 else 0.0
                    for j in range(lo, hi):
                        u[j] *= a
            for j in range(nnz):
                sp[v * dim + col[j]] += val[j] * u[row[j]]
        if f < best_f:
            best_f = f
            best[:, :] = x
        ss = 0.0
        for i in range(J):
            for k in range(K):
                ss += sg[i, k] * sg[i, k]
        if ss == 0.0:
            break
        step = (f - best_f + delta0 / sqrt(it + 1.0)) / ss
        for i in range(J):
            for k in range(K):
                x[i, k] -= step * sg[i, k]
                avg[i, k] += (x[i, k] - avg[i, k]) / (it + 1.0)
    return best_arr, avg_arr
