"""Pure numpy/scipy kernels. Reference behaviour for ``_ckernels``."""
import numpy as np
import scipy.sparse as sp


def _csr(row, col, val, n_rows, dim):
    return sp.csr_matrix((val, (row, col)), shape=(n_rows, dim))


def penalty_eval(row, col, val, n_rows, dim, block_ptr, V, mu, want_grad, want_alpha):
    """Evaluate the penalty ``max_{alpha in Q} alpha^T C v - mu/2 ||alpha||^2``
    for every row ``v`` of ``V``.

    ``block_ptr`` of length 0 selects the l-inf box; otherwise it lists the
    boundaries of the l2 blocks. ``mu == 0`` returns the exact penalty and a
    subgradient (normalized blocks, sign for the box, zero at zero).

    Returns ``(exact, smoothed, grad, alpha)`` summed over rows of ``V``;
    ``grad`` / ``alpha`` are None unless requested.
    """
    n_vec = V.shape[0]
    if n_rows == 0:
        grad = np.zeros_like(V) if want_grad else None
        alpha = np.zeros((n_vec, 0)) if want_alpha else None
        return 0.0, 0.0, grad, alpha

    C = _csr(row, col, val, n_rows, dim)
    U = np.asarray((C @ V.T).T)
    if len(block_ptr) == 0:
        absU = np.abs(U)
        exact = float(absU.sum())
        if mu > 0:
            A = np.clip(U / mu, -1.0, 1.0)
        else:
            A = np.sign(U)
    else:
        starts = np.asarray(block_ptr[:-1], dtype=np.intp)
        sizes = np.diff(block_ptr)
        norms = np.sqrt(np.add.reduceat(U * U, starts, axis=1))
        exact = float(norms.sum())
        if mu > 0:
            scale_b = np.where(norms > mu, mu / np.where(norms > mu, norms, 1.0), 1.0) / mu
        else:
            scale_b = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)
        A = U * np.repeat(scale_b, sizes, axis=1)
    if mu > 0:
        smoothed = float(np.sum(A * U) - 0.5 * mu * np.sum(A * A))
    else:
        smoothed = exact
    grad = np.asarray((C.T @ A.T).T) if want_grad else None
    return exact, smoothed, grad, (A if want_alpha else None)


def soft_threshold(v, t):
    a = np.abs(v)
    return np.where(a > t, v - np.copysign(t, v), 0.0)


def polyak_subgradient(G, XtY, half_yy, row, col, val, n_rows, dim, block_ptr, lam,
                       budget, delta0):
    """Subgradient descent with Polyak target-level steps and iterate averaging.

    Returns ``(best_x, average_x)``; the iterate is J x K and the penalty acts
    on consecutive length-``dim`` slices of its flattened form.
    """
    J, K = XtY.shape
    x = np.zeros((J, K))
    avg = np.zeros((J, K))
    best_f, best = half_yy, x.copy()
    for it in range(budget):
        Gx = G @ x
        pen, _, pg, _ = penalty_eval(row, col, val, n_rows, dim, block_ptr,
                                     x.reshape(-1, dim), 0.0, True, False)
        pg = pg.reshape(J, K)
        f = (half_yy + float(np.sum(0.5 * x * Gx - x * XtY)) + pen
             + lam * float(np.sum(np.abs(x))))
        if f < best_f:
            best_f, best = f, x.copy()
        s = Gx - XtY + pg + lam * np.sign(x)
        ss = float(np.sum(s * s))
        if ss == 0.0:
            break
        step = (f - best_f + delta0 / np.sqrt(it + 1.0)) / ss
        x = x - step * s
        avg += (x - avg) / (it + 1.0)
    return best, avg
