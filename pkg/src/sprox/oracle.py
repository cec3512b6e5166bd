"""Independent checks: finite differences, grid-search prox, a Jacobi
eigenvalue routine, and a slow high-accuracy reference solver for tiny problems.

The reference solver runs a different method family first and then polishes
with its own dense smoothing code at much smaller mu, so a bug on the
production path cannot validate itself.
"""
from __future__ import annotations

import numpy as np

from .model import MultiTaskProblem, eval_objective, eval_objective_mt
from .penalty import Blocks, PenaltyLinearMap, empty_map


class GuardError(ValueError):
    """Problem too large (or budget too small) for the reference solver."""


def fd_gradient(f, beta, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``beta`` (any shape)."""
    if not h > 0:
        raise ValueError("h must be positive")
    beta = np.array(beta, dtype=np.float64)
    flat = beta.reshape(-1)
    out = np.empty_like(flat)
    for j in range(flat.size):
        old = flat[j]
        flat[j] = old + h
        fp = f(beta)
        flat[j] = old - h
        fm = f(beta)
        flat[j] = old
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise ValueError(f"non-finite function value near coordinate {j}")
        out[j] = (fp - fm) / (2.0 * h)
    return out.reshape(beta.shape)


def prox_1d_grid(v: float, t: float, resolution: int = 10**6) -> float:
    """Grid minimizer of ``0.5 (x - v)^2 + t |x|`` on ``[-|v|-t, |v|+t]``.

    The grid has an odd number of points so that 0 is on it.
    """
    if resolution < 10**5:
        raise ValueError("resolution must be at least 1e5")
    a = abs(v) + t
    if a == 0:
        return 0.0
    n = 2 * (resolution // 2) + 1
    x = np.linspace(-a, a, n)
    obj = 0.5 * (x - v) ** 2 + t * np.abs(x)
    return float(x[np.argmin(obj)])


def grid_step(v: float, t: float, resolution: int = 10**6) -> float:
    n = 2 * (resolution // 2) + 1
    return 2.0 * (abs(v) + t) / (n - 1)


def jacobi_eigenvalues(A, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A * A) - np.sum(np.diag(A) ** 2))
        if off <= tol * max(np.abs(A).max(), 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * A[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                R = np.eye(n)
                R[p, p] = R[q, q] = c
                R[p, q] = s
                R[q, p] = -s
                A = R.T @ A @ R
    return np.sort(np.diag(A))


def least_squares_objective(problem) -> float:
    """Optimal ``0.5 ||y - X beta||^2`` from the normal equations."""
    X, y = problem.X, problem.target
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    r = y - X @ beta
    return 0.5 * float(np.sum(r * r))


def orthogonal_lasso(problem, lam: float) -> np.ndarray:
    """Closed-form lasso solution when ``X^T X = I``: soft-threshold ``X^T y``."""
    z = problem.X.T @ problem.target
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def _objective(problem, cmap, beta, lam):
    if isinstance(problem, MultiTaskProblem):
        return eval_objective_mt(problem, cmap, beta, lam)
    return eval_objective(problem, cmap, beta, lam)


class _DensePenalty:
    """Dense re-implementation of the smoothed penalty, used only here."""

    def __init__(self, cmap):
        self.C = cmap.to_dense()
        self.dim = cmap.dim
        self.member = None
        if isinstance(cmap.ball, Blocks):
            # rows x blocks indicator
            self.member = np.repeat(np.eye(len(cmap.ball.sizes)), cmap.ball.sizes, axis=0)
        self.norm2 = float(np.linalg.norm(self.C, 2) ** 2) if cmap.rows else 0.0

    def __call__(self, x, mu):
        """``(smoothed value, gradient)`` with the penalty on length-dim slices."""
        V = x.reshape(-1, self.dim)
        U = V @ self.C.T
        if self.member is None:
            A = np.clip(U / mu, -1.0, 1.0)
        else:
            A = U / mu
            nrm = np.sqrt((A * A) @ self.member)
            A = A / (np.maximum(nrm, 1.0) @ self.member.T)
        val = float(np.sum(A * U) - 0.5 * mu * np.sum(A * A))
        return val, (A @ self.C).reshape(x.shape)


def _restarted_fista(G, XtY, half_yy, pen, lam, x, mu, iters, lmax):
    L = lmax + pen.norm2 / mu

    def fsm(z):
        return (0.5 * float(np.sum(z * (G @ z))) - float(np.sum(z * XtY)) + half_yy
                + pen(z, mu)[0] + lam * float(np.sum(np.abs(z))))

    xk = x.copy()
    y = x.copy()
    t = 1.0
    fk = fsm(xk)
    for _ in range(iters):
        g = G @ y - XtY + pen(y, mu)[1]
        z = y - g / L
        xn = np.sign(z) * np.maximum(np.abs(z) - lam / L, 0.0)
        fn = fsm(xn)
        if fn > fk:
            # function-value restart: drop momentum, step again from xk
            t = 1.0
            y = xk.copy()
            continue
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = xn + ((t - 1.0) / tn) * (xn - xk)
        xk, fk, t = xn, fn, tn
    return xk


def reference_solve(problem, cmap: PenaltyLinearMap | None, lam: float,
                    budget: int = 100000, polish_iters: int = 10000):
    """High-accuracy objective for tiny problems.

    Phase one: subgradient descent with Polyak target-level steps (target
    ``f_best - delta_k``, ``delta_k`` shrinking as ``1/sqrt(k)``) plus iterate
    averaging, for ``budget`` iterations. Phase two: a restarted accelerated
    proximal gradient on the smoothed objective, warm-started from the best
    phase-one point, with mu stepped down from 1e-3 to 1e-8 and
    ``polish_iters`` iterations at mu = 1e-8. Phase two uses a dense ``C``,
    an SVD spectral norm and a dense eigensolver, so it shares no code with
    the production solver.

    Works for single- and multi-task problems. Returns ``(beta, objective)``
    for the best point seen in either phase.
    """
    from . import kernels

    multi = isinstance(problem, MultiTaskProblem)
    J = problem.n_features
    if J > 100:
        raise GuardError(f"reference_solve is limited to J <= 100, got {J}")
    if budget < 10**5:
        raise GuardError("budget must be at least 1e5 iterations")
    if cmap is None:
        cmap = empty_map(problem.n_tasks if multi else J)
    if hasattr(cmap, "base"):
        cmap = cmap.base

    X, Y = problem.X, problem.target
    G = np.ascontiguousarray(X.T @ X)
    XtY = X.T @ Y
    shape = XtY.shape
    XtY2 = np.ascontiguousarray(XtY.reshape(J, -1))
    half_yy = 0.5 * float(np.sum(Y * Y))

    best_x, avg = kernels.polyak_subgradient(
        G, XtY2, half_yy, cmap.row_idx, cmap.col_idx, np.ascontiguousarray(cmap.values),
        cmap.rows, cmap.dim, cmap.block_ptr, float(lam), int(budget),
        0.05 * max(half_yy, 1e-12))
    best_x = best_x.reshape(shape)
    candidates = [best_x, avg.reshape(shape)]

    pen = _DensePenalty(cmap)
    lmax = float(np.linalg.eigvalsh(G)[-1])
    x = best_x
    stages = [(mu, 2000) for mu in (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)] + [(1e-8, polish_iters)]
    for mu, iters in stages:
        x = _restarted_fista(G, XtY, half_yy, pen, lam, x, mu, iters, lmax)
        candidates.append(x)

    objs = [_objective(problem, cmap, c, lam) for c in candidates]
    k = int(np.argmin(objs))
    return candidates[k], float(objs[k])
