"""Smoothing proximal gradient solver (FISTA on the smoothed objective).

The structured penalty is replaced by its smooth approximation, the squared
loss plus that approximation forms the smooth part ``h``, and the remaining
``lam ||beta||_1`` is handled exactly by soft-thresholding, so iterates carry
exact zeros.
"""
from __future__ import annotations

import time

import numpy as np

from . import kernels
from .model import (DimensionError, RegressionProblem, SolveResult, SolverConfig,
                    eval_objective)
from .penalty import PenaltyLinearMap, empty_map


class DivergenceError(RuntimeError):
    """Objective became non-finite or blew past 10x its starting value."""


def mu_from_epsilon(epsilon: float, D: float) -> float:
    """Smoothing level ``epsilon / (2 D)`` that targets accuracy ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not D > 0:
        raise ValueError("D is zero: the penalty has no structure to smooth; "
                         "pass an explicit mu instead")
    return epsilon / (2.0 * D)


def soft_threshold(v, t: float) -> np.ndarray:
    """``sign(v) * max(|v| - t, 0)`` elementwise, with exact (+0.0) zeros."""
    if t < 0:
        raise ValueError("threshold must be nonnegative")
    return kernels.soft_threshold(np.asarray(v, dtype=np.float64), float(t))


def _power_top_eig(matvec, n, tol, max_iter=100000):
    v = np.random.default_rng(0).standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) < tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def loss_lipschitz(problem, tol: float = 1e-8) -> float:
    """Largest eigenvalue of ``X^T X`` by power iteration."""
    if problem.gram is not None:
        G = problem.gram
        return _power_top_eig(lambda v: G @ v, G.shape[0], tol)
    X = problem.X
    return _power_top_eig(lambda v: X.T @ (X @ v), X.shape[1], tol)


class SmoothPart:
    """Squared loss plus smoothed penalty, for 1-d ``beta`` or J x K ``B``.

    The penalty acts on the last axis; for matrices every row of ``B`` is one
    penalty argument.
    """

    def __init__(self, problem, cmap: PenaltyLinearMap, mu: float, use_gram: bool):
        self.X = problem.X
        self.target = problem.target
        self.use_gram = use_gram
        if use_gram:
            self.gram = problem.gram if problem.gram is not None else self.X.T @ self.X
            self.xty = problem.xty if problem.xty is not None else self.X.T @ self.target
            self.half_tt = 0.5 * float(np.sum(self.target * self.target))
        self.mu = mu
        self.dim = cmap.dim
        self._args = (np.ascontiguousarray(cmap.row_idx), np.ascontiguousarray(cmap.col_idx),
                      np.ascontiguousarray(cmap.values), cmap.rows, cmap.dim,
                      np.ascontiguousarray(cmap.block_ptr))

    def loss(self, beta):
        if self.use_gram:
            return float(0.5 * np.sum(beta * (self.gram @ beta))
                         - np.sum(beta * self.xty) + self.half_tt)
        r = self.target - self.X @ beta
        return 0.5 * float(np.sum(r * r))

    def loss_grad(self, beta):
        if self.use_gram:
            return self.gram @ beta - self.xty
        return self.X.T @ (self.X @ beta - self.target)

    def penalty(self, beta, mu, want_grad):
        V = np.ascontiguousarray(beta).reshape(-1, self.dim)
        return kernels.penalty_eval(*self._args, V, mu, want_grad, False)

    def grad(self, w):
        g = self.penalty(w, self.mu, True)[2]
        return self.loss_grad(w) + g.reshape(w.shape)

    def values(self, beta, lam):
        """``(f, f_smoothed)`` at ``beta``."""
        exact, smoothed, _, _ = self.penalty(beta, self.mu, False)
        base = self.loss(beta) + lam * float(np.sum(np.abs(beta)))
        return base + exact, base + smoothed


def run_fista(smooth: SmoothPart, lam: float, L: float, beta0, config: SolverConfig,
              callback=None):
    """Iterate the accelerated proximal gradient scheme.

    ``theta_0 = 1``, ``w^0 = beta^0``; each step takes a gradient step on the
    smooth part from ``w``, soft-thresholds with ``lam / L`` and extrapolates
    with ``(1 - theta_t) / theta_t * theta_{t+1}``, ``theta_{t+1} = 2/(t+3)``.
    Stops on relative objective change below ``tol``, on reaching
    ``target_objective``, or after ``max_iter`` iterations. ``callback(t, beta, f)``
    is called after every iteration with the new iterate.

    Returns ``(beta, f, f_smoothed, iterations, converged, trace, seconds)``.
    """
    beta = np.array(beta0, dtype=np.float64)
    w = beta.copy()
    theta = 1.0
    step = 1.0 / L
    thresh = lam / L
    f_prev, ft = smooth.values(beta, lam)
    f0 = f_prev
    trace = [] if config.record_trace else None
    target = config.target_objective
    converged = False
    t = 0
    start = time.perf_counter()
    for t in range(config.max_iter):
        g = smooth.grad(w)
        beta_new = kernels.soft_threshold(w - step * g, thresh)
        theta_next = 2.0 / (t + 3.0)
        w = beta_new + ((1.0 - theta) / theta) * theta_next * (beta_new - beta)
        f, ft = smooth.values(beta_new, lam)
        if not np.isfinite(f) or f > 10.0 * f0:
            raise DivergenceError(
                f"objective diverged at iteration {t + 1} (f={f:.6g}, f0={f0:.6g})")
        if trace is not None:
            trace.append((f, ft))
        if callback is not None:
            callback(t + 1, beta_new, f)
        beta, theta = beta_new, theta_next
        if target is not None and f <= target:
            converged = True
        elif f == f_prev or abs(f - f_prev) < config.tol * abs(f_prev):
            converged = True
        f_prev = f
        if converged:
            break
    seconds = time.perf_counter() - start
    return beta, f_prev, ft, t + 1, converged, trace, seconds


def _prepare_map(cmap, dim, config):
    if cmap is None:
        cmap = empty_map(dim)
    if config.gamma is not None:
        cmap = cmap.with_gamma(config.gamma)
    if cmap.dim != dim:
        raise DimensionError(f"penalty acts on {cmap.dim} coordinates, expected {dim}")
    return cmap


def _lipschitz(problem, norm, mu, scale):
    L = (loss_lipschitz(problem) + norm * norm / mu) * scale
    return L if L > 0 else 1.0


def spg_solve(problem: RegressionProblem, cmap: PenaltyLinearMap | None,
              config: SolverConfig = SolverConfig(), beta0=None,
              callback=None) -> SolveResult:
    """Minimize ``0.5||y - X beta||^2 + Omega(beta) + lam ||beta||_1``.

    Parameters
    ----------
    problem : RegressionProblem
    cmap : PenaltyLinearMap or None
        Structured penalty; None solves the plain lasso.
    config : SolverConfig
    beta0 : array, optional
        Warm start; defaults to zeros.
    callback : callable, optional
        ``callback(t, beta, f)`` after each iteration.

    Returns
    -------
    SolveResult
        ``objective`` is the unsmoothed objective at the final iterate.
    """
    J = problem.n_features
    cmap = _prepare_map(cmap, J, config)
    mu = config.resolve_mu(cmap.D)
    beta0 = np.zeros(J) if beta0 is None else np.asarray(beta0, dtype=np.float64)
    if beta0.shape != (J,):
        raise DimensionError(f"beta0 has shape {beta0.shape}, expected ({J},)")

    t0 = time.perf_counter()
    smooth = SmoothPart(problem, cmap, mu, config.precompute_gram)
    L = _lipschitz(problem, cmap.norm.value, mu, config.lipschitz_scale)
    setup = time.perf_counter() - t0

    beta, _, ft, iters, conv, trace, secs = run_fista(smooth, config.lam, L, beta0, config, callback)
    f = eval_objective(problem, cmap, beta, config.lam)
    return SolveResult(beta, f, ft, iters, conv, secs, trace, mu, L, "spg",
                       {"setup_seconds": setup, "norm_kind": cmap.norm.kind})


def solve_path(problem: RegressionProblem, cmap, configs, beta0=None) -> list:
    """Solve a sequence of configurations, warm-starting each from the last."""
    results = []
    beta = beta0
    for cfg in configs:
        res = spg_solve(problem, cmap, cfg, beta)
        results.append(res)
        beta = res.beta
    return results
