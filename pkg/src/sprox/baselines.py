"""Comparison solvers: forward-backward splitting (FOBOS) and plain subgradient descent.

Both use the step ``c / sqrt(t)`` and report the best iterate seen, since
neither is a descent method.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .model import MultiTaskProblem, SolveResult
from .penalty import PenaltyLinearMap, _eval, empty_map
from .solver import DivergenceError, SmoothPart


@dataclass(frozen=True)
class BaselineConfig:
    """``step_c=None`` picks ``0.1/sqrt(N J)`` (single task) or ``0.1/sqrt(N J K)``."""

    lam: float = 0.0
    gamma: Optional[float] = None
    step_c: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 20000
    record_trace: bool = False
    target_objective: Optional[float] = None

    def __post_init__(self):
        if self.step_c is not None and not self.step_c > 0:
            raise ValueError("step_c must be positive")
        if self.lam < 0 or (self.gamma is not None and self.gamma < 0):
            raise ValueError("regularization must be nonnegative")


def default_step_c(problem) -> float:
    n, j = problem.X.shape
    k = problem.n_tasks if isinstance(problem, MultiTaskProblem) else 1
    return 0.1 / np.sqrt(n * j * k)


def penalty_subgradient(cmap: PenaltyLinearMap, beta) -> np.ndarray:
    """An element of the subdifferential of the exact penalty at ``beta``.

    l2 blocks contribute ``C^T (u / ||u||)`` (zero where the block vanishes);
    the box contributes ``C^T sign(C beta)``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    return _eval(cmap, beta, 0.0, want_grad=True)[2].reshape(beta.shape)


def _run(problem, cmap, config, use_prox, method):
    shape = ((problem.n_features, problem.n_tasks) if isinstance(problem, MultiTaskProblem)
             else (problem.n_features,))
    if cmap is None:
        cmap = empty_map(shape[-1])
    cmap = getattr(cmap, "base", cmap)
    if config.gamma is not None:
        cmap = cmap.with_gamma(config.gamma)
    part = SmoothPart(problem, cmap, 0.0, False)
    c = config.step_c if config.step_c is not None else default_step_c(problem)
    lam = config.lam

    beta = np.zeros(shape)
    f_prev = part.values(beta, lam)[0]
    f0 = f_prev
    best_f, best_beta = f_prev, beta.copy()
    trace = [] if config.record_trace else None
    converged = False
    t = 0
    start = time.perf_counter()
    for t in range(1, config.max_iter + 1):
        eta = c / np.sqrt(t)
        g = part.loss_grad(beta) + part.penalty(beta, 0.0, True)[2].reshape(shape)
        if use_prox:
            beta = kernels.soft_threshold(beta - eta * g, eta * lam)
        else:
            beta = beta - eta * (g + lam * np.sign(beta))
        f = part.values(beta, lam)[0]
        if not np.isfinite(f) or f > 10.0 * f0:
            raise DivergenceError(f"{method} diverged at iteration {t} (f={f:.6g})")
        if f < best_f:
            best_f, best_beta = f, beta.copy()
        if trace is not None:
            trace.append((best_f, best_f))
        if config.target_objective is not None and best_f <= config.target_objective:
            converged = True
        elif f == f_prev or abs(f - f_prev) < config.tol * abs(f_prev):
            converged = True
        f_prev = f
        if converged:
            break
    secs = time.perf_counter() - start
    return SolveResult(best_beta, best_f, best_f, t, converged, secs, trace, None,
                       None, method, {"step_c": c, "last_objective": f_prev})


def fobos_solve(problem, cmap: PenaltyLinearMap | None, config: BaselineConfig) -> SolveResult:
    """Forward-backward splitting with ``g + Omega`` as the loss and ``lam ||.||_1``
    handled by soft-thresholding with threshold ``eta_t * lam``."""
    return _run(problem, cmap, config, True, "fobos")


def subgradient_solve(problem, cmap: PenaltyLinearMap | None, config: BaselineConfig) -> SolveResult:
    """Subgradient descent on the full objective, ``sign(0) = 0`` for the l1 term."""
    return _run(problem, cmap, config, False, "subgrad")
