"""Multi-task extension: structure over tasks, coefficients as a J x K matrix.

The task-level map ``C`` (rows x K) acts on every row of ``B``, so the dual
variable is one dual vector per input j and the smoothed gradient is
``(A*)^T C`` assembled row by row.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DimensionError, MultiTaskProblem, SolveResult, SolverConfig, eval_objective_mt
from .penalty import PenaltyLinearMap, empty_map, exact_penalty, _eval
from .solver import SmoothPart, _lipschitz, run_fista


@dataclass(frozen=True)
class MultiTaskMapInfo:
    base: PenaltyLinearMap
    n_inputs: int

    @property
    def D_mt(self) -> float:
        # the dual domain is an n_inputs-fold product of the base domain
        return self.n_inputs * self.base.D

    def with_gamma(self, gamma):
        return MultiTaskMapInfo(self.base.with_gamma(gamma), self.n_inputs)


@dataclass(frozen=True)
class MultiTaskPenaltyEval:
    value: float
    gradient: np.ndarray
    alpha: Optional[np.ndarray] = None


def _check_B(info, B):
    B = np.asarray(B, dtype=np.float64)
    if B.shape != (info.n_inputs, info.base.dim):
        raise DimensionError(
            f"B has shape {B.shape}, expected {(info.n_inputs, info.base.dim)}")
    return B


def exact_penalty_mt(info: MultiTaskMapInfo, B) -> float:
    return exact_penalty(info.base, _check_B(info, B))


def smoothed_eval_mt(info: MultiTaskMapInfo, B, mu: float,
                     keep_alpha: bool = False) -> MultiTaskPenaltyEval:
    """Smoothed multi-task penalty, its J x K gradient and optionally ``A*``.

    ``alpha`` is returned as rows x J: column j is the projected dual vector
    for row j of ``B``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    B = _check_B(info, B)
    _, smoothed, grad, alpha = _eval(info.base, B, mu, True, keep_alpha)
    return MultiTaskPenaltyEval(smoothed, grad, None if alpha is None else alpha.T)


def expand_to_single_task(info: MultiTaskMapInfo) -> PenaltyLinearMap:
    """Equivalent map over ``vec(B)`` (row-major, length J*K).

    Row block j applies the base map to coefficients ``j*K .. j*K+K-1``; the
    dual ball repeats accordingly. With K == 1 this turns a multi-task problem
    into an ordinary single-task one on the single column.
    """
    from dataclasses import replace
    from .penalty import Blocks, Box

    base = info.base
    J, K = info.n_inputs, base.dim
    r = np.concatenate([base.row_idx + j * base.rows for j in range(J)])
    c = np.concatenate([base.col_idx + j * K for j in range(J)])
    v = np.tile(base.unit_values, J)
    ball = Blocks(base.ball.sizes * J) if isinstance(base.ball, Blocks) else Box()
    return replace(base, rows=base.rows * J, dim=J * K, row_idx=r.astype(np.int64),
                   col_idx=c.astype(np.int64), unit_values=v, ball=ball)


def spg_solve_mt(problem: MultiTaskProblem, info: MultiTaskMapInfo | PenaltyLinearMap | None,
                 config: SolverConfig = SolverConfig(), B0=None,
                 callback=None) -> SolveResult:
    """Multi-task solve of ``0.5||Y - XB||_F^2 + Omega(B) + lam ||B||_1``.

    ``info`` may also be a bare task-level map or None (independent lasso per
    task). Smoothing from ``epsilon`` uses the multi-task ``D``.
    """
    J, K = problem.n_features, problem.n_tasks
    if info is None:
        info = MultiTaskMapInfo(empty_map(K), J)
    elif isinstance(info, PenaltyLinearMap):
        info = MultiTaskMapInfo(info, J)
    if config.gamma is not None:
        info = info.with_gamma(config.gamma)
    if info.base.dim != K or info.n_inputs != J:
        raise DimensionError(
            f"map is for {info.n_inputs} x {info.base.dim}, problem is {J} x {K}")
    mu = config.resolve_mu(info.D_mt)
    B0 = np.zeros((J, K)) if B0 is None else np.asarray(B0, dtype=np.float64)
    if B0.shape != (J, K):
        raise DimensionError(f"B0 has shape {B0.shape}, expected {(J, K)}")

    t0 = time.perf_counter()
    smooth = SmoothPart(problem, info.base, mu, config.precompute_gram)
    L = _lipschitz(problem, info.base.norm.value, mu, config.lipschitz_scale)
    setup = time.perf_counter() - t0

    B, _, ft, iters, conv, trace, secs = run_fista(smooth, config.lam, L, B0, config, callback)
    f = eval_objective_mt(problem, info.base, B, config.lam)
    return SolveResult(B, f, ft, iters, conv, secs, trace, mu, L, "spg",
                       {"setup_seconds": setup, "norm_kind": info.base.norm.kind})
