"""Problem, structure, configuration and result types plus objective evaluation.

Indices inside these types are 0-based. File formats (see :mod:`sprox.io`)
are 1-based and converted on load/save.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DimensionError(ValueError):
    """Array shapes disagree."""


class NonFiniteError(ValueError):
    """An input array holds NaN or inf."""


def _check_finite(name, arr):
    bad = np.argwhere(~np.isfinite(arr))
    if bad.size:
        loc = tuple(int(i) for i in bad[0])
        raise NonFiniteError(f"{name} has a non-finite entry at index {loc}")


def _freeze(arr):
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegressionProblem:
    """Single-task least squares data ``y ~ X beta``.

    ``gram`` and ``xty`` are populated only when the problem was built with
    ``precompute=True``; the solver then never touches ``X`` inside the loop.
    """

    X: np.ndarray
    y: np.ndarray
    gram: Optional[np.ndarray] = None
    xty: Optional[np.ndarray] = None

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def target(self) -> np.ndarray:
        return self.y


@dataclass(frozen=True)
class MultiTaskProblem:
    """K regression tasks sharing one design matrix: ``Y ~ X B``."""

    X: np.ndarray
    Y: np.ndarray
    gram: Optional[np.ndarray] = None
    xty: Optional[np.ndarray] = None

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_tasks(self) -> int:
        return self.Y.shape[1]

    @property
    def target(self) -> np.ndarray:
        return self.Y


def _validate_xy(X, Y, precompute):
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DimensionError(f"X must be a non-empty 2-d array, got shape {X.shape}")
    if Y.shape[0] != X.shape[0]:
        raise DimensionError(
            f"X has {X.shape[0]} rows but the response has {Y.shape[0]}")
    _check_finite("X", X)
    _check_finite("response", Y)
    gram = xty = None
    if precompute:
        gram = _freeze(X.T @ X)
        xty = _freeze(X.T @ Y)
    return _freeze(X), _freeze(Y), gram, xty


def validate_problem(X, y, precompute: bool = False) -> RegressionProblem:
    """Check shapes and finiteness and build a :class:`RegressionProblem`.

    With ``precompute=True`` the Gram matrix ``X^T X`` and ``X^T y`` are
    stored so that each solver iteration costs O(J^2) regardless of N.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 2 and y.shape[1] == 1:
        y = y[:, 0]
    if y.ndim != 1:
        raise DimensionError(f"y must be a vector, got shape {y.shape}")
    X, y, gram, xty = _validate_xy(X, y, precompute)
    return RegressionProblem(X, y, gram, xty)


def validate_multitask(X, Y, precompute: bool = False) -> MultiTaskProblem:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise DimensionError(f"Y must be an N x K matrix, got shape {Y.shape}")
    X, Y, gram, xty = _validate_xy(X, Y, precompute)
    return MultiTaskProblem(X, Y, gram, xty)


@dataclass(frozen=True)
class Group:
    members: tuple
    weight: float = 1.0


@dataclass(frozen=True)
class GroupStructure:
    """Possibly overlapping groups over ``dim`` coordinates.

    Members are stored ascending and 0-based.
    """

    dim: int
    groups: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        clean = []
        for k, g in enumerate(self.groups):
            if not isinstance(g, Group):
                members, weight = g
                g = Group(tuple(members), float(weight))
            members = tuple(sorted(int(i) for i in g.members))
            if not members:
                raise ValueError(f"group {k} is empty")
            if len(set(members)) != len(members):
                raise ValueError(f"group {k} repeats a member")
            if members[0] < 0 or members[-1] >= self.dim:
                raise IndexError(f"group {k} has a member outside [0, {self.dim})")
            if not (g.weight > 0 and np.isfinite(g.weight)):
                raise ValueError(f"group {k} weight must be positive, got {g.weight}")
            clean.append(Group(members, float(g.weight)))
        object.__setattr__(self, "groups", tuple(clean))

    @classmethod
    def from_lists(cls, dim: int, groups: Sequence, weights=None) -> "GroupStructure":
        if weights is None:
            weights = [1.0] * len(groups)
        return cls(dim, tuple(Group(tuple(g), w) for g, w in zip(groups, weights)))

    def __len__(self):
        return len(self.groups)


@dataclass(frozen=True)
class Edge:
    m: int
    l: int
    r: float


@dataclass(frozen=True)
class FusionGraph:
    """Weighted signed graph over ``dim`` nodes, edges stored with ``m < l``."""

    dim: int
    edges: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        clean = []
        seen = set()
        for k, e in enumerate(self.edges):
            if not isinstance(e, Edge):
                e = Edge(*e)
            m, l, r = int(e.m), int(e.l), float(e.r)
            if m == l:
                raise ValueError(f"edge {k} is a self-loop on node {m}")
            if m > l:
                raise ValueError(f"edge {k} must satisfy m < l, got ({m}, {l})")
            if m < 0 or l >= self.dim:
                raise IndexError(f"edge {k} has a node outside [0, {self.dim})")
            if r == 0 or not np.isfinite(r):
                raise ValueError(f"edge {k} weight must be finite and nonzero")
            if (m, l) in seen:
                raise ValueError(f"edge {k} duplicates ({m}, {l})")
            seen.add((m, l))
            clean.append(Edge(m, l, r))
        object.__setattr__(self, "edges", tuple(clean))

    def __len__(self):
        return len(self.edges)


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the smoothing proximal gradient solver.

    Exactly one of ``mu`` and ``epsilon`` may be given; with neither, ``mu``
    defaults to 1e-4. When ``gamma`` is set the penalty map is rescaled to it,
    otherwise the map is used as built.

    ``target_objective`` adds a second stopping rule (stop once the objective
    is at or below it). ``lipschitz_scale`` multiplies the step-size constant
    and exists for fault-injection checks only.
    """

    lam: float = 0.0
    gamma: Optional[float] = None
    mu: Optional[float] = None
    epsilon: Optional[float] = None
    tol: float = 1e-6
    max_iter: int = 20000
    precompute_gram: bool = False
    record_trace: bool = False
    target_objective: Optional[float] = None
    lipschitz_scale: float = 1.0

    def __post_init__(self):
        if self.mu is not None and self.epsilon is not None:
            raise ValueError("give either mu or epsilon, not both")
        if self.mu is not None and not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.gamma is not None and self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def resolve_mu(self, D: float) -> float:
        if self.epsilon is not None:
            from .solver import mu_from_epsilon
            return mu_from_epsilon(self.epsilon, D)
        return 1e-4 if self.mu is None else self.mu

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "gamma": self.gamma,
            "mu": self.mu,
            "epsilon": self.epsilon,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "precompute_gram": self.precompute_gram,
            "record_trace": self.record_trace,
            "target_objective": self.target_objective,
        }


@dataclass
class SolveResult:
    """Outcome of one solve.

    ``objective`` is always the original (unsmoothed) objective. ``trace``
    holds one ``(f, f_smoothed)`` pair per iteration when recorded; baseline
    solvers record ``f_smoothed == f``.
    """

    beta: np.ndarray
    objective: float
    smoothed_objective: float
    iterations: int
    converged: bool
    wall_seconds: float
    trace: Optional[list] = None
    mu: Optional[float] = None
    lipschitz: Optional[float] = None
    method: str = "spg"
    extra: dict = field(default_factory=dict)


# -- objectives --------------------------------------------------------------

def squared_loss(problem, beta) -> float:
    r = problem.target - problem.X @ beta
    return 0.5 * float(np.sum(r * r))


def eval_objective(problem: RegressionProblem, cmap, beta, lam: float) -> float:
    """``0.5 ||y - X beta||^2 + Omega(beta) + lam ||beta||_1``.

    ``cmap`` may be ``None`` for the plain lasso objective.
    """
    from .penalty import exact_penalty

    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (problem.n_features,):
        raise DimensionError(
            f"beta has shape {beta.shape}, expected ({problem.n_features},)")
    pen = 0.0
    if cmap is not None:
        if cmap.dim != problem.n_features:
            raise DimensionError(
                f"penalty acts on {cmap.dim} coordinates, problem has {problem.n_features}")
        pen = exact_penalty(cmap, beta)
    return squared_loss(problem, beta) + pen + lam * float(np.sum(np.abs(beta)))


def eval_objective_mt(problem: MultiTaskProblem, cmap, B, lam: float) -> float:
    """Multi-task objective; ``cmap`` acts on the task axis (``dim == K``)."""
    from .penalty import exact_penalty

    B = np.asarray(B, dtype=np.float64)
    if B.shape != (problem.n_features, problem.n_tasks):
        raise DimensionError(
            f"B has shape {B.shape}, expected {(problem.n_features, problem.n_tasks)}")
    pen = 0.0
    if cmap is not None:
        if cmap.dim != problem.n_tasks:
            raise DimensionError(
                f"penalty acts on {cmap.dim} tasks, problem has {problem.n_tasks}")
        pen = exact_penalty(cmap, B)
    return squared_loss(problem, B) + pen + lam * float(np.sum(np.abs(B)))
