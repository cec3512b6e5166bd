"""Linear-map form of structured penalties and their Nesterov smoothing.

Both penalty families are written as ``Omega(beta) = max_{alpha in Q} alpha^T C beta``
with ``C`` sparse and ``Q`` either a product of unit l2 balls (overlapping
groups) or the unit l-inf box (graph fusion, or any ``||C beta||_1``).
Smoothing subtracts ``mu/2 ||alpha||^2`` inside the max, which gives a
gradient ``C^T alpha*`` with Lipschitz constant ``||C||^2 / mu``.

Vectors handed to the evaluation routines may be 1-d (one coefficient vector
of length ``dim``) or 2-d, in which case every row is an independent vector
and the results are summed. The multi-task penalty uses the 2-d form.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import kernels
from .model import DimensionError, FusionGraph, GroupStructure


class StructureMismatch(ValueError):
    """A norm mode was requested for a map family that does not support it."""


@dataclass(frozen=True)
class Box:
    """Unit l-inf ball over all dual coordinates."""


@dataclass(frozen=True)
class Blocks:
    """Product of unit l2 balls; ``sizes`` are consecutive block lengths."""

    sizes: tuple


@dataclass(frozen=True)
class NormInfo:
    value: float
    kind: str  # "exact", "bound" or "power"


@dataclass(frozen=True)
class PenaltyLinearMap:
    """Sparse ``C`` (as triplets sorted by row) with its dual ball.

    Entries are stored for ``gamma == 1`` and scaled on access, so the same
    structure can be reused across a regularization path via
    :meth:`with_gamma`.
    """

    rows: int
    dim: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    unit_values: np.ndarray
    ball: object
    gamma: float
    family: str  # "group", "fusion" or "linear"
    unit_norm: Optional[NormInfo] = None

    @property
    def values(self) -> np.ndarray:
        return self.gamma * self.unit_values

    @property
    def D(self) -> float:
        if isinstance(self.ball, Blocks):
            return len(self.ball.sizes) / 2.0
        return self.rows / 2.0

    @property
    def norm(self) -> NormInfo:
        return NormInfo(self.gamma * self.unit_norm.value, self.unit_norm.kind)

    @property
    def block_ptr(self) -> np.ndarray:
        if isinstance(self.ball, Blocks):
            return np.concatenate(([0], np.cumsum(self.ball.sizes))).astype(np.int64)
        return np.zeros(0, dtype=np.int64)

    def with_gamma(self, gamma: float) -> "PenaltyLinearMap":
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        return replace(self, gamma=float(gamma))

    def to_dense(self) -> np.ndarray:
        C = np.zeros((self.rows, self.dim))
        np.add.at(C, (self.row_idx, self.col_idx), self.values)
        return C

    def to_sparse(self):
        return sp.csr_matrix((self.values, (self.row_idx, self.col_idx)),
                             shape=(self.rows, self.dim))

    def nnz_per_row(self) -> np.ndarray:
        return np.bincount(self.row_idx, minlength=self.rows)

    def __post_init__(self):
        for name in ("row_idx", "col_idx", "unit_values"):
            getattr(self, name).setflags(write=False)


@dataclass(frozen=True)
class SmoothedPenaltyEval:
    value: float
    gradient: np.ndarray
    alpha: Optional[np.ndarray] = None


def _make_map(rows, dim, r, c, v, ball, gamma, family, norm=None):
    r = np.asarray(r, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    v = np.asarray(v, dtype=np.float64)
    order = np.argsort(r, kind="stable")
    cmap = PenaltyLinearMap(rows, dim, r[order], c[order], v[order], ball,
                            float(gamma), family, norm)
    if norm is None:
        unit = replace(cmap, gamma=1.0)
        cmap = replace(cmap, unit_norm=NormInfo(_power_norm(unit, 1e-10, 10000), "power"))
    return cmap


def build_group_map(groups: GroupStructure, gamma: float = 1.0) -> PenaltyLinearMap:
    """One row per (member, group) pair, groups in input order, members ascending."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    r, c, v, sizes = [], [], [], []
    k = 0
    for g in groups.groups:
        for i in g.members:
            r.append(k)
            c.append(i)
            v.append(g.weight)
            k += 1
        sizes.append(len(g.members))
    sq = np.zeros(groups.dim)
    for g in groups.groups:
        sq[list(g.members)] += g.weight ** 2
    norm = NormInfo(float(np.sqrt(sq.max())) if len(groups) else 0.0, "exact")
    return _make_map(k, groups.dim, r, c, v, Blocks(tuple(sizes)), gamma, "group", norm)


def build_fusion_map(graph: FusionGraph, gamma: float = 1.0) -> PenaltyLinearMap:
    """Weighted edge-vertex incidence map with ``tau(r) = |r|``.

    Row ``e = (m, l)`` holds ``|r|`` at column m and ``-sign(r) |r|`` at column l,
    so ``|row . beta| = |r| |beta_m - sign(r) beta_l|``.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    r, c, v = [], [], []
    deg = np.zeros(graph.dim)
    for k, e in enumerate(graph.edges):
        tau = abs(e.r)
        r += [k, k]
        c += [e.m, e.l]
        v += [tau, -np.sign(e.r) * tau]
        deg[e.m] += tau ** 2
        deg[e.l] += tau ** 2
    bound = float(np.sqrt(2.0 * deg.max())) if len(graph) else 0.0
    return _make_map(len(graph), graph.dim, r, c, v, Box(), gamma, "fusion",
                     NormInfo(bound, "bound"))


def build_linear_l1_map(C, gamma: float = 1.0) -> PenaltyLinearMap:
    """Map for ``gamma ||C beta||_1`` with an arbitrary matrix ``C``."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2:
        raise DimensionError("C must be 2-d")
    r, c = np.nonzero(C)
    return _make_map(C.shape[0], C.shape[1], r, c, C[r, c], Box(), gamma, "linear")


def empty_map(dim: int) -> PenaltyLinearMap:
    """Zero-row map: no structured penalty (plain lasso)."""
    z = np.zeros(0)
    return PenaltyLinearMap(0, dim, z.astype(np.int64), z.astype(np.int64), z,
                            Blocks(()), 0.0, "group", NormInfo(0.0, "exact"))


# -- evaluation ----------------------------------------------------------------

def _as_rows(cmap, beta):
    arr = np.ascontiguousarray(beta, dtype=np.float64)
    if arr.shape[-1] != cmap.dim or arr.ndim not in (1, 2):
        raise DimensionError(
            f"penalty acts on vectors of length {cmap.dim}, got shape {arr.shape}")
    return arr.reshape(-1, cmap.dim)


def _eval(cmap, beta, mu, want_grad=False, want_alpha=False):
    V = _as_rows(cmap, beta)
    return kernels.penalty_eval(cmap.row_idx, cmap.col_idx, cmap.values, cmap.rows,
                                cmap.dim, cmap.block_ptr, V, float(mu),
                                want_grad, want_alpha)


def exact_penalty(cmap: PenaltyLinearMap, beta) -> float:
    """``||C beta||_1`` for the box, sum of block l2 norms for l2 blocks."""
    return _eval(cmap, beta, 0.0)[0]


def penalty_values(cmap: PenaltyLinearMap, beta, mu: float):
    """``(exact, smoothed)`` in one pass."""
    exact, smoothed, _, _ = _eval(cmap, beta, mu)
    return exact, smoothed


def smoothed_eval(cmap: PenaltyLinearMap, beta, mu: float,
                  keep_alpha: bool = False) -> SmoothedPenaltyEval:
    """Smoothed penalty value, its gradient ``C^T alpha*`` and optionally ``alpha*``.

    ``alpha* = P_Q(C beta / mu)``; for group maps the block of ``C beta`` for
    group g is ``gamma w_g beta_g``, so this is the blockwise l2 projection.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    beta = np.asarray(beta, dtype=np.float64)
    _, smoothed, grad, alpha = _eval(cmap, beta, mu, True, keep_alpha)
    grad = grad.reshape(beta.shape)
    if alpha is not None and beta.ndim == 1:
        alpha = alpha[0]
    return SmoothedPenaltyEval(smoothed, grad, alpha)


def project_dual(u, ball) -> np.ndarray:
    """Euclidean projection onto the dual ball.

    Blocks with norm above 1 are rescaled to unit norm; the box clamps
    each entry to [-1, 1].
    """
    u = np.asarray(u, dtype=np.float64)
    if isinstance(ball, Box):
        return np.clip(u, -1.0, 1.0)
    if sum(ball.sizes) != u.shape[-1]:
        raise DimensionError("block sizes do not match the vector length")
    out = u.copy()
    lo = 0
    for size in ball.sizes:
        blk = out[..., lo:lo + size]
        nrm = np.sqrt(np.sum(blk * blk, axis=-1, keepdims=True))
        np.divide(blk, nrm, out=blk, where=nrm > 1.0)
        lo += size
    return out


# -- spectral norm -------------------------------------------------------------

def _power_norm(cmap, tol, max_iter):
    if cmap.rows == 0:
        return 0.0
    C = cmap.to_sparse()
    # all-ones start lies in the null space of every positive-weight incidence
    # map, so a fixed pseudo-random start is used instead
    v = np.random.default_rng(0).standard_normal(cmap.dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = C.T @ (C @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0)))


def spectral_norm(cmap: PenaltyLinearMap, mode: str = "power", tol: float = 1e-10,
                  max_iter: int = 10000) -> float:
    """``||C||`` by closed form (groups), degree bound (fusion) or power iteration.

    ``exact``: ``gamma * max_j sqrt(sum_{g containing j} w_g^2)``.
    ``bound``: ``gamma * sqrt(2 max_j d_j)`` with ``d_j`` the squared-weight
    degree of node j; never below the true norm.
    ``power``: power iteration on ``C^T C`` until the relative eigenvalue
    change is below ``tol``.
    """
    if mode == "exact":
        if cmap.family != "group":
            raise StructureMismatch("closed-form norm exists for group maps only")
        return cmap.norm.value
    if mode == "bound":
        if cmap.family != "fusion":
            raise StructureMismatch("degree bound applies to fusion maps only")
        return cmap.norm.value
    if mode == "power":
        return cmap.gamma * _power_norm(cmap.with_gamma(1.0), tol, max_iter)
    raise ValueError(f"unknown mode {mode!r}")
