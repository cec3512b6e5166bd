"""Synthetic benchmark data.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64), so a
``GenSpec`` fully determines its output within one numpy version.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .model import FusionGraph, GroupStructure, validate_multitask, validate_problem


@dataclass(frozen=True)
class GenSpec:
    """Parameters for one synthetic dataset.

    ``kind`` is ``"overlap-chain"`` (uses n, num_groups, group_size, overlap)
    or ``"multitask-blocks"`` (uses n, n_inputs, blocks, per_block,
    cross_block, effect_b).
    """

    kind: str
    seed: int
    n: int = 1000
    noise_sd: float = 1.0
    num_groups: int = 10
    group_size: int = 100
    overlap: int = 10
    n_inputs: int = 30
    blocks: tuple = (3, 3, 4)
    per_block: int = 3
    cross_block: int = 2
    effect_b: float = 0.8

    def __post_init__(self):
        if self.kind not in ("overlap-chain", "multitask-blocks"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n < 1:
            raise ValueError("n must be positive")
        if not self.noise_sd >= 0:
            raise ValueError("noise_sd must be nonnegative")
        if self.kind == "overlap-chain":
            if self.num_groups < 1 or self.group_size < 1:
                raise ValueError("num_groups and group_size must be positive")
            if not 0 <= self.overlap < self.group_size:
                raise ValueError("overlap must satisfy 0 <= overlap < group_size")
        else:
            object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
            if not self.blocks or min(self.blocks) < 1:
                raise ValueError("blocks must be positive sizes")
            need = len(self.blocks) * self.per_block + self.cross_block
            if need > self.n_inputs:
                raise ValueError(f"{need} relevant inputs requested but only "
                                 f"{self.n_inputs} inputs")
            if self.cross_block and len(self.blocks) < 2:
                raise ValueError("cross-block inputs need at least two blocks")

    @property
    def n_features(self) -> int:
        if self.kind == "overlap-chain":
            return (self.group_size - self.overlap) * self.num_groups + self.overlap
        return self.n_inputs

    @property
    def n_tasks(self) -> int:
        return sum(self.blocks) if self.kind == "multitask-blocks" else 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["blocks"] = list(self.blocks)
        return d


def chain_groups(num_groups: int, group_size: int, overlap: int) -> GroupStructure:
    """Consecutive windows of ``group_size`` sharing ``overlap`` with the next."""
    stride = group_size - overlap
    J = stride * num_groups + overlap
    groups = [range(k * stride, k * stride + group_size) for k in range(num_groups)]
    return GroupStructure.from_lists(J, groups)


def chain_beta(J: int) -> np.ndarray:
    """``beta_j = (-1)^j exp(-(j-1)/100)`` for 1-based j."""
    j = np.arange(1, J + 1)
    return np.where(j % 2 == 0, 1.0, -1.0) * np.exp(-(j - 1) / 100.0)


def gen_overlap_chain(spec: GenSpec):
    """Gaussian design, chain of overlapping groups, alternating decaying signal.

    Returns ``(problem, groups, true_beta)``.
    """
    if spec.kind != "overlap-chain":
        raise ValueError("spec.kind must be 'overlap-chain'")
    rng = np.random.default_rng(spec.seed)
    groups = chain_groups(spec.num_groups, spec.group_size, spec.overlap)
    J = groups.dim
    beta = chain_beta(J)
    X = rng.standard_normal((spec.n, J))
    y = X @ beta + spec.noise_sd * rng.standard_normal(spec.n)
    return validate_problem(X, y), groups, beta


def _block_pattern(spec, rng):
    K = spec.n_tasks
    J = spec.n_inputs
    bounds = np.concatenate(([0], np.cumsum(spec.blocks)))
    B = np.zeros((J, K))
    picks = rng.permutation(J)
    pos = 0
    for b in range(len(spec.blocks)):
        for j in picks[pos:pos + spec.per_block]:
            B[j, bounds[b]:bounds[b + 1]] = spec.effect_b
        pos += spec.per_block
    for j in picks[pos:pos + spec.cross_block]:
        pair = rng.choice(len(spec.blocks), size=2, replace=False)
        for b in pair:
            B[j, bounds[b]:bounds[b + 1]] = spec.effect_b
    return B


def _snp_rows(rng, n, maf):
    return rng.binomial(2, maf, size=(n, maf.size)).astype(np.float64)


def gen_multitask_blocks_with_holdout(spec: GenSpec, n_holdout: int):
    """As :func:`gen_multitask_blocks` plus ``n_holdout`` extra samples drawn
    from the same coefficients and allele frequencies.

    The training part is identical to :func:`gen_multitask_blocks` for the
    same spec. Returns ``(train, holdout, true_B)``; ``holdout`` is None when
    ``n_holdout == 0``.
    """
    if spec.kind != "multitask-blocks":
        raise ValueError("spec.kind must be 'multitask-blocks'")
    rng = np.random.default_rng(spec.seed)
    maf = rng.uniform(0.05, 0.5, size=spec.n_inputs)
    B = _block_pattern(spec, rng)
    K = spec.n_tasks
    X = _snp_rows(rng, spec.n, maf)
    Y = X @ B + spec.noise_sd * rng.standard_normal((spec.n, K))
    train = validate_multitask(X, Y)
    holdout = None
    if n_holdout:
        Xh = _snp_rows(rng, n_holdout, maf)
        Yh = Xh @ B + spec.noise_sd * rng.standard_normal((n_holdout, K))
        holdout = validate_multitask(Xh, Yh)
    return train, holdout, B


def gen_multitask_blocks(spec: GenSpec):
    """SNP-like design (0/1/2 genotypes) with block-correlated tasks.

    Each block of tasks gets ``per_block`` inputs with coefficient
    ``effect_b`` on every task in the block; ``cross_block`` further inputs
    carry ``effect_b`` on all tasks of two randomly chosen blocks.
    Returns ``(problem, true_B)``.
    """
    train, _, B = gen_multitask_blocks_with_holdout(spec, 0)
    return train, B


def build_correlation_graph(Y, rho: Optional[float] = None,
                            target_edges: Optional[int] = None) -> FusionGraph:
    """Graph over the columns of ``Y`` weighted by Pearson correlation.

    With ``rho`` an edge joins every pair with ``|r| > rho``. With
    ``target_edges`` the ``target_edges`` pairs of largest ``|r|`` are kept
    (ties resolved by pair order), which is the same as thresholding at a
    level that admits exactly that many edges.
    """
    if (rho is None) == (target_edges is None):
        raise ValueError("give exactly one of rho and target_edges")
    Y = np.asarray(Y, dtype=np.float64)
    K = Y.shape[1]
    if K < 2:
        raise ValueError("need at least two columns")
    sd = Y.std(axis=0)
    for k in range(K):
        if sd[k] == 0:
            raise ValueError(f"column {k + 1} is constant; correlation undefined")
    R = np.corrcoef(Y, rowvar=False)
    pairs = list(combinations(range(K), 2))
    if rho is not None:
        edges = [(m, l, R[m, l]) for m, l in pairs if abs(R[m, l]) > rho and R[m, l] != 0]
    else:
        if target_edges < 0 or target_edges > len(pairs):
            raise ValueError(f"target_edges must be in [0, {len(pairs)}] for {K} columns")
        order = sorted(range(len(pairs)), key=lambda i: -abs(R[pairs[i]]))
        keep = sorted(order[:target_edges])
        edges = [(pairs[i][0], pairs[i][1], R[pairs[i]]) for i in keep]
        if any(e[2] == 0 for e in edges):
            raise ValueError("target_edges reaches an exactly uncorrelated pair")
    return FusionGraph(K, tuple(edges))
