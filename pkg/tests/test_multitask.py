import numpy as np
import pytest

from sprox.model import FusionGraph, GroupStructure, SolverConfig, validate_multitask, validate_problem
from sprox.multitask import (MultiTaskMapInfo, exact_penalty_mt, expand_to_single_task,
                             smoothed_eval_mt, spg_solve_mt)
from sprox.oracle import fd_gradient, reference_solve
from sprox.penalty import build_fusion_map, build_group_map, smoothed_eval
from sprox.solver import spg_solve


def fusion_info(J=4):
    graph = FusionGraph(5, ((0, 1, 0.9), (1, 2, 0.6), (3, 4, -0.7), (0, 4, 0.2)))
    return MultiTaskMapInfo(build_fusion_map(graph, 1.2), J)


def test_zero_B():
    info = fusion_info()
    ev = smoothed_eval_mt(info, np.zeros((4, 5)), 1e-3)
    assert ev.value == 0.0 and not ev.gradient.any()


def test_single_task_reduction(rng):
    base = build_group_map(GroupStructure.from_lists(1, [[0]], [2.0]), 0.5)
    info = MultiTaskMapInfo(base, 6)
    B = rng.standard_normal((6, 1))
    single = expand_to_single_task(info)
    for mu in (1e-3, 0.5):
        a = smoothed_eval_mt(info, B, mu)
        b = smoothed_eval(single, B[:, 0], mu)
        assert abs(a.value - b.value) <= 1e-12 * max(1.0, abs(b.value))
        np.testing.assert_allclose(a.gradient[:, 0], b.gradient, rtol=1e-12, atol=1e-15)


def test_expanded_map_matches_rowwise(rng):
    info = fusion_info(3)
    flat = expand_to_single_task(info)
    B = rng.standard_normal((3, 5))
    assert flat.rows == 3 * info.base.rows and flat.dim == 15
    assert exact_penalty_mt(info, B) == pytest.approx(
        sum(float(np.abs(info.base.to_dense() @ row).sum()) for row in B))
    assert flat.D == pytest.approx(info.D_mt)


def test_gradient_fd(rng):
    info = fusion_info()
    B = rng.standard_normal((4, 5))
    for mu in (1.0, 1e-2):
        g = smoothed_eval_mt(info, B, mu).gradient
        fd = fd_gradient(lambda b: smoothed_eval_mt(info, b, mu).value, B, 1e-5)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(g)


def test_sandwich_and_dmt(rng):
    info = fusion_info()
    assert info.D_mt == 4 * info.base.D
    for _ in range(50):
        B = rng.standard_normal((4, 5)) * 10 ** rng.uniform(-3, 1)
        mu = 10 ** rng.uniform(-4, 0)
        gap = exact_penalty_mt(info, B) - smoothed_eval_mt(info, B, mu).value
        assert -1e-12 <= gap <= mu * info.D_mt + 1e-12


def test_rows_decouple(rng):
    info = fusion_info()
    B = rng.standard_normal((4, 5))
    g0 = smoothed_eval_mt(info, B, 1e-2).gradient
    B2 = B.copy()
    B2[2] += rng.standard_normal(5)
    g1 = smoothed_eval_mt(info, B2, 1e-2).gradient
    np.testing.assert_array_equal(np.delete(g0, 2, 0), np.delete(g1, 2, 0))


def test_gradient_lipschitz(rng):
    info = fusion_info()
    mu = 1e-2
    L = info.base.norm.value ** 2 / mu
    for _ in range(30):
        A, B = rng.standard_normal((2, 4, 5))
        d = np.linalg.norm(smoothed_eval_mt(info, A, mu).gradient - smoothed_eval_mt(info, B, mu).gradient)
        assert d <= L * np.linalg.norm(A - B) + 1e-12


def test_alpha_layout(rng):
    info = fusion_info()
    B = rng.standard_normal((4, 5))
    ev = smoothed_eval_mt(info, B, 0.1, keep_alpha=True)
    assert ev.alpha.shape == (info.base.rows, 4)
    C = info.base.to_dense()
    np.testing.assert_allclose(ev.alpha[:, 1], np.clip(C @ B[1] / 0.1, -1, 1))


def test_shape_errors():
    info = fusion_info()
    with pytest.raises(ValueError):
        smoothed_eval_mt(info, np.zeros((5, 4)), 0.1)
    X, Y = np.ones((6, 3)), np.ones((6, 5))
    with pytest.raises(ValueError):
        spg_solve_mt(validate_multitask(X, Y), info, SolverConfig())


def test_large_lambda_gives_zero(rng):
    X, Y = rng.standard_normal((20, 4)), rng.standard_normal((20, 5))
    p = validate_multitask(X, Y)
    lam = np.abs(X.T @ Y).max() * 1.01
    res = spg_solve_mt(p, fusion_info(), SolverConfig(lam=lam, gamma=0.0))
    assert not res.beta.any()
    for k in range(5):
        ref, _ = reference_solve(validate_problem(X, Y[:, k]), None, lam)
        assert np.abs(ref).max() < 1e-6


def test_k1_iterates_match_single(rng):
    X = rng.standard_normal((30, 8))
    y = X @ rng.standard_normal(8) + rng.standard_normal(30)
    base = build_group_map(GroupStructure.from_lists(1, [[0]]), 0.9)
    info = MultiTaskMapInfo(base, 8)
    cfg = SolverConfig(lam=0.5, mu=1e-3, record_trace=True)
    a = spg_solve_mt(validate_multitask(X, y[:, None]), info, cfg)
    b = spg_solve(validate_problem(X, y), expand_to_single_task(info), cfg)
    assert a.iterations == b.iterations
    np.testing.assert_allclose(np.array(a.trace), np.array(b.trace), rtol=1e-12)
    np.testing.assert_allclose(a.beta[:, 0], b.beta, rtol=0, atol=1e-12)


def test_mt_near_reference(rng):
    X = rng.standard_normal((25, 6))
    B = np.zeros((6, 5))
    B[:2] = 1.0
    Y = X @ B + 0.5 * rng.standard_normal((25, 5))
    p = validate_multitask(X, Y)
    info = fusion_info(6)
    res = spg_solve_mt(p, info, SolverConfig(lam=1.0, tol=1e-9))
    _, ref = reference_solve(p, info, 1.0)
    assert res.objective <= 1.001 * ref
