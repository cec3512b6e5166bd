import numpy as np
import pytest

from sprox.model import GroupStructure, SolverConfig, eval_objective, validate_problem
from sprox.oracle import jacobi_eigenvalues, orthogonal_lasso, prox_1d_grid, reference_solve
from sprox.penalty import build_group_map, empty_map
from sprox.solver import (DivergenceError, loss_lipschitz, mu_from_epsilon, soft_threshold,
                          solve_path, spg_solve)


def small_instance(seed, N=40, J=12):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((N, J))
    y = X @ np.where(rng.random(J) < 0.4, rng.standard_normal(J), 0.0) + 0.3 * rng.standard_normal(N)
    groups = GroupStructure.from_lists(J, [range(0, 5), range(4, 9), range(8, J)])
    return validate_problem(X, y), build_group_map(groups, 1.0)


def test_mu_from_epsilon():
    assert mu_from_epsilon(0.01, 5.0) == pytest.approx(1e-3)
    assert mu_from_epsilon(1.0, 0.5) == pytest.approx(1.0)
    for D in (0.5, 7.0, 455.0):
        assert mu_from_epsilon(2e-4 * D, D) == pytest.approx(1e-4)
    with pytest.raises(ValueError, match="explicit mu"):
        mu_from_epsilon(0.1, 0.0)


def test_soft_threshold_examples():
    np.testing.assert_array_equal(soft_threshold(np.array([2.0, -2.0, 0.3]), 0.5), [1.5, -1.5, 0.0])
    v = np.array([0.3, -7.0, 0.0])
    np.testing.assert_array_equal(soft_threshold(v, 0.0), v)
    with pytest.raises(ValueError):
        soft_threshold(v, -1.0)


def test_soft_threshold_against_grid(rng):
    for v, t in rng.uniform([-4, 0], [4, 2], size=(50, 2)):
        x = float(soft_threshold(np.array([v]), t)[0])
        assert abs(x - prox_1d_grid(v, t, 200_001)) <= 2 * (abs(v) + t) / 200_000


def test_loss_lipschitz():
    assert loss_lipschitz(validate_problem(np.eye(3), np.ones(3))) == pytest.approx(1.0)
    assert loss_lipschitz(validate_problem(np.array([[3.0]]), np.ones(1))) == pytest.approx(9.0)
    assert loss_lipschitz(validate_problem(np.zeros((2, 2)), np.ones(2))) == 0.0


def test_loss_lipschitz_against_jacobi(rng):
    X = rng.standard_normal((20, 8))
    ref = jacobi_eigenvalues(X.T @ X)[-1]
    assert loss_lipschitz(validate_problem(X, np.ones(20))) == pytest.approx(ref, rel=1e-6)


def test_null_lasso_solution(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((10, 10)))
    p = validate_problem(Q[:, :6], rng.standard_normal(10))
    lam = np.abs(p.X.T @ p.y).max() * 1.01
    res = spg_solve(p, None, SolverConfig(lam=lam))
    assert not res.beta.any()
    np.testing.assert_array_equal(res.beta, orthogonal_lasso(p, lam))


def test_orthogonal_lasso_closed_form(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    p = validate_problem(Q[:, :5], rng.standard_normal(12) * 2)
    res = spg_solve(p, empty_map(5), SolverConfig(lam=0.4, tol=1e-12))
    np.testing.assert_allclose(res.beta, orthogonal_lasso(p, 0.4), atol=1e-8)


def test_objective_near_reference():
    p, cmap = small_instance(3)
    res = spg_solve(p, cmap, SolverConfig(lam=0.5, tol=1e-9))
    _, ref = reference_solve(p, cmap, 0.5)
    assert res.objective <= 1.001 * ref
    assert res.objective == pytest.approx(eval_objective(p, cmap, res.beta, 0.5), rel=1e-12)


def test_trace_properties():
    p, cmap = small_instance(4)
    cfg = SolverConfig(lam=0.3, mu=1e-2, record_trace=True)
    res = spg_solve(p, cmap, cfg)
    assert len(res.trace) == res.iterations
    f, ft = np.array(res.trace).T
    gap = f - ft
    assert np.all(gap >= -1e-12) and np.all(gap <= res.mu * cmap.D + 1e-9)
    best = np.minimum.accumulate(ft)
    assert np.all(np.diff(best) <= 1e-9)


def test_exact_zeros():
    p, cmap = small_instance(5)
    res = spg_solve(p, cmap, SolverConfig(lam=8.0))
    zeros = res.beta[res.beta == 0]
    assert zeros.size > 0 and not np.any(np.signbit(zeros))


def test_determinism():
    p, cmap = small_instance(6)
    cfg = SolverConfig(lam=0.2, record_trace=True)
    a, b = spg_solve(p, cmap, cfg), spg_solve(p, cmap, cfg)
    assert a.trace == b.trace
    np.testing.assert_array_equal(a.beta, b.beta)


def test_gram_mode_agrees():
    p, cmap = small_instance(7)
    pg = validate_problem(p.X, p.y, precompute=True)
    a = spg_solve(p, cmap, SolverConfig(lam=0.2, tol=1e-10))
    b = spg_solve(pg, cmap, SolverConfig(lam=0.2, tol=1e-10, precompute_gram=True))
    assert a.objective == pytest.approx(b.objective, rel=1e-8)


def test_gamma_override_and_epsilon():
    p, cmap = small_instance(8)
    res = spg_solve(p, cmap, SolverConfig(lam=0.2, gamma=2.0, epsilon=0.1))
    assert res.mu == pytest.approx(0.1 / (2 * cmap.D))
    assert res.objective == pytest.approx(eval_objective(p, cmap.with_gamma(2.0), res.beta, 0.2))


def test_max_iter_not_converged():
    p, cmap = small_instance(9)
    res = spg_solve(p, cmap, SolverConfig(lam=0.1, max_iter=3))
    assert res.iterations == 3 and not res.converged


def test_divergence_guard():
    p, cmap = small_instance(10)
    with pytest.raises(DivergenceError, match="iteration"):
        spg_solve(p, cmap, SolverConfig(lam=0.1, lipschitz_scale=1e-3))


def test_bad_warm_start():
    p, cmap = small_instance(11)
    with pytest.raises(ValueError):
        spg_solve(p, cmap, SolverConfig(), beta0=np.zeros(3))


def test_solve_path_basics():
    p, cmap = small_instance(12)
    assert solve_path(p, cmap, []) == []
    cfg = SolverConfig(lam=0.4)
    one = solve_path(p, cmap, [cfg])[0]
    np.testing.assert_array_equal(one.beta, spg_solve(p, cmap, cfg).beta)


def test_warm_start_saves_iterations():
    wins = 0
    for seed in range(10):
        p, cmap = small_instance(100 + seed)
        lam_max = np.abs(p.X.T @ p.y).max()
        cfgs = [SolverConfig(lam=0.2 * lam_max), SolverConfig(lam=0.15 * lam_max)]
        warm = solve_path(p, cmap, cfgs)[1]
        cold = spg_solve(p, cmap, cfgs[1])
        wins += warm.iterations <= cold.iterations
    assert wins >= 8


def test_sparsity_along_path_is_logged(capsys):
    # not a theorem: report how often the support grows monotonically
    ok = 0
    for seed in range(10):
        p, cmap = small_instance(200 + seed)
        lam_max = np.abs(p.X.T @ p.y).max()
        path = solve_path(p, cmap, [SolverConfig(lam=f * lam_max) for f in (1.0, 0.5, 0.2, 0.1, 0.05)])
        nnz = [int(np.count_nonzero(r.beta)) for r in path]
        ok += all(a <= b for a, b in zip(nnz, nnz[1:]))
    print(f"monotone support growth in {ok}/10 paths")
    assert "paths" in capsys.readouterr().out
