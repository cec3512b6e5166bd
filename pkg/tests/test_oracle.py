import numpy as np
import pytest

from sprox.model import FusionGraph, SolverConfig, validate_problem
from sprox.oracle import (GuardError, fd_gradient, grid_step, jacobi_eigenvalues,
                          least_squares_objective, orthogonal_lasso, prox_1d_grid, reference_solve)
from sprox.penalty import build_fusion_map
from sprox.solver import spg_solve
from sprox.baselines import BaselineConfig, fobos_solve, subgradient_solve


def test_fd_examples():
    np.testing.assert_allclose(fd_gradient(lambda b: 0.5 * b @ b, np.array([1.0, 2.0])), [1, 2], atol=1e-8)
    assert not fd_gradient(lambda b: 3.0, np.ones(4)).any()
    with pytest.raises(ValueError):
        fd_gradient(lambda b: 0.0, np.ones(2), h=0.0)


def test_prox_grid_examples():
    for v, t, want in ((2.0, 0.5, 1.5), (0.3, 0.5, 0.0), (1.7, 0.0, 1.7)):
        assert abs(prox_1d_grid(v, t, 10**6) - want) <= grid_step(v, t, 10**6)
    with pytest.raises(ValueError):
        prox_1d_grid(1.0, 1.0, 1000)


def test_jacobi(rng):
    A = rng.standard_normal((6, 6))
    A = A + A.T
    np.testing.assert_allclose(jacobi_eigenvalues(A), np.linalg.eigvalsh(A), atol=1e-10)


def test_reference_least_squares(rng):
    X = rng.standard_normal((30, 5))
    p = validate_problem(X, rng.standard_normal(30))
    _, f = reference_solve(p, None, 0.0)
    assert f == pytest.approx(least_squares_objective(p), rel=1e-6)


def test_reference_orthogonal_lasso(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((15, 15)))
    p = validate_problem(Q[:, :6], 2 * rng.standard_normal(15))
    beta, _ = reference_solve(p, None, 0.5)
    np.testing.assert_allclose(beta, orthogonal_lasso(p, 0.5), atol=1e-6)


def test_reference_beats_production(rng):
    X = rng.standard_normal((30, 8))
    p = validate_problem(X, X @ rng.standard_normal(8) + rng.standard_normal(30))
    cmap = build_fusion_map(FusionGraph(8, ((0, 1, 0.9), (1, 2, -0.5), (4, 7, 0.3))), 1.5)
    _, ref = reference_solve(p, cmap, 0.4)
    assert ref <= spg_solve(p, cmap, SolverConfig(lam=0.4)).objective
    assert ref <= fobos_solve(p, cmap, BaselineConfig(lam=0.4)).objective
    assert ref <= subgradient_solve(p, cmap, BaselineConfig(lam=0.4)).objective


def test_reference_deterministic(rng):
    X = rng.standard_normal((20, 6))
    p = validate_problem(X, rng.standard_normal(20))
    a = reference_solve(p, None, 0.3)
    b = reference_solve(p, None, 0.3)
    np.testing.assert_array_equal(a[0], b[0])
    assert a[1] == b[1]


def test_guards():
    p = validate_problem(np.ones((3, 101)), np.ones(3))
    with pytest.raises(GuardError):
        reference_solve(p, None, 0.1)
    with pytest.raises(GuardError):
        reference_solve(validate_problem(np.eye(3), np.ones(3)), None, 0.1, budget=10)
