"""Desk-scale verification suite.

Every check returns a :class:`CheckResult`; ``run_checks`` drives them for the
``check`` CLI command and the acceptance tests. ``lipschitz_scale`` is
threaded into every solver call and Lipschitz comparison so a deliberately
wrong step constant can be injected as a negative control.
"""
from __future__ import annotations

import contextlib
import io
import json
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, fobos_solve, subgradient_solve
from .datagen import (GenSpec, build_correlation_graph, chain_groups, gen_multitask_blocks_with_holdout,
                      gen_overlap_chain)
from .model import (FusionGraph, GroupStructure, SolverConfig, eval_objective,
                    validate_multitask, validate_problem)
from .multitask import (MultiTaskMapInfo, expand_to_single_task,
                        smoothed_eval_mt, spg_solve_mt)
from .oracle import fd_gradient, grid_step, prox_1d_grid, reference_solve
from .penalty import (build_fusion_map, build_group_map, exact_penalty, smoothed_eval,
                      spectral_norm)
from .solver import DivergenceError, _lipschitz, spg_solve, soft_threshold


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    budget: float = 0.0
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} ({self.seconds:.1f}s/{self.budget:.0f}s): {self.detail}"


# -- random instances -----------------------------------------------------------

def random_groups(rng, J, n_groups, weights=True):
    groups = []
    for _ in range(n_groups):
        size = min(int(rng.integers(2, max(3, J // 2) + 1)), J)
        groups.append(sorted(rng.choice(J, size=size, replace=False).tolist()))
    w = rng.uniform(0.5, 2.0, n_groups) if weights else np.ones(n_groups)
    return GroupStructure.from_lists(J, groups, w)


def random_graph(rng, J, n_edges):
    pairs = [(m, l) for m in range(J) for l in range(m + 1, J)]
    idx = rng.choice(len(pairs), size=min(n_edges, len(pairs)), replace=False)
    edges = []
    for i in sorted(idx):
        r = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        edges.append((pairs[i][0], pairs[i][1], r))
    return FusionGraph(J, tuple(edges))


def random_map(rng, dim):
    if rng.random() < 0.5:
        return build_group_map(random_groups(rng, dim, int(rng.integers(1, 6))),
                               rng.uniform(0.2, 3.0))
    return build_fusion_map(random_graph(rng, dim, int(rng.integers(1, 2 * dim + 1))),
                            rng.uniform(0.2, 3.0))


def oracle_instances(seed=2011):
    """Ten overlapping-group and ten fusion problems (N <= 60)."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(20):
        if k < 10:
            J = int(rng.integers(10, 31))
            cmap = build_group_map(random_groups(rng, J, int(rng.integers(2, 6))), 1.0)
        else:
            J = int(rng.integers(8, 21))
            cmap = build_fusion_map(random_graph(rng, J, int(rng.integers(J, 41))), 1.0)
        N = int(rng.integers(20, 61))
        X = rng.standard_normal((N, J))
        beta = np.where(rng.random(J) < 0.4, rng.standard_normal(J), 0.0)
        y = X @ beta + 0.5 * rng.standard_normal(N)
        gamma = float(rng.uniform(0.5, 3.0))
        lam = float(rng.uniform(0.1, 2.0))
        out.append((validate_problem(X, y), cmap.with_gamma(gamma), lam))
    return out


# -- criteria -------------------------------------------------------------------

def check_oracle_agreement(lipschitz_scale=1.0, tol=1e-9):
    """spg objective within 1.001x of the reference on 20 small problems."""
    worst = 0.0
    ratios = []
    for problem, cmap, lam in oracle_instances():
        cfg = SolverConfig(lam=lam, mu=1e-4, tol=tol, max_iter=20000,
                           lipschitz_scale=lipschitz_scale)
        try:
            f = spg_solve(problem, cmap, cfg).objective
        except DivergenceError:
            f = np.inf
        _, ref = reference_solve(problem, cmap, lam)
        ratios.append(f / ref)
        worst = max(worst, f / ref)
    ok = worst <= 1.001
    return ok, f"worst spg/reference = {worst:.6f} (limit 1.001)", {"ratios": ratios}


def check_gradient(lipschitz_scale=1.0):
    """Analytic smoothed-penalty gradient vs central differences (h = 1e-5)."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for k in range(50):
        mu = (1.0, 1e-2, 1e-4)[k % 3]
        if k % 2 == 0:
            dim = int(rng.integers(3, 12))
            cmap = random_map(rng, dim)
            beta = rng.standard_normal(dim)
            g = smoothed_eval(cmap, beta, mu).gradient
            fd = fd_gradient(lambda b: smoothed_eval(cmap, b, mu).value, beta, 1e-5)
        else:
            K = int(rng.integers(3, 7))
            J = int(rng.integers(2, 6))
            info = MultiTaskMapInfo(random_map(rng, K), J)
            B = rng.standard_normal((J, K))
            g = smoothed_eval_mt(info, B, mu).gradient
            fd = fd_gradient(lambda b: smoothed_eval_mt(info, b, mu).value, B, 1e-5)
        err = np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)
        worst = max(worst, err)
    return worst <= 1e-5, f"worst relative FD error = {worst:.2e} (limit 1e-5)", {}


def check_sandwich(lipschitz_scale=1.0):
    """0 <= Omega - f_mu <= mu D on 100 random cases (1e-12 slack)."""
    rng = np.random.default_rng(11)
    lo, hi = np.inf, -np.inf
    for k in range(100):
        dim = int(rng.integers(2, 15))
        cmap = random_map(rng, dim)
        beta = rng.standard_normal(dim) * 10.0 ** rng.uniform(-4, 1)
        mu = 10.0 ** rng.uniform(-5, 1)
        gap = exact_penalty(cmap, beta) - smoothed_eval(cmap, beta, mu).value
        lo = min(lo, gap)
        hi = max(hi, gap - mu * cmap.D)
    ok = lo >= -1e-12 and hi <= 1e-12
    return ok, f"min gap = {lo:.3e}, max(gap - mu D) = {hi:.3e}", {}


def check_spectral(lipschitz_scale=1.0):
    """Closed-form group norm vs power iteration; fusion bound dominates power."""
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(20):
        J = int(rng.integers(3, 40))
        cmap = build_group_map(random_groups(rng, J, int(rng.integers(1, 8))),
                               rng.uniform(0.1, 3.0))
        exact = spectral_norm(cmap, "exact")
        power = spectral_norm(cmap, "power", tol=1e-14)
        worst = max(worst, abs(exact - power) / exact)
    violations = 0
    for _ in range(20):
        J = int(rng.integers(3, 30))
        cmap = build_fusion_map(random_graph(rng, J, int(rng.integers(1, 3 * J))),
                                rng.uniform(0.1, 3.0))
        if spectral_norm(cmap, "bound") < spectral_norm(cmap, "power") - 1e-12:
            violations += 1
    edge = build_fusion_map(FusionGraph(2, ((0, 1, 1.0),)), 1.0)
    tight = abs(spectral_norm(edge, "bound") - spectral_norm(edge, "power"))
    ok = worst <= 1e-8 and violations == 0 and tight <= 1e-10
    return ok, (f"group rel. err {worst:.1e}; bound violations {violations}; "
                f"single-edge gap {tight:.1e}"), {}


def check_prox(lipschitz_scale=1.0):
    """soft_threshold vs grid-search prox on 1000 (v, t) pairs; exact zeros."""
    rng = np.random.default_rng(17)
    res = 200_000
    worst = 0.0
    nonzero_below = 0
    for _ in range(1000):
        v = float(rng.uniform(-5, 5))
        t = float(rng.uniform(0, 3))
        x = float(soft_threshold(np.array([v]), t)[0])
        grid = prox_1d_grid(v, t, res)
        worst = max(worst, abs(x - grid) / grid_step(v, t, res))
        if abs(v) <= t and np.signbit(x) | (x != 0.0):
            nonzero_below += 1
    ok = worst <= 1.0 and nonzero_below == 0
    return ok, (f"max |soft - grid| = {worst:.2f} grid steps; "
                f"{nonzero_below} non-exact zeros"), {}


def rate_instance():
    rng = np.random.default_rng(23)
    groups = chain_groups(6, 10, 2)  # J = 50
    J = groups.dim
    X = rng.standard_normal((100, J))
    beta = np.where(np.arange(J) < 20, 1.0, 0.0)
    y = X @ beta + rng.standard_normal(100)
    return validate_problem(X, y), build_group_map(groups, 1.0), 0.5


def check_rate(lipschitz_scale=1.0):
    """Iterations to reach f - f* <= eps with mu = eps/2D grow at most ~1/eps."""
    problem, cmap, lam = rate_instance()
    _, fstar = reference_solve(problem, cmap, lam)
    eps = [1e-1, 1e-2, 1e-3]
    iters = []
    for e in eps:
        cfg = SolverConfig(lam=lam, epsilon=e, tol=1e-300, max_iter=200000,
                           target_objective=fstar + e, lipschitz_scale=lipschitz_scale)
        try:
            res = spg_solve(problem, cmap, cfg)
            iters.append(res.iterations if res.converged else np.nan)
        except DivergenceError:
            iters.append(np.nan)
    if np.any(np.isnan(iters)):
        return False, f"target not reached: iterations {iters}", {"iterations": iters}
    slope = np.polyfit(np.log(1.0 / np.array(eps)), np.log(iters), 1)[0]
    ok = 0.0 < slope <= 1.3
    return ok, f"iterations {iters}, log-log slope {slope:.3f} (need (0, 1.3])", \
        {"iterations": iters, "slope": float(slope)}


def ordering_reference(problem, cmap, lam):
    """Optimal objective for the ordering check: the reference solver where its
    size guard allows, otherwise a long run at mu = 1e-6."""
    if problem.n_features <= 100:
        return reference_solve(problem, cmap, lam)[1]
    cfg = SolverConfig(lam=lam, mu=1e-6, tol=1e-300, max_iter=50000)
    return spg_solve(problem, cmap, cfg).objective


def check_ordering(lipschitz_scale=1.0):
    """Every method stops once its objective is within 1.001x of the optimum
    (20000 iterations at most); spg must get there in fewer iterations than
    subgradient descent and all three final objectives must agree within 1%."""
    rows = []
    ok = True
    for G in (2, 5, 10):
        spec = GenSpec("overlap-chain", seed=100 + G, n=200, num_groups=G,
                       group_size=20, overlap=2)
        problem, groups, _ = gen_overlap_chain(spec)
        reg = G / 5.0
        cmap = build_group_map(groups, reg)
        target = 1.001 * ordering_reference(problem, cmap, reg)
        try:
            spg = spg_solve(problem, cmap, SolverConfig(
                lam=reg, tol=1e-300, target_objective=target, lipschitz_scale=lipschitz_scale))
            f_spg, it_spg = spg.objective, spg.iterations
        except DivergenceError:
            f_spg, it_spg = np.inf, np.inf
        bcfg = BaselineConfig(lam=reg, tol=1e-300, target_objective=target)
        fob = fobos_solve(problem, cmap, bcfg)
        sub = subgradient_solve(problem, cmap, bcfg)
        objs = [f_spg, fob.objective, sub.objective]
        spread = max(objs) / min(objs) - 1.0
        good = it_spg < sub.iterations and spread <= 0.01
        ok &= good
        rows.append(f"|G|={G}: iters spg {it_spg} / fobos {fob.iterations} / "
                    f"subgrad {sub.iterations}, spread {spread:.2e}")
    return ok, "; ".join(rows), {}


def check_multitask_reduction(lipschitz_scale=1.0):
    """K = 1 multi-task solve tracks the single-task solve iterate for iterate."""
    rng = np.random.default_rng(29)
    N, J = 40, 12
    X = rng.standard_normal((N, J))
    y = X @ np.where(rng.random(J) < 0.5, 1.0, 0.0) + 0.3 * rng.standard_normal(N)
    base = build_group_map(GroupStructure.from_lists(1, [[0]], [1.5]), 0.7)
    info = MultiTaskMapInfo(base, J)
    single_map = expand_to_single_task(info)
    cfg = SolverConfig(lam=0.4, mu=1e-3, max_iter=3000, lipschitz_scale=lipschitz_scale)
    it_mt, it_st = [], []
    spg_solve_mt(validate_multitask(X, y[:, None]), info, cfg,
                 callback=lambda t, b, f: it_mt.append(b[:, 0].copy()))
    spg_solve(validate_problem(X, y), single_map, cfg,
              callback=lambda t, b, f: it_st.append(b.copy()))
    if len(it_mt) != len(it_st):
        return False, f"iteration counts differ: {len(it_mt)} vs {len(it_st)}", {}
    worst = max(float(np.max(np.abs(a - b))) for a, b in zip(it_mt, it_st))
    return worst <= 1e-12, f"{len(it_mt)} iterations, max iterate difference {worst:.1e}", {}


def support_f1(est, truth) -> float:
    e = est != 0
    t = truth != 0
    tp = np.sum(e & t)
    if tp == 0:
        return 0.0
    prec = tp / np.sum(e)
    rec = tp / np.sum(t)
    return float(2 * prec * rec / (prec + rec))


SUPPORT_GRID = (0.01, 0.03, 0.1)


def check_support(lipschitz_scale=1.0, seeds=range(10)):
    """Mean support F1: graph-guided fused lasso >= plain lasso (10 seeds)."""
    f1_gf, f1_lasso, loose_gf, loose_lasso = [], [], [], []
    for seed in seeds:
        spec = GenSpec("multitask-blocks", seed=seed, n=100)
        train, hold, B = gen_multitask_blocks_with_holdout(spec, 100)
        K = train.n_tasks
        target = min(5 * K, K * (K - 1) // 2)
        graph = build_correlation_graph(train.Y, target_edges=target)
        base = build_fusion_map(graph, 1.0)
        lam_max = float(np.max(np.abs(train.X.T @ train.Y)))

        def pick(gamma_on):
            best = None
            for frac in SUPPORT_GRID:
                reg = frac * lam_max
                cfg = SolverConfig(lam=reg, gamma=reg if gamma_on else 0.0, tol=1e-9,
                                   lipschitz_scale=lipschitz_scale)
                try:
                    res = spg_solve_mt(train, base, cfg)
                except DivergenceError:
                    continue
                err = float(np.sum((hold.Y - hold.X @ res.beta) ** 2))
                if best is None or err < best[0]:
                    best = (err, res.beta)
            return best[1] if best is not None else np.zeros_like(B)

        b_gf, b_lasso = pick(True), pick(False)
        f1_gf.append(support_f1(b_gf, B))
        f1_lasso.append(support_f1(b_lasso, B))
        # diagnostic only: ignore entries below 1e-3, the scale of smoothing residue
        loose_gf.append(support_f1(np.where(np.abs(b_gf) > 1e-3, b_gf, 0.0), B))
        loose_lasso.append(support_f1(np.where(np.abs(b_lasso) > 1e-3, b_lasso, 0.0), B))
    mg, ml = float(np.mean(f1_gf)), float(np.mean(f1_lasso))
    return mg >= ml, (f"mean F1 GFlasso {mg:.3f} vs lasso {ml:.3f}; per seed "
                      f"GF {np.round(f1_gf, 3).tolist()} lasso {np.round(f1_lasso, 3).tolist()}; "
                      f"with |b| > 1e-3: GF {np.mean(loose_gf):.3f} lasso {np.mean(loose_lasso):.3f}"), \
        {"gflasso": f1_gf, "lasso": f1_lasso, "gflasso_1e-3": loose_gf, "lasso_1e-3": loose_lasso}


def check_roundtrip(lipschitz_scale=1.0):
    """Same seed and flags twice give identical result.json objectives, and the
    stored objective re-evaluates from the stored beta to 1e-9."""
    from . import cli
    from .io import load_groups, read_csv, read_vector
    from .penalty import build_group_map as bgm

    quiet = io.StringIO()
    with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(quiet), \
            contextlib.redirect_stderr(quiet):
        d = Path(tmp) / "data"
        cli.main(["gen", "--kind", "overlap-chain", "--num-groups", "3", "--group-size", "12",
                  "--overlap", "3", "--n", "60", "--seed", "5", "--out", str(d)])
        outs = []
        for k in range(2):
            out = Path(tmp) / f"result{k}.json"
            argv = ["solve", "--data", str(d), "--lambda", "0.5", "--gamma", "0.5",
                    "--out", str(out)]
            if lipschitz_scale != 1.0:
                argv += ["--lipschitz-scale", str(lipschitz_scale)]
            cli.main(argv)
            outs.append(json.loads(out.read_text()))
        keys = ("objective", "smoothed_objective", "iterations")
        same = all(outs[0][k] == outs[1][k] for k in keys)
        problem = validate_problem(read_csv(d / "X.csv"), read_vector(d / "y.csv"))
        cmap = bgm(load_groups(d / "groups.json"), 0.5)
        f = eval_objective(problem, cmap, np.array(outs[0]["beta"]), 0.5)
        rel = abs(f - outs[0]["objective"]) / abs(f)
    return same and rel <= 1e-9, f"identical runs: {same}; re-evaluation error {rel:.1e}", {}


def check_lipschitz(lipschitz_scale=1.0):
    """The solver's step constant dominates the attained curvature of the smooth part."""
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(10):
        J = int(rng.integers(4, 15))
        X = rng.standard_normal((30, J))
        problem = validate_problem(X, rng.standard_normal(30))
        cmap = random_map(rng, J)
        mu = 10.0 ** rng.uniform(-3, 0)
        L = _lipschitz(problem, cmap.norm.value, mu, lipschitz_scale)
        C = cmap.to_dense()
        H = X.T @ X + C.T @ C / mu
        w, V = np.linalg.eigh(H)
        v = V[:, -1]
        # small enough that no dual coordinate saturates: h is quadratic there
        u = np.abs(C @ v).max() if cmap.rows else 1.0
        d = 0.1 * mu / max(u, 1e-300)
        g0 = X.T @ (X @ np.zeros(J) - problem.y) + smoothed_eval(cmap, np.zeros(J), mu).gradient
        g1 = X.T @ (X @ (d * v) - problem.y) + smoothed_eval(cmap, d * v, mu).gradient
        ratio = np.linalg.norm(g1 - g0) / d
        worst = max(worst, ratio / L)
    return worst <= 1.0 + 1e-9, f"max attained curvature / step constant = {worst:.6f}", {}


CHECKS = [
    ("oracle_agreement", check_oracle_agreement, 60),
    ("gradient_fidelity", check_gradient, 10),
    ("smoothing_sandwich", check_sandwich, 5),
    ("spectral_norms", check_spectral, 10),
    ("prox_correctness", check_prox, 10),
    ("rate_slope", check_rate, 60),
    ("method_ordering", check_ordering, 120),
    ("multitask_reduction", check_multitask_reduction, 5),
    ("support_recovery", check_support, 180),
    ("determinism_roundtrip", check_roundtrip, 10),
    ("lipschitz_bound", check_lipschitz, 5),
]


def run_check(name, lipschitz_scale=1.0) -> CheckResult:
    fn, budget = {n: (f, b) for n, f, b in CHECKS}[name]
    t0 = time.perf_counter()
    try:
        ok, detail, data = fn(lipschitz_scale=lipschitz_scale)
    except Exception as exc:  # noqa: BLE001
        ok, detail, data = False, f"raised {type(exc).__name__}: {exc}", {}
    secs = time.perf_counter() - t0
    return CheckResult(name, bool(ok), detail, secs, budget, data)


def run_checks(filter_text=None, lipschitz_scale=1.0, echo=None):
    results = []
    for name, _, _ in CHECKS:
        if filter_text and filter_text not in name:
            continue
        res = run_check(name, lipschitz_scale)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
