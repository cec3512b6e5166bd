"""Command-line interface: ``sprox gen | solve | bench | check``.

Exit codes: 0 success, 1 input or run error, 2 usage error (argparse) or a
solve that hit ``--max-iter`` without converging.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import io
from .baselines import BaselineConfig, fobos_solve, subgradient_solve
from .datagen import (GenSpec, build_correlation_graph, gen_multitask_blocks,
                      gen_overlap_chain)
from .model import SolverConfig, validate_multitask, validate_problem
from .multitask import MultiTaskMapInfo, spg_solve_mt
from .penalty import build_fusion_map, build_group_map
from .solver import spg_solve

BENCH_COLUMNS = ["method", "penalty", "N", "J", "K", "gamma", "lambda",
                 "iterations", "cpu_seconds", "objective", "status"]


class CliError(Exception):
    pass


def _blocks(text):
    try:
        sizes = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return sizes


def _default_edges(K):
    return min(5 * K, K * (K - 1) // 2)


# -- gen ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    spec = GenSpec(args.kind, args.seed, n=args.n, noise_sd=args.noise_sd,
                   num_groups=args.num_groups, group_size=args.group_size,
                   overlap=args.overlap, n_inputs=args.n_inputs, blocks=args.blocks,
                   per_block=args.per_block, cross_block=args.cross_block,
                   effect_b=args.effect_b)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {out}: {exc}") from None
    meta = spec.to_dict()
    if spec.kind == "overlap-chain":
        problem, groups, beta = gen_overlap_chain(spec)
        io.write_csv(out / "X.csv", problem.X)
        io.write_csv(out / "y.csv", problem.y)
        io.dump_json(out / "groups.json", io.groups_to_json(groups))
        io.write_csv(out / "beta_true.csv", beta)
    else:
        problem, B = gen_multitask_blocks(spec)
        if args.rho is not None:
            graph = build_correlation_graph(problem.Y, rho=args.rho)
            meta["rho"] = args.rho
        else:
            target = args.target_edges
            if target is None:
                target = _default_edges(spec.n_tasks)
            graph = build_correlation_graph(problem.Y, target_edges=target)
            meta["target_edges"] = target
        io.write_csv(out / "X.csv", problem.X)
        io.write_csv(out / "Y.csv", problem.Y)
        io.dump_json(out / "graph.json", io.graph_to_json(graph))
        io.write_csv(out / "beta_true.csv", B)
    io.dump_json(out / "spec.json", meta)
    print(f"wrote {spec.kind} data (N={spec.n}, J={spec.n_features}, "
          f"K={spec.n_tasks}) to {out}")
    return 0


# -- solve ----------------------------------------------------------------------

def _resolve_inputs(args):
    x, y, groups, graph = args.x, args.y, args.groups, args.graph
    if args.data:
        d = Path(args.data)
        x = x or d / "X.csv"
        if y is None:
            y = d / "Y.csv" if (d / "Y.csv").exists() else d / "y.csv"
        if groups is None and graph is None:
            if (d / "groups.json").exists():
                groups = d / "groups.json"
            elif (d / "graph.json").exists():
                graph = d / "graph.json"
    if x is None or y is None:
        raise CliError("need --data or both --x and --y")
    if groups is not None and graph is not None:
        raise CliError("give at most one of --groups and --graph")
    for p in (x, y, groups, graph):
        if p is not None and not Path(p).exists():
            raise CliError(f"{p}: no such file")
    return x, y, groups, graph


def load_problem(args):
    """``(problem, structure_map_or_None, multitask)`` from solve flags."""
    x, y, groups, graph = _resolve_inputs(args)
    X = io.read_csv(x)
    Y = io.read_csv(y)
    multi = Y.shape[1] > 1 or Path(y).name == "Y.csv"
    if multi:
        problem = validate_multitask(X, Y, args.precompute_gram)
    else:
        problem = validate_problem(X, Y.reshape(-1), args.precompute_gram)
    dim = Y.shape[1] if multi else X.shape[1]
    cmap = None
    if groups is not None:
        cmap = build_group_map(io.load_groups(groups), 1.0)
    elif graph is not None:
        cmap = build_fusion_map(io.load_graph(graph), 1.0)
    if cmap is not None and cmap.dim != dim:
        what = "tasks" if multi else "features"
        raise CliError(f"structure has dim {cmap.dim} but the data has {dim} {what}")
    return problem, cmap, multi


def cmd_solve(args) -> int:
    problem, cmap, multi = load_problem(args)
    config = SolverConfig(lam=args.lam, gamma=args.gamma, mu=args.mu, epsilon=args.epsilon,
                          tol=args.tol, max_iter=args.max_iter,
                          precompute_gram=args.precompute_gram, record_trace=args.trace,
                          lipschitz_scale=args.lipschitz_scale)
    if args.method == "spg":
        if multi:
            info = None if cmap is None else MultiTaskMapInfo(cmap, problem.n_features)
            result = spg_solve_mt(problem, info, config)
        else:
            result = spg_solve(problem, cmap, config)
    else:
        bcfg = BaselineConfig(lam=args.lam, gamma=args.gamma, tol=args.tol,
                              max_iter=args.max_iter, record_trace=args.trace)
        solve = fobos_solve if args.method == "fobos" else subgradient_solve
        result = solve(problem, cmap, bcfg)
    echo = config.to_dict()
    echo.update(method=args.method, lipschitz_scale=args.lipschitz_scale,
                data=str(args.data) if args.data else None)
    payload = io.result_to_json(result, echo, multi)
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(text)
    status = "converged" if result.converged else "max-iter reached"
    print(f"{args.method}: objective {result.objective:.10g} after "
          f"{result.iterations} iterations ({status})", file=sys.stderr)
    return 0 if result.converged else 2


# -- bench ----------------------------------------------------------------------

def _bench_instances(cfg):
    if "instances" in cfg:
        return [dict(inst) for inst in cfg["instances"]]
    if "sweep" in cfg:
        base = dict(cfg.get("base", {}))
        keys = list(cfg["sweep"])
        out = []
        for values in itertools.product(*(cfg["sweep"][k] for k in keys)):
            inst = dict(base)
            inst.update(zip(keys, values))
            out.append(inst)
        return out
    raise CliError("bench config needs 'instances' or 'sweep'")


_SPEC_KEYS = ("kind", "seed", "n", "noise_sd", "num_groups", "group_size", "overlap",
              "n_inputs", "blocks", "per_block", "cross_block", "effect_b")


def _build_instance(inst):
    spec = GenSpec(**{k: inst[k] for k in _SPEC_KEYS if k in inst})
    if spec.kind == "overlap-chain":
        problem, groups, _ = gen_overlap_chain(spec)
        cmap = build_group_map(groups, 1.0)
        penalty = "group"
        default_reg = spec.num_groups / 5.0
    else:
        problem, _ = gen_multitask_blocks(spec)
        target = inst.get("target_edges", _default_edges(spec.n_tasks))
        cmap = build_fusion_map(build_correlation_graph(problem.Y, target_edges=target), 1.0)
        penalty = "fusion"
        default_reg = 1.0
    gamma = float(inst.get("gamma", default_reg))
    lam = float(inst.get("lambda", default_reg))
    return spec, problem, cmap, penalty, gamma, lam


def _bench_run(inst, method, solver_opts):
    row = dict.fromkeys(BENCH_COLUMNS, "")
    row["method"] = method
    try:
        spec, problem, cmap, penalty, gamma, lam = _build_instance(inst)
        row.update(penalty=penalty, N=spec.n, J=spec.n_features, K=spec.n_tasks,
                   gamma=gamma, **{"lambda": lam})
        tol = float(solver_opts.get("tol", 1e-6))
        max_iter = int(solver_opts.get("max_iter", 20000))
        multi = spec.kind == "multitask-blocks"
        if method == "spg":
            config = SolverConfig(lam=lam, gamma=gamma, mu=solver_opts.get("mu"),
                                  tol=tol, max_iter=max_iter,
                                  precompute_gram=bool(solver_opts.get("precompute_gram", False)))
            res = (spg_solve_mt if multi else spg_solve)(problem, cmap, config)
        elif method in ("fobos", "subgrad"):
            bcfg = BaselineConfig(lam=lam, gamma=gamma, tol=tol, max_iter=max_iter,
                                  step_c=solver_opts.get("step_c"))
            res = (fobos_solve if method == "fobos" else subgradient_solve)(problem, cmap, bcfg)
        else:
            raise CliError(f"unknown method {method!r}")
        row.update(iterations=res.iterations, cpu_seconds=f"{res.wall_seconds:.6f}",
                   objective=repr(float(res.objective)),
                   status="converged" if res.converged else "max-iter")
    except Exception as exc:  # noqa: BLE001 - reported in the row
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


def _threads():
    raw = os.environ.get("SPROX_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"SPROX_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def bench_rows(cfg, threads=1):
    """Rows in config order (instance-major, then method)."""
    methods = cfg.get("methods", ["spg", "fobos", "subgrad"])
    opts = cfg.get("solver", {})
    jobs = [(inst, m) for inst in _bench_instances(cfg) for m in methods]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda job: _bench_run(job[0], job[1], opts), jobs))
    return [_bench_run(inst, m, opts) for inst, m in jobs]


def format_bench(rows, n_methods) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for r in rows:
        w.writerow([r[c] for c in BENCH_COLUMNS])
    buf.write("\n# summary\n")
    w.writerow(["instance", "best_method", "best_objective"])
    for i in range(0, len(rows), n_methods):
        chunk = [r for r in rows[i:i + n_methods] if r["objective"] != ""]
        if chunk:
            best = min(chunk, key=lambda r: float(r["objective"]))
            w.writerow([i // n_methods + 1, best["method"], best["objective"]])
        else:
            w.writerow([i // n_methods + 1, "", ""])
    return buf.getvalue()


def cmd_bench(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise CliError(f"cannot read {args.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError(f"{args.config}: expected a JSON object")
    rows = bench_rows(cfg, _threads())
    text = format_bench(rows, len(cfg.get("methods", ["spg", "fobos", "subgrad"])))
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise CliError(f"cannot write {args.out}: {exc}") from None
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r["status"].startswith("error")]
    for r in failed:
        print(f"{r['method']}: {r['status']}", file=sys.stderr)
    return 1 if failed else 0


# -- check ----------------------------------------------------------------------

def cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(args.filter, args.fuzz_lipschitz, echo=print)
    if not results:
        raise CliError(f"no check matches {args.filter!r}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 1


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sprox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--kind", choices=["overlap-chain", "multitask-blocks"], default="overlap-chain")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--noise-sd", type=float, default=1.0)
    g.add_argument("--num-groups", type=int, default=10)
    g.add_argument("--group-size", type=int, default=100)
    g.add_argument("--overlap", type=int, default=10)
    g.add_argument("--n-inputs", type=int, default=30)
    g.add_argument("--blocks", type=_blocks, default=(3, 3, 4), help="task block sizes, e.g. 3,3,4")
    g.add_argument("--per-block", type=int, default=3)
    g.add_argument("--cross-block", type=int, default=2)
    g.add_argument("--effect-b", type=float, default=0.8)
    edges = g.add_mutually_exclusive_group()
    edges.add_argument("--rho", type=float, help="correlation threshold for graph edges")
    edges.add_argument("--target-edges", type=int, help="keep this many strongest edges")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one problem")
    s.add_argument("--data", help="directory written by gen")
    s.add_argument("--x")
    s.add_argument("--y")
    s.add_argument("--groups")
    s.add_argument("--graph")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    smooth = s.add_mutually_exclusive_group()
    smooth.add_argument("--mu", type=float)
    smooth.add_argument("--epsilon", type=float)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-iter", type=int, default=20000)
    s.add_argument("--method", choices=["spg", "fobos", "subgrad"], default="spg")
    s.add_argument("--precompute-gram", action="store_true")
    s.add_argument("--trace", action="store_true", help="record per-iteration objectives")
    s.add_argument("--lipschitz-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    s.add_argument("--out", help="result.json path (default stdout)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark table")
    b.add_argument("config", help="JSON config with 'instances' or 'sweep' and 'methods'")
    b.add_argument("--out", help="CSV path (default stdout)")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("check", help="run the verification suite")
    c.add_argument("--filter", help="only checks whose name contains this text")
    c.add_argument("--fuzz-lipschitz", type=float, default=1.0,
                   help="scale every step constant (negative control)")
    c.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, io.FormatError, ValueError) as exc:
        print(f"sprox {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
