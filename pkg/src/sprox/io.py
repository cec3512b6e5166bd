"""File formats.

Matrices are headerless CSV (comma separated, LF, ``repr``-precision floats).
Structures are JSON with 1-based indices::

    groups.json  {"dim": J, "groups": [{"members": [1, 2], "weight": 1.0}, ...]}
    graph.json   {"dim": K, "edges": [{"m": 1, "l": 2, "r": 0.7}, ...]}
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .model import FusionGraph, GroupStructure


class FormatError(ValueError):
    """Malformed input file; the message names the file and line or field."""


def write_csv(path, arr) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    lines = [",".join(repr(float(v)) for v in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_csv(path) -> np.ndarray:
    """Parse a headerless CSV matrix; ragged rows and bad numbers are errors."""
    rows = []
    width = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise FormatError(f"{path}:{lineno}: expected {width} values, got {len(vals)}")
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no data")
    return np.array(rows)


def read_vector(path) -> np.ndarray:
    arr = read_csv(path)
    if arr.shape[1] != 1 and arr.shape[0] != 1:
        raise FormatError(f"{path}: expected a single column, got shape {arr.shape}")
    return arr.reshape(-1)


def _need(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is int:
        ok = isinstance(val, int) and not isinstance(val, bool)
    elif kind is float:
        ok = isinstance(val, (int, float)) and not isinstance(val, bool) and math.isfinite(val)
    else:
        ok = isinstance(val, kind)
    if not ok:
        raise FormatError(f"{where}.{key}: expected {kind.__name__}, got {val!r}")
    return val


def groups_from_json(data, where="groups.json") -> GroupStructure:
    dim = _need(data, "dim", int, where)
    if dim < 1:
        raise FormatError(f"{where}.dim: must be positive")
    groups = _need(data, "groups", list, where)
    out = []
    for k, g in enumerate(groups):
        at = f"{where}.groups[{k}]"
        members = _need(g, "members", list, at)
        for i, m in enumerate(members):
            if not isinstance(m, int) or isinstance(m, bool) or not 1 <= m <= dim:
                raise FormatError(f"{at}.members[{i}]: expected an index in 1..{dim}, got {m!r}")
        weight = 1.0
        if "weight" in g:
            weight = _need(g, "weight", float, at)
            if weight <= 0:
                raise FormatError(f"{at}.weight: must be positive")
        if not members:
            raise FormatError(f"{at}.members: group is empty")
        if len(set(members)) != len(members):
            raise FormatError(f"{at}.members: repeated index")
        out.append(([m - 1 for m in members], float(weight)))
    return GroupStructure(dim, tuple(out))


def graph_from_json(data, where="graph.json") -> FusionGraph:
    dim = _need(data, "dim", int, where)
    if dim < 1:
        raise FormatError(f"{where}.dim: must be positive")
    edges = _need(data, "edges", list, where)
    out = []
    seen = set()
    for k, e in enumerate(edges):
        at = f"{where}.edges[{k}]"
        m = _need(e, "m", int, at)
        l = _need(e, "l", int, at)
        r = _need(e, "r", float, at)
        for key, v in (("m", m), ("l", l)):
            if not 1 <= v <= dim:
                raise FormatError(f"{at}.{key}: expected an index in 1..{dim}, got {v}")
        if m >= l:
            raise FormatError(f"{at}: need m < l, got m={m}, l={l}")
        if r == 0:
            raise FormatError(f"{at}.r: must be nonzero")
        if (m, l) in seen:
            raise FormatError(f"{at}: duplicate edge ({m}, {l})")
        seen.add((m, l))
        out.append((m - 1, l - 1, float(r)))
    return FusionGraph(dim, tuple(out))


def groups_to_json(groups: GroupStructure) -> dict:
    return {"dim": groups.dim,
            "groups": [{"members": [i + 1 for i in g.members], "weight": g.weight}
                       for g in groups.groups]}


def graph_to_json(graph: FusionGraph) -> dict:
    return {"dim": graph.dim,
            "edges": [{"m": e.m + 1, "l": e.l + 1, "r": e.r} for e in graph.edges]}


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from None


def load_groups(path) -> GroupStructure:
    return groups_from_json(_load_json(path), Path(path).name)


def load_graph(path) -> FusionGraph:
    return graph_from_json(_load_json(path), Path(path).name)


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8", newline="\n")


def result_to_json(result, config_echo: dict, multitask: bool) -> dict:
    coef = result.beta.tolist()
    out = {
        "B" if multitask else "beta": coef,
        "objective": result.objective,
        "smoothed_objective": result.smoothed_objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "wall_seconds": result.wall_seconds,
        "mu": result.mu,
        "lipschitz": result.lipschitz,
        "method": result.method,
        "config": config_echo,
    }
    if result.trace is not None:
        out["trace"] = [list(p) for p in result.trace]
    return out
