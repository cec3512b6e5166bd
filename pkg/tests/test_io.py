import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from sprox.io import (FormatError, graph_from_json, graph_to_json, groups_from_json,
                      groups_to_json, load_groups, read_csv, write_csv)
from sprox.model import FusionGraph, GroupStructure


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=6),
                  elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_roundtrip(tmp_path_factory, arr):
    path = tmp_path_factory.mktemp("csv") / "m.csv"
    write_csv(path, arr)
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    np.testing.assert_array_equal(read_csv(path), arr)


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2\n3\n")
    with pytest.raises(FormatError, match="bad.csv:2"):
        read_csv(p)
    p.write_text("1,2\n3,x\n")
    with pytest.raises(FormatError, match="bad.csv:2"):
        read_csv(p)


def test_structure_roundtrip():
    g = GroupStructure.from_lists(5, [[0, 2], [2, 3, 4]], [1.0, 0.5])
    d = groups_to_json(g)
    assert d["groups"][0]["members"] == [1, 3]
    assert groups_from_json(json.loads(json.dumps(d))) == g
    f = FusionGraph(4, ((0, 3, -0.4), (1, 2, 0.9)))
    assert graph_from_json(graph_to_json(f)) == f


def test_default_weight():
    g = groups_from_json({"dim": 3, "groups": [{"members": [1, 2]}]})
    assert g.groups[0].weight == 1.0


@pytest.mark.parametrize("data, where", [
    ({"groups": []}, "groups.json: missing field 'dim'"),
    ({"dim": 3, "groups": [{"members": [1, 4]}]}, r"groups.json.groups\[0\].members\[1\]"),
    ({"dim": 3, "groups": [{"members": [1]}, {"members": [2], "weight": "x"}]},
     r"groups.json.groups\[1\].weight"),
    ({"dim": 3, "groups": [{"members": [1], "weight": -1}]}, r"groups\[0\].weight"),
])
def test_group_schema_errors(data, where):
    with pytest.raises(FormatError, match=where):
        groups_from_json(data)


@pytest.mark.parametrize("edge, where", [
    ({"m": 2, "l": 1, "r": 0.5}, r"edges\[0\]: need m < l"),
    ({"m": 1, "l": 9, "r": 0.5}, r"edges\[0\].l"),
    ({"m": 1, "l": 2, "r": 0}, r"edges\[0\].r"),
    ({"m": 1, "l": 2}, r"edges\[0\]: missing field 'r'"),
])
def test_graph_schema_errors(edge, where):
    with pytest.raises(FormatError, match=where):
        graph_from_json({"dim": 3, "edges": [edge]})


def test_bad_json_names_line(tmp_path):
    p = tmp_path / "groups.json"
    p.write_text('{"dim": 3,\n "groups": [\n}')
    with pytest.raises(FormatError, match="groups.json:3"):
        load_groups(p)
