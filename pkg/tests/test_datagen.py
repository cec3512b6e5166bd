import numpy as np
import pytest

from sprox.datagen import (GenSpec, build_correlation_graph, chain_beta, gen_multitask_blocks,
                           gen_multitask_blocks_with_holdout, gen_overlap_chain)


def test_chain_size():
    for G in (10, 50, 100):
        assert GenSpec("overlap-chain", seed=0, num_groups=G).n_features == 90 * G + 10
    p, groups, beta = gen_overlap_chain(GenSpec("overlap-chain", seed=1, n=50, num_groups=10))
    assert p.X.shape == (50, 910) and groups.dim == 910 and len(groups) == 10


def test_chain_signal():
    b = chain_beta(4)
    np.testing.assert_allclose(b, [-1.0, np.exp(-0.01), -np.exp(-0.02), np.exp(-0.03)])


def test_chain_deterministic():
    spec = GenSpec("overlap-chain", seed=9, n=30, num_groups=3, group_size=10, overlap=2)
    a, b = gen_overlap_chain(spec), gen_overlap_chain(spec)
    assert a[0].X.tobytes() == b[0].X.tobytes() and a[0].y.tobytes() == b[0].y.tobytes()


def test_block_pattern():
    spec = GenSpec("multitask-blocks", seed=3, n=100)
    p, B = gen_multitask_blocks(spec)
    assert B.shape == (30, 10) and p.Y.shape == (100, 10)
    assert set(np.unique(B)) == {0.0, 0.8}
    blocks = [range(0, 3), range(3, 6), range(6, 10)]
    rows = np.flatnonzero(B.any(axis=1))
    assert rows.size == 3 * 3 + 2
    cover = []
    for j in rows:
        hit = [all(B[j, k] == 0.8 for k in blk) for blk in blocks]
        # each relevant input covers whole blocks and nothing else
        assert np.count_nonzero(B[j]) == sum(len(blk) for blk, h in zip(blocks, hit) if h)
        cover.append(sum(hit))
    assert sorted(cover) == [1] * 9 + [2, 2]
    assert set(np.unique(p.X)) <= {0.0, 1.0, 2.0}


def test_zero_effect_is_noise():
    p, B = gen_multitask_blocks(GenSpec("multitask-blocks", seed=4, n=50, effect_b=0.0))
    assert not B.any()
    assert abs(p.Y.std() - 1.0) < 0.15


def test_multitask_deterministic_and_holdout_prefix():
    spec = GenSpec("multitask-blocks", seed=5, n=40)
    p1, B1 = gen_multitask_blocks(spec)
    p2, B2 = gen_multitask_blocks(spec)
    tr, ho, B3 = gen_multitask_blocks_with_holdout(spec, 25)
    assert p1.X.tobytes() == p2.X.tobytes() == tr.X.tobytes()
    np.testing.assert_array_equal(B1, B3)
    assert ho.X.shape == (25, 30)


def test_spec_validation():
    with pytest.raises(ValueError):
        GenSpec("spiral", seed=0)
    with pytest.raises(ValueError):
        GenSpec("overlap-chain", seed=0, group_size=5, overlap=5)
    with pytest.raises(ValueError):
        GenSpec("multitask-blocks", seed=0, n_inputs=5)


def test_graph_identical_columns():
    y = np.array([1.0, 2.0, 0.5, 3.0])
    g = build_correlation_graph(np.column_stack([y, y]), rho=0.99)
    assert len(g) == 1 and g.edges[0].r == pytest.approx(1.0)


def test_graph_uncorrelated_columns():
    Y = np.array([[1, 1], [-1, 1], [1, -1], [-1, -1]], dtype=float)
    assert len(build_correlation_graph(Y, rho=0.01)) == 0


def test_graph_target_edges():
    spec = GenSpec("multitask-blocks", seed=6, n=100, blocks=(4, 4, 4))
    p, _ = gen_multitask_blocks(spec)
    g = build_correlation_graph(p.Y, target_edges=5 * 12)
    assert len(g) == 60
    assert all(e.m < e.l for e in g.edges)
    assert len({(e.m, e.l) for e in g.edges}) == 60
    with pytest.raises(ValueError):
        build_correlation_graph(p.Y[:, :10], target_edges=50)


def test_graph_constant_column():
    Y = np.column_stack([np.arange(5.0), np.ones(5)])
    with pytest.raises(ValueError, match="column 2"):
        build_correlation_graph(Y, rho=0.3)
