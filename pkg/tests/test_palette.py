import itertools

import numpy as np
import pytest

from streamcolor.generators import generate_instance
from streamcolor.palette import (
    ConflictGraph,
    build_conflict_graph,
    conflict_keep,
    palette_space_report,
    sample_palettes,
)
from streamcolor.params import ParamSet

from conftest import oracle_from_edges, source_of


def test_l1_is_a_single_color_in_range():
    params = ParamSet.desk(50, 10)
    pal = sample_palettes(50, 10, params, seed=1)
    assert pal.l1.shape == (50,)
    assert ((1 <= pal.l1) & (pal.l1 <= 10)).all()


def test_clamped_rate_gives_full_palette():
    # beta=8 at delta=6: the per-color rate beta/delta caps at 1
    params = ParamSet.desk(20, 6, beta=8)
    pal = sample_palettes(20, 6, params, seed=2)
    assert all(pal.l2[v] == frozenset(range(1, 7)) for v in range(20))


def test_list_size_concentration():
    # mean |L2| over vertices = beta within 4 sigma; delta=100, beta=8
    n, delta, beta = 1000, 100, 8
    params = ParamSet.desk(n, delta, beta=beta, eps=1 / 40)
    pal = sample_palettes(n, delta, params, seed=3)
    sizes = np.array([len(pal.l2[v]) for v in range(n)])
    rate = beta / delta
    sigma_of_mean = np.sqrt(delta * rate * (1 - rate) / n)
    assert abs(sizes.mean() - beta) <= 4 * sigma_of_mean


def test_paper_mode_clamps_with_warning():
    params = ParamSet.paper(30)
    with pytest.warns(UserWarning, match="clamped"):
        pal = sample_palettes(30, 8, params, seed=1)
    assert pal.l3[0] == frozenset(range(1, 9))  # rate >= 1 became the full palette


def test_membership_independence_across_colors():
    # empirical pairwise correlation of per-color membership indicators
    # stays within 4 sigma of zero across vertices (one draw per vertex)
    n, delta = 10_000, 40
    params = ParamSet.desk(n, delta, beta=8, eps=1 / 40)
    pal = sample_palettes(n, delta, params, seed=4)
    member = np.zeros((n, delta), dtype=np.int8)
    for v in range(n):
        for c in pal.l2[v]:
            member[v, c - 1] = 1
    p_hat = member.mean()
    for a, b in ((0, 1), (3, 17), (20, 39)):
        corr = np.corrcoef(member[:, a], member[:, b])[0, 1]
        assert abs(corr) <= 4 / np.sqrt(n), (a, b, corr)
    assert abs(p_hat - 8 / 40) < 0.02


def _tiny_palettes(n, delta, lists):
    """Hand-built palettes: every list per vertex equals lists[v]."""
    params = ParamSet.desk(n, delta)
    pal = sample_palettes(n, delta, params, seed=0)
    for v, colors in enumerate(lists):
        colors = frozenset(colors)
        pal.l2[v] = colors
        pal.l3[v] = colors
        pal.l4_star[v] = colors
        pal.l5[v] = colors
        pal.l4[v] = [colors] * params.beta
        pal.l6[v] = [colors] * (2 * params.beta)
        pal.l1[v] = min(colors)
        pal.masks[v] = 0
        for c in colors:
            pal.masks[v, (c - 1) // 64] |= np.uint64(1) << np.uint64((c - 1) % 64)
    return pal


def test_conflict_keep_basic():
    pal = _tiny_palettes(2, 10, [{1, 2}, {2, 9}])
    assert conflict_keep((0, 1), pal)
    pal2 = _tiny_palettes(2, 10, [{1, 2}, {3, 9}])
    assert not conflict_keep((0, 1), pal2)


def test_conflict_keep_beyond_one_mask_word():
    # colors past 64 live in the second mask word
    pal = _tiny_palettes(3, 100, [{70}, {70}, {1}])
    assert pal.masks.shape[1] == 2
    assert conflict_keep((0, 1), pal)
    assert not conflict_keep((0, 2), pal)
    assert not conflict_keep((1, 2), pal)


def test_possibly_monochromatic_edges_are_kept_exhaustively():
    # 5-vertex graph: for every assignment of colors from the vertices'
    # own lists, each edge that could go monochromatic is stored
    n, delta = 5, 4
    lists = [{1, 2}, {2, 3}, {3, 4}, {1, 4}, {2, 4}]
    pal = _tiny_palettes(n, delta, lists)
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    kept = {e for e in edges if conflict_keep(e, pal)}
    for assignment in itertools.product(*[sorted(s) for s in lists]):
        for u, v in edges:
            if assignment[u] == assignment[v]:
                assert (u, v) in kept


def test_conflict_graph_extremes():
    inst = generate_instance("clique-minus-edge", 3, count=1, seed=0)
    n = inst.n
    equal = _tiny_palettes(n, 3, [{1}] * n)
    h = build_conflict_graph(source_of(inst).open(), equal)
    assert h.m == inst.edges.shape[0]  # everything shared: H = G

    disjoint = _tiny_palettes(4, 8, [{1}, {2}, {3}, {4}])
    h2 = build_conflict_graph(source_of(inst).open(), disjoint)
    assert h2.m == 0


def test_h_subgraph_and_no_false_drops_exhaustive():
    # every stored edge is a real edge, and every real edge with
    # intersecting lists is stored; exhaustive on a 12-vertex instance
    inst = generate_instance("lonely-clique", 6, count=1, seed=9)
    params = ParamSet.desk(inst.n, 6)
    pal = sample_palettes(inst.n, 6, params, seed=9)
    h = build_conflict_graph(source_of(inst).open(), pal)
    oracle = oracle_from_edges(inst.n, inst.edges)
    for u in range(inst.n):
        for v in h.neighbors(u):
            assert oracle.has_edge(u, v)
    for u, v in inst.edges.tolist():
        if pal.union(u) & pal.union(v):
            assert v in h.neighbors(u)


def test_space_report_formula_exact():
    inst = generate_instance("clique-pairs", 8, count=1, seed=2)
    params = ParamSet.desk(inst.n, 8)
    pal = sample_palettes(inst.n, 8, params, seed=2)
    h = build_conflict_graph(source_of(inst).open(), pal)
    rep = palette_space_report(pal, h)
    log_delta = int(np.ceil(np.log2(8)))
    log_n = int(np.ceil(np.log2(inst.n)))
    want = pal.total_list_entries() * log_delta + h.m * 2 * log_n
    assert rep["bits"] == want
    assert rep["h_edges"] == h.m

    empty = ConflictGraph(4)
    rep0 = palette_space_report(_tiny_palettes(4, 4, [{1}] * 4), empty)
    assert rep0["h_edges"] == 0


def test_space_growth_under_doubling():
    # doubling n at fixed delta roughly doubles the stored bits
    delta = 12
    bits = []
    for n in (300, 600, 1200):
        inst = generate_instance("random-regular", delta, seed=5, n=n)
        params = ParamSet.desk(n, delta)
        pal = sample_palettes(n, delta, params, seed=5)
        h = build_conflict_graph(source_of(inst).open(), pal)
        bits.append(palette_space_report(pal, h)["bits"])
    for small, big in zip(bits, bits[1:]):
        assert 1.5 <= big / small <= 3.0
