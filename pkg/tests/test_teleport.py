import numpy as np
import pytest

from roadweave.graph import RoadGraph, edge_key
from roadweave.teleport import BBOX_PADDING, TeleportCursor, score_components


def _component_cloud(rng, n_comps, base_vertex_ids=()):
    """Random disjoint components plus a base graph sharing some vertex ids."""
    verts = {}
    edges = []
    vid = 0
    for c in range(n_comps):
        ox, oy = rng.uniform(0, 50000, size=2)
        k = int(rng.integers(3, 9))
        first = vid
        for i in range(k):
            verts[vid] = (float(ox + rng.uniform(0, 800)), float(oy + rng.uniform(0, 800)))
            if vid > first:
                edges.append((vid - 1, vid))
            vid += 1
    g = RoadGraph(verts, edges)
    base_verts = {v: verts[v] for v in base_vertex_ids if v in verts}
    base_verts[10_000] = (99999.0, 99999.0)
    base = RoadGraph(base_verts, [])
    return g, base


def test_score_arithmetic_orders_components():
    # A: bigger hull and more connections; B smaller on both counts
    verts = {
        0: (0, 0), 1: (2000, 0), 2: (0, 1000),        # A: hull 1e6 m^2
        10: (9000, 9000), 11: (10000, 9000), 12: (9000, 9500),  # B: 0.25e6 m^2
    }
    g = RoadGraph(verts, [(0, 1), (0, 2), (10, 11), (10, 12)])
    base = RoadGraph({0: (0, 0), 1: (2000, 0), 2: (0, 1000), 10: (9000, 9000)}, [])
    ranked = score_components(g, base, weight=1e6)
    assert [min(r.graph.vertices) for r in ranked] == [0, 10]
    assert ranked[0].connections == 3
    assert ranked[1].connections == 1
    assert ranked[0].score == pytest.approx(1e6 + 3e6)
    assert ranked[1].score == pytest.approx(0.25e6 + 1e6)


def test_weight_zero_orders_by_area_alone():
    verts = {
        0: (0, 0), 1: (100, 0), 2: (0, 100),
        10: (5000, 5000), 11: (7000, 5000), 12: (5000, 7000),
    }
    g = RoadGraph(verts, [(0, 1), (0, 2), (10, 11), (10, 12)])
    base = RoadGraph({0: (0, 0), 1: (100, 0), 2: (0, 100)}, [])
    ranked = score_components(g, base, weight=0.0)
    assert min(ranked[0].graph.vertices) == 10  # larger hull first despite no links


def test_random_components_match_brute_force_sort():
    rng = np.random.default_rng(4)
    g, base = _component_cloud(rng, 20, base_vertex_ids=range(0, 120, 7))
    ranked = score_components(g, base, weight=1e6)
    assert len(ranked) == 20

    from roadweave.graph import connected_components, convex_hull_area

    expected = []
    for comp in connected_components(g):
        area = convex_hull_area(comp)
        conn = len(set(comp.vertices) & set(base.vertices))
        expected.append((-(area + 1e6 * conn), min(comp.vertices)))
    expected.sort()
    got = [(-r.score, min(r.graph.vertices)) for r in ranked]
    assert [e[1] for e in expected] == [g_[1] for g_ in got]


def test_weight_scaling_preserves_order_at_equal_connections():
    verts = {
        0: (0, 0), 1: (3000, 0), 2: (0, 3000),
        10: (50000, 50000), 11: (51000, 50000), 12: (50000, 51000),
    }
    g = RoadGraph(verts, [(0, 1), (0, 2), (10, 11), (10, 12)])
    base = RoadGraph({}, [])
    order1 = [min(r.graph.vertices) for r in score_components(g, base, weight=1.0)]
    order2 = [min(r.graph.vertices) for r in score_components(g, base, weight=1e9)]
    assert order1 == order2 == [0, 10]


def test_bbox_padding():
    g = RoadGraph({0: (100, 100), 1: (200, 100)}, [(0, 1)])
    ranked = score_components(g, RoadGraph({}, []), weight=1e6)
    lo, hi = ranked[0].bbox
    assert lo == (100 - BBOX_PADDING, 100 - BBOX_PADDING)
    assert hi == (200 + BBOX_PADDING, 100 + BBOX_PADDING)


def test_cursor_visits_each_component_exactly_once():
    rng = np.random.default_rng(8)
    g, base = _component_cloud(rng, 6)
    ranked = score_components(g, base, weight=1e6)
    cursor = TeleportCursor(ranked)
    seen = []
    while True:
        comp = cursor.next_component()
        if comp is None:
            break
        seen.append(comp)
    assert seen == ranked
    assert cursor.next_component() is None  # stays exhausted


def test_cursor_empty_list_exhausted_immediately():
    assert TeleportCursor([]).next_component() is None


def test_negative_weight_rejected():
    g = RoadGraph({0: (0, 0), 1: (1, 0)}, [(0, 1)])
    with pytest.raises(ValueError):
        score_components(g, RoadGraph({}, []), weight=-1.0)


def test_empty_inferred_graph_gives_empty_ranking():
    assert score_components(RoadGraph({}, []), RoadGraph({}, []), weight=1e6) == []
