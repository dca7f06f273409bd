import math

import numpy as np
import pytest

from roadweave.field import DirectionField, FieldGrid, bucketize, extract_peaks, rasterize_truth, zero_field
from roadweave.graph import Point, RoadGraph, densify, edge_key, project_to_graph
from roadweave.metrics import TopoParams, topo_compare
from roadweave.search import (
    EXTENDED,
    MERGED,
    POPPED,
    TERMINATED,
    SearchParams,
    extract_inferred,
    init_from_basemap,
    init_from_seeds,
    mask_directions,
    run,
    step,
)

from geofixtures import field_grid_for, square_loop, straight_road


def _uniform_field(grid: FieldGrid, bucket_values: dict[int, float]) -> DirectionField:
    values = np.zeros((grid.width, grid.height, grid.buckets), np.float32)
    for k, val in bucket_values.items():
        values[:, :, k] = val
    return DirectionField(grid, values)


BIG = FieldGrid(60, 60, 64, 2.0, Point(-60.0, -60.0))


# -- params -----------------------------------------------------------------


def test_params_validation():
    with pytest.raises(ValueError):
        SearchParams(threshold=0.0)
    with pytest.raises(ValueError):
        SearchParams(threshold=1.0)
    with pytest.raises(ValueError):
        SearchParams(step_dist=-1.0)
    with pytest.raises(ValueError):
        SearchParams(merge_radius=0.0)
    assert SearchParams(step_dist=10.0).resolved_merge_radius() == 20.0


def test_mask_halfwidth_must_fit_buckets():
    with pytest.raises(ValueError, match="halfwidth"):
        init_from_seeds(
            zero_field(FieldGrid(4, 4, 8)), [Point(0, 0)], SearchParams(mask_halfwidth=5)
        )


# -- init -------------------------------------------------------------------


def test_init_from_seeds_counts():
    f = zero_field(BIG)
    st = init_from_seeds(f, [Point(0, 0)], SearchParams())
    assert len(st.vertices) == 1
    assert len(st.stack) == 1

    st = init_from_seeds(f, [Point(0, 0), Point(30, 0), Point(0, 30)], SearchParams())
    assert len(st.vertices) == 3
    assert len(st.stack) == 3


def test_init_from_seeds_empty_errors():
    with pytest.raises(ValueError):
        init_from_seeds(zero_field(BIG), [], SearchParams())


def test_init_from_seeds_orders_by_field_response():
    grid = FieldGrid(30, 30, 64, 2.0, Point(0, 0))
    values = np.zeros((30, 30, 64), np.float32)
    values[5, 5, 0] = 0.3
    values[20, 20, 0] = 0.9
    f = DirectionField(grid, values)
    st = init_from_seeds(f, [grid.center(5, 5), grid.center(20, 20)], SearchParams())
    assert st.vertices[st.stack[-1]] == grid.center(20, 20)  # strongest first


def test_oracle_seeds_lie_near_roads(oracle_graph, oracle_field):
    peaks = extract_peaks(oracle_field, 0.5, 90.0)
    st = init_from_seeds(oracle_field, peaks, SearchParams(threshold=0.5))
    for vid in st.stack:
        assert project_to_graph(st.vertices[vid], oracle_graph)[1] <= 20.0


def test_init_from_basemap_densifies():
    g0 = RoadGraph({0: (0, 0), 1: (25, 0)}, [(0, 1)])
    f = zero_field(BIG)
    st = init_from_basemap(f, g0, SearchParams(step_dist=12.0))
    assert len(st.vertices) == 4
    assert len(st.edges) == 3
    assert len(st.stack) == 4
    assert st.base_edges == frozenset(densify(g0, 12.0).edges)


def test_init_from_basemap_empty_errors():
    with pytest.raises(ValueError):
        init_from_basemap(zero_field(BIG), RoadGraph({}, []), SearchParams())


def test_all_zero_field_leaves_basemap_untouched():
    g0 = RoadGraph({0: (0, 0), 1: (25, 0), 2: (25, 30)}, [(0, 1), (1, 2)])
    st = init_from_basemap(zero_field(BIG), g0, SearchParams(step_dist=12.0))
    out = run(st)
    assert out == densify(g0, 12.0)


# -- masking ------------------------------------------------------------------


def test_mask_no_neighbours_is_identity():
    grid = FieldGrid(10, 10, 64, 2.0, Point(-10, -10))
    values = np.zeros((10, 10, 64), np.float32)
    values[:, :, 7] = 0.8
    f = DirectionField(grid, values)
    st = init_from_seeds(f, [Point(0, 0)], SearchParams())
    masked = mask_directions(st)
    assert np.array_equal(masked, f.value_at(Point(0, 0)))


def test_mask_zeroes_halfwidth_around_incident_edge():
    grid = FieldGrid(30, 30, 64, 2.0, Point(-30, -30))
    values = np.ones((30, 30, 64), np.float32)
    f = DirectionField(grid, values)
    st = init_from_seeds(f, [Point(0, 0)], SearchParams())
    v = st.stack[-1]
    # incident edge whose angle falls in bucket 10
    angle = (10 + 0.5) * 2 * math.pi / 64
    w = st.add_vertex(Point(20 * math.cos(angle), 20 * math.sin(angle)))
    st.add_edge(v, w)
    masked = mask_directions(st)
    zeroed = {k for k in range(64) if masked[k] == 0.0}
    assert zeroed == {k % 64 for k in range(5, 16)}  # buckets 5..15


def test_mask_covers_hop_neighbours_not_just_incident():
    # a neighbour chain bends north: the northern bucket is masked at the tail
    # even though no incident edge points north
    grid = FieldGrid(40, 40, 64, 2.0, Point(-40, -40))
    f = DirectionField(grid, np.ones((40, 40, 64), np.float32))
    st = init_from_seeds(f, [Point(0, 0)], SearchParams())
    tail = st.stack[-1]
    mid = st.add_vertex(Point(12, 0))
    top = st.add_vertex(Point(12, 12))  # north of mid, north-east of tail
    st.add_edge(tail, mid)
    st.add_edge(mid, top)
    masked = mask_directions(st)
    northeast = bucketize([math.atan2(12, 12)], 64).argmax()
    assert masked[northeast] == 0.0
    assert masked[32] != 0.0  # west stays open


# -- step ------------------------------------------------------------------------


def test_step_extends_in_bucket_direction():
    grid = FieldGrid(30, 30, 64, 2.0, Point(-30, -30))
    f = _uniform_field(grid, {0: 0.9})
    st = init_from_seeds(f, [Point(0, 0)], SearchParams(threshold=0.4))
    ev = step(st)
    assert ev.kind == EXTENDED
    p = st.vertices[ev.vertex]
    # bucket 0 centre is just off due east
    assert p.x == pytest.approx(12.0, abs=0.6)
    assert p.y == pytest.approx(0.0, abs=0.6)
    assert math.hypot(p.x, p.y) == pytest.approx(12.0, abs=1e-9)


def test_step_pops_below_threshold():
    grid = FieldGrid(30, 30, 64, 2.0, Point(-30, -30))
    f = _uniform_field(grid, {k: 0.3 for k in range(64)})
    st = init_from_seeds(f, [Point(0, 0)], SearchParams(threshold=0.4))
    ev = step(st)
    assert ev.kind == POPPED
    assert not st.stack


def test_step_merges_into_perpendicular_explored_road():
    # an explored vertical road ahead of an eastward-growing chain
    grid = FieldGrid(60, 60, 64, 2.0, Point(-30.0, -58.0))
    f = _uniform_field(grid, {0: 0.9})
    st = init_from_seeds(f, [Point(0, 0)], SearchParams(threshold=0.4))
    # existing foreign chain: vertical road at x = 30, outside the seed's
    # merge radius but inside the first extension's
    prev = None
    for y in range(-48, 12, 12):
        w = st.add_vertex(Point(30.0, float(y)))
        if prev is not None:
            st.add_edge(prev, w)
        prev = w
    ev = step(st)  # extend east to ~(12, 0.6)
    assert ev.kind == EXTENDED
    ev = step(st)  # now within 2D of the vertical chain, far in hops
    assert ev.kind == MERGED
    u, v = ev.edge
    length = math.hypot(
        st.vertices[u].x - st.vertices[v].x, st.vertices[u].y - st.vertices[v].y
    )
    assert length <= st.merge_radius + 1e-9


def test_step_terminates_on_empty_stack():
    st = init_from_seeds(zero_field(BIG), [Point(0, 0)], SearchParams())
    assert step(st).kind == POPPED
    assert step(st).kind == TERMINATED


def test_step_cap_reports(recwarn):
    grid = FieldGrid(200, 10, 64, 2.0, Point(0, -10))
    f = _uniform_field(grid, {0: 0.9})
    st = init_from_seeds(f, [Point(2, 0)], SearchParams(threshold=0.4, max_steps=5))
    run(st)
    assert st.hit_step_cap
    assert any("step cap" in str(w.message) for w in recwarn.list)


# -- run on synthetic truth fields ------------------------------------------------


def test_run_all_zero_field_pops_each_seed():
    f = zero_field(BIG)
    seeds = [Point(0, 0), Point(40, 0), Point(0, 40)]
    st = init_from_seeds(f, seeds, SearchParams())
    events = []
    while True:
        ev = step(st)
        if ev.kind == TERMINATED:
            break
        events.append(ev.kind)
    assert events == [POPPED] * len(seeds)
    out = st.to_graph()
    assert out.n_vertices == len(seeds)
    assert out.n_edges == 0


def test_run_traces_straight_road_to_far_end():
    g = straight_road(120.0)
    grid = field_grid_for(g)
    f = rasterize_truth(g, grid, 12.0, 20.0)
    peaks = extract_peaks(f, 0.5, 200.0)
    st = init_from_seeds(f, peaks, SearchParams(threshold=0.5))
    out = run(st)
    assert 9 <= out.n_edges <= 12
    # reaches both endpoints within one step distance
    xs = [p.x for p in out.vertices.values()]
    assert min(xs) <= 12.0 and max(xs) >= 108.0
    res = topo_compare(out, g, TopoParams(max_origins=50))
    assert res.precision >= 0.95 and res.recall >= 0.95


def test_run_closes_loop_via_merge_without_duplicates():
    g = square_loop(200.0)
    grid = field_grid_for(g)
    f = rasterize_truth(g, grid, 12.0, 20.0)
    peaks = extract_peaks(f, 0.5, 1000.0)
    st = init_from_seeds(f, peaks[:1], SearchParams(threshold=0.5))
    merges = 0
    extension_edges = []
    while True:
        ev = step(st)
        if ev.kind == TERMINATED:
            break
        if ev.kind == MERGED:
            merges += 1
        if ev.kind == EXTENDED:
            extension_edges.append(ev.edge)
    out = st.to_graph()
    assert merges >= 1
    assert out.n_edges >= out.n_vertices  # contains a cycle
    # no duplicated parallel runs: total length close to the true perimeter
    assert out.total_length() <= 1.1 * g.total_length()
    for e in extension_edges:
        assert out.edge_lengths[e] == pytest.approx(12.0, abs=1e-6)


def test_extension_edges_have_exact_step_length(oracle_field):
    peaks = extract_peaks(oracle_field, 0.5, 90.0)
    st = init_from_seeds(oracle_field, peaks, SearchParams(threshold=0.5))
    while True:
        ev = step(st)
        if ev.kind == TERMINATED:
            break
        if ev.kind == EXTENDED:
            u, v = ev.edge
            d = math.hypot(
                st.vertices[u].x - st.vertices[v].x, st.vertices[u].y - st.vertices[v].y
            )
            assert d == pytest.approx(12.0, abs=1e-6)
        elif ev.kind == MERGED:
            u, v = ev.edge
            d = math.hypot(
                st.vertices[u].x - st.vertices[v].x, st.vertices[u].y - st.vertices[v].y
            )
            assert d <= st.merge_radius + 1e-9


# -- extraction ---------------------------------------------------------------------


def test_extract_inferred_identity_base():
    g0 = RoadGraph({0: (0, 0), 1: (25, 0)}, [(0, 1)])
    dense = densify(g0, 12.0)
    out = extract_inferred(dense, dense.edges)
    assert out.n_edges == 0
    assert out.n_vertices == 0


def test_extract_inferred_keeps_branch_with_shared_root():
    # base chain 0-1-2 plus a hand-built branch of three edges rooted at 1
    verts = {0: (0, 0), 1: (10, 0), 2: (20, 0), 3: (10, 10), 4: (10, 20), 5: (10, 30)}
    base_edges = [(0, 1), (1, 2)]
    branch = [(1, 3), (3, 4), (4, 5)]
    merged = RoadGraph(verts, base_edges + branch)
    out = extract_inferred(merged, base_edges)
    assert sorted(out.edges) == sorted(edge_key(u, v) for u, v in branch)
    assert 1 in out.vertices  # shared junction vertex retained
    assert 0 not in out.vertices and 2 not in out.vertices


def test_extract_inferred_edge_count_difference():
    verts = {0: (0, 0), 1: (10, 0), 2: (10, 12), 3: (20, 0)}
    merged = RoadGraph(verts, [(0, 1), (1, 2), (1, 3)])
    out = extract_inferred(merged, [(0, 1)])
    assert out.n_edges == merged.n_edges - 1


def test_extract_inferred_requires_subset():
    merged = RoadGraph({0: (0, 0), 1: (10, 0)}, [(0, 1)])
    with pytest.raises(ValueError):
        extract_inferred(merged, [(0, 2)])
