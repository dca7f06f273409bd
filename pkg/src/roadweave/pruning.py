"""Major-road retention: cluster the network, route between far-apart centres,
keep the trimmed middles of those routes. Betweenness centrality is kept as a
diagnostic baseline.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass

from .graph import Edge, Point, RoadGraph, edge_key


@dataclass(frozen=True)
class PruneParams:
    cell_size: float = 1000.0  # clustering grid pitch, metres
    min_cell_vertices: int = 10
    min_separation: float = 5000.0  # centre pairs closer than this are ignored
    trim: float = 500.0  # cut from each end of every route

    def __post_init__(self):
        if self.cell_size <= 0 or self.min_separation <= 0:
            raise ValueError("cell_size and min_separation must be > 0")
        if self.trim < 0:
            raise ValueError("trim must be >= 0")
        if self.min_cell_vertices < 1:
            raise ValueError("min_cell_vertices must be >= 1")


@dataclass(frozen=True)
class ClusterCenters:
    """Cluster centres snapped to graph vertices so they can be routed from."""

    vertex_ids: tuple[int, ...]

    def points(self, g: RoadGraph) -> list[Point]:
        return [g.vertices[v] for v in self.vertex_ids]


def grid_cluster(g: RoadGraph, params: PruneParams = PruneParams()) -> ClusterCenters:
    """One centre per grid cell holding at least ``min_cell_vertices`` vertices.

    The grid is aligned to the local frame origin. Each surviving cell's centre
    is the mean vertex position, snapped to the nearest graph vertex.
    """
    cells: dict[tuple[int, int], list[int]] = {}
    for vid in sorted(g.vertices):
        p = g.vertices[vid]
        key = (math.floor(p.x / params.cell_size), math.floor(p.y / params.cell_size))
        cells.setdefault(key, []).append(vid)
    centers: list[int] = []
    for key in sorted(cells):
        vids = cells[key]
        if len(vids) < params.min_cell_vertices:
            continue
        mx = sum(g.vertices[v].x for v in vids) / len(vids)
        my = sum(g.vertices[v].y for v in vids) / len(vids)
        snapped = min(
            g.vertices,
            key=lambda v: ((g.vertices[v].x - mx) ** 2 + (g.vertices[v].y - my) ** 2, v),
        )
        if snapped not in centers:
            centers.append(snapped)
    return ClusterCenters(tuple(centers))


def prune_major(
    g: RoadGraph, centers: ClusterCenters, params: PruneParams = PruneParams()
) -> RoadGraph:
    """Subgraph of edges on the trimmed middles of centre-to-centre routes.

    Every unordered centre pair at straight-line separation >= min_separation
    contributes its shortest path; edges whose span along the path lies inside
    [trim, length - trim] are retained. Warns and returns an empty graph when
    no pair qualifies.
    """
    ids = centers.vertex_ids
    pairs = []
    for i in range(len(ids)):
        for j in range(i + 1, len(ids)):
            pa, pb = g.vertices[ids[i]], g.vertices[ids[j]]
            if math.hypot(pb.x - pa.x, pb.y - pa.y) >= params.min_separation:
                pairs.append((ids[i], ids[j]))
    if not pairs:
        warnings.warn(
            "no cluster-centre pair is separated by the minimum radius; "
            "nothing retained",
            stacklevel=2,
        )
        return RoadGraph({}, [], g.frame)

    # one tree per participating centre (not per pair): pairs share sources,
    # which keeps runtime linear in network length at fixed centre density
    sources = sorted({v for pair in pairs for v in pair})
    trees = {s: shortest_path_tree(g, s) for s in sources}
    retained: set[Edge] = set()
    slack = 1e-9
    for a, b in pairs:
        dist, pred = trees[a]
        if b not in dist:
            continue  # disconnected pair
        path = [b]
        while pred[path[-1]] is not None:
            path.append(pred[path[-1]])
        path.reverse()
        total = dist[b]
        lo = params.trim - slack
        hi = total - params.trim + slack
        cum = 0.0
        for u, v in zip(path, path[1:]):
            span = cum + g.edge_lengths[edge_key(u, v)]
            if cum >= lo and span <= hi:
                retained.add(edge_key(u, v))
            cum = span
    vertices = {v: g.vertices[v] for e in retained for v in e}
    return RoadGraph(vertices, retained, g.frame)


def shortest_path_tree(
    g: RoadGraph, source: int
) -> tuple[dict[int, float], dict[int, int | None]]:
    """Dijkstra distances and predecessors from ``source`` over edge lengths.

    Equal-length alternatives resolve to the lowest-id predecessor, so paths
    are unique and reproducible.
    """
    dist: dict[int, float] = {source: 0.0}
    pred: dict[int, int | None] = {source: None}
    heap: list[tuple[float, int]] = [(0.0, source)]
    settled: set[int] = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        for n in g.adjacency[u]:
            nd = d + g.edge_lengths[edge_key(u, n)]
            if n not in dist or nd < dist[n]:
                dist[n] = nd
                pred[n] = u
                heapq.heappush(heap, (nd, n))
            elif nd == dist[n] and pred[n] is not None and u < pred[n]:
                pred[n] = u
    return dist, pred


def betweenness(g: RoadGraph) -> dict[Edge, int]:
    """Exact edge betweenness: ordered vertex pairs whose shortest path uses the edge.

    Each pair contributes via the unique deterministic path from
    :func:`shortest_path_tree`. Quadratic in the vertex count -- intended as a
    baseline and for diagnostics, not for production pruning.
    """
    counts: dict[Edge, int] = {e: 0 for e in g.edges}
    order = sorted(g.vertices)
    for s in order:
        dist, pred = shortest_path_tree(g, s)
        for t in order:
            if t == s or t not in dist:
                continue
            w = t
            while pred[w] is not None:
                counts[edge_key(w, pred[w])] += 1
                w = pred[w]
    return counts
