"""Map-quality metrics: reachability-based precision/recall and geometry error.

The reachability comparison simulates travel outward from origins sampled on
the truth map: sample points ("marbles") are dropped along everything
reachable within a travel radius on each map, then greedily matched one to
one. Geometry error measures point-to-network distance from added roads to
the truth.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .graph import (
    Edge,
    GraphPosition,
    Point,
    RoadGraph,
    distances_from_position,
    edge_key,
    project_to_graph,
)
from .spatial import GridIndex


@dataclass(frozen=True)
class TopoParams:
    origin_spacing: float = 50.0
    match_radius: float = 15.0
    travel_radius: float = 300.0
    marble_spacing: float = 10.0
    max_origins: int = 1000
    seed: int = 0

    def __post_init__(self):
        if min(self.origin_spacing, self.match_radius, self.travel_radius, self.marble_spacing) <= 0:
            raise ValueError("all spacings and radii must be > 0")
        if self.marble_spacing >= self.travel_radius:
            raise ValueError("marble_spacing must be < travel_radius")
        if self.match_radius >= self.origin_spacing:
            raise ValueError("match_radius must be < origin_spacing")
        if self.max_origins < 1:
            raise ValueError("max_origins must be >= 1")


@dataclass(frozen=True)
class OriginOutcome:
    origin: Point
    matched: bool
    precision: float | None  # None when the origin had no counterpart
    recall: float


@dataclass(frozen=True)
class TopoResult:
    precision: float
    recall: float
    origins: tuple[OriginOutcome, ...]


def topo_compare(
    inferred: RoadGraph, truth: RoadGraph, params: TopoParams = TopoParams()
) -> TopoResult:
    """Average precision/recall of reachable sets over origins sampled on the truth map.

    Origins with no inferred position within ``match_radius`` contribute zero
    recall and no precision term. An empty inferred map scores (1.0, 0.0) by
    convention; an empty truth map is an error.
    """
    if truth.n_edges == 0:
        raise ValueError("truth graph has no edges")
    origins = _sample_positions(
        truth, params.origin_spacing, params.max_origins, params.seed
    )
    outcomes: list[OriginOutcome] = []
    for pos in origins:
        origin_pt = pos.point
        if inferred.n_edges == 0:
            outcomes.append(OriginOutcome(origin_pt, False, None, 0.0))
            continue
        matched_pos, dist = project_to_graph(origin_pt, inferred)
        if dist > params.match_radius:
            outcomes.append(OriginOutcome(origin_pt, False, None, 0.0))
            continue
        inferred_marbles = _reachable_marbles(
            inferred, matched_pos, params.travel_radius, params.marble_spacing
        )
        truth_marbles = _reachable_marbles(
            truth, pos, params.travel_radius, params.marble_spacing
        )
        matched = _greedy_match(inferred_marbles, truth_marbles, params.match_radius)
        outcomes.append(
            OriginOutcome(
                origin_pt,
                True,
                matched / len(inferred_marbles),
                matched / len(truth_marbles),
            )
        )
    matched_predictions = [o.precision for o in outcomes if o.precision is not None]
    precision = float(np.mean(matched_predictions)) if matched_predictions else 1.0
    recall = float(np.mean([o.recall for o in outcomes])) if outcomes else 0.0
    return TopoResult(precision, recall, tuple(outcomes))


def rge(
    added: RoadGraph, truth: RoadGraph, sample_spacing: float = 5.0
) -> tuple[float, float]:
    """(mean, max) distance from points sampled along added roads to the truth network.

    Each edge is sampled half-open from its lower-id endpoint every
    ``sample_spacing`` metres, so re-splitting an edge at sample boundaries
    preserves the sample set.
    """
    if sample_spacing <= 0:
        raise ValueError("sample_spacing must be > 0")
    if added.n_edges == 0:
        raise ValueError("added graph has no edges")
    if truth.n_edges == 0:
        raise ValueError("truth graph has no edges")
    dists: list[float] = []
    for e in added.edges:
        length = added.edge_lengths[e]
        s = 0.0
        while s < length:
            p = added.point_on_edge(e, s / length)
            _, d = project_to_graph(p, truth)
            dists.append(d)
            s += sample_spacing
    return float(np.mean(dists)), float(np.max(dists))


# -- internals ---------------------------------------------------------------


def _edge_walk(g: RoadGraph) -> tuple[list[tuple[Edge, float, float]], float]:
    """Edges in canonical order with cumulative start offsets, plus total length."""
    walk = []
    cum = 0.0
    for e in g.edges:
        length = g.edge_lengths[e]
        walk.append((e, length, cum))
        cum += length
    return walk, cum


def _sample_positions(
    g: RoadGraph, spacing: float, cap: int, seed: int
) -> list[GraphPosition]:
    """Stratified positions along the whole network, jittered by a seeded RNG."""
    walk, total = _edge_walk(g)
    n = max(1, min(cap, int(total / spacing)))
    rng = np.random.default_rng(seed)
    stride = total / n
    offsets = (np.arange(n) + rng.random(n)) * stride
    positions = []
    idx = 0
    for target in offsets:  # offsets are increasing; walk is too
        while idx + 1 < len(walk) and walk[idx + 1][2] <= target:
            idx += 1
        e, length, cum = walk[idx]
        t = min(max((target - cum) / length, 0.0), 1.0)
        positions.append(GraphPosition(e, t, g.point_on_edge(e, t)))
    return positions


def _reachable_marbles(
    g: RoadGraph, start: GraphPosition, travel_radius: float, spacing: float
) -> list[Point]:
    """Sample points along every edge interval reachable within ``travel_radius``."""
    dist = distances_from_position(g, start, travel_radius)
    intervals: dict[Edge, list[tuple[float, float]]] = {}

    def add_interval(e: Edge, lo: float, hi: float) -> None:
        if hi > lo:
            intervals.setdefault(e, []).append((lo, hi))

    seen_edges: set[Edge] = {start.edge}
    for v in dist:
        for n in g.adjacency[v]:
            seen_edges.add(edge_key(v, n))
    for e in seen_edges:
        length = g.edge_lengths[e]
        da = dist.get(e[0])
        db = dist.get(e[1])
        if da is not None:
            add_interval(e, 0.0, min(length, travel_radius - da))
        if db is not None:
            add_interval(e, max(0.0, length - (travel_radius - db)), length)
        if e == start.edge:
            s0 = start.t * length
            add_interval(e, max(0.0, s0 - travel_radius), min(length, s0 + travel_radius))

    # Sample by cumulative arc across all reachable intervals so marble
    # density is independent of how either graph happens to split its edges.
    marbles: list[Point] = []
    carry = 0.0  # arc left until the next marble
    for e in sorted(intervals):
        length = g.edge_lengths[e]
        for lo, hi in _merge_intervals(intervals[e]):
            s = lo + carry
            while s <= hi + 1e-9:
                marbles.append(g.point_on_edge(e, min(s, length) / length))
                s += spacing
            carry = s - hi
    return marbles


def _merge_intervals(spans: list[tuple[float, float]]) -> list[tuple[float, float]]:
    spans = sorted(spans)
    merged = [spans[0]]
    for lo, hi in spans[1:]:
        if lo <= merged[-1][1] + 1e-9:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return merged


def _greedy_match(a: list[Point], b: list[Point], radius: float) -> int:
    """One-to-one greedy matching by ascending distance; returns the match count."""
    index = GridIndex(radius)
    for j, q in enumerate(b):
        index.add_point(j, q.x, q.y)
    pairs: list[tuple[float, int, int]] = []
    r2 = radius * radius
    for i, p in enumerate(a):
        for j in index.near(p.x, p.y, radius):
            q = b[j]
            d2 = (p.x - q.x) ** 2 + (p.y - q.y) ** 2
            if d2 <= r2:
                pairs.append((d2, i, j))
    pairs.sort()
    used_a: set[int] = set()
    used_b: set[int] = set()
    matched = 0
    for _, i, j in pairs:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matched += 1
    return matched
