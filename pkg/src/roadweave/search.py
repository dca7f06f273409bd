"""Iterative graph construction: follow a direction field one fixed step at a time.

The search keeps a vertex stack. Each step looks up the field at the top
vertex, masks out directions already explained by nearby graph structure,
and either extends with a fixed-length edge, merges into an existing vertex,
or pops. Seeds come from field peaks or from a densified base map.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .field import TAU, DirectionField, bucket_center, bucket_of
from .graph import Edge, Frame, Point, RoadGraph, densify, edge_key
from .spatial import GridIndex

EXTENDED = "extended"
MERGED = "merged"
POPPED = "popped"
TERMINATED = "terminated"


@dataclass(frozen=True)
class SearchParams:
    step_dist: float = 12.0
    threshold: float = 0.4
    mask_halfwidth: int = 5
    merge_radius: float | None = None  # defaults to 2 * step_dist
    hop_exclusion: int = 5
    max_steps: int | None = None  # defaults to a budget linear in field size
    seed_dedup_radius: float | None = None  # defaults to 0.6 * step_dist
    merge_turn_limit: float | None = math.pi / 4  # max angle off a tip's heading; None = any

    def __post_init__(self):
        if self.step_dist <= 0:
            raise ValueError("step_dist must be > 0")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must be in (0, 1)")
        if self.mask_halfwidth < 0 or self.hop_exclusion < 0:
            raise ValueError("mask_halfwidth and hop_exclusion must be >= 0")
        if self.merge_radius is not None and self.merge_radius <= 0:
            raise ValueError("merge_radius must be > 0")
        if self.max_steps is not None and self.max_steps <= 0:
            raise ValueError("max_steps must be > 0")
        if self.seed_dedup_radius is not None and self.seed_dedup_radius < 0:
            raise ValueError("seed_dedup_radius must be >= 0")

    def resolved_merge_radius(self) -> float:
        return self.merge_radius if self.merge_radius is not None else 2.0 * self.step_dist

    def resolved_seed_dedup_radius(self) -> float:
        if self.seed_dedup_radius is not None:
            return self.seed_dedup_radius
        return 0.6 * self.step_dist


@dataclass(frozen=True)
class StepEvent:
    kind: str  # extended | merged | popped | terminated
    vertex: int | None = None
    edge: Edge | None = None


class SearchState:
    """Single-owner mutable state of one search run."""

    def __init__(
        self,
        field: DirectionField,
        params: SearchParams,
        frame: Frame = Frame(0.0, 0.0),
    ):
        if params.mask_halfwidth >= field.grid.buckets // 2:
            raise ValueError("mask_halfwidth must be < half the bucket count")
        self.field = field
        self.params = params
        self.frame = frame
        self.vertices: dict[int, Point] = {}
        self.adjacency: dict[int, set[int]] = {}
        self.edges: set[Edge] = set()
        self.parent: dict[int, int | None] = {}  # vertex each tip grew from
        self.stack: list[int] = []
        self.base_edges: frozenset[Edge] = frozenset()
        self.steps_taken = 0
        self.hit_step_cap = False
        self.merge_radius = params.resolved_merge_radius()
        if params.max_steps is not None:
            self.max_steps = params.max_steps
        else:
            grid = field.grid
            budget = 4.0 * grid.width * grid.height * grid.cell_size / params.step_dist
            self.max_steps = int(math.ceil(budget))
        self._bins = GridIndex(self.merge_radius)
        self._next_id = 0

    # -- construction helpers -------------------------------------------

    def add_vertex(self, p: Point, parent: int | None = None) -> int:
        vid = self._next_id
        self._next_id += 1
        self.vertices[vid] = p
        self.adjacency[vid] = set()
        self.parent[vid] = parent
        self._bins.add_point(vid, p.x, p.y)
        return vid

    def add_edge(self, u: int, v: int) -> Edge:
        e = edge_key(u, v)
        assert u != v, "self-loop"
        assert e not in self.edges, f"duplicate edge {e}"
        self.edges.add(e)
        self.adjacency[u].add(v)
        self.adjacency[v].add(u)
        return e

    def to_graph(self) -> RoadGraph:
        return RoadGraph(self.vertices, self.edges, self.frame)

    def within_hops(self, v: int, hops: int) -> set[int]:
        """Vertices reachable from ``v`` in at most ``hops`` edges, excluding ``v``."""
        frontier = {v}
        seen = {v}
        for _ in range(hops):
            nxt: set[int] = set()
            for w in frontier:
                for n in self.adjacency[w]:
                    if n not in seen:
                        seen.add(n)
                        nxt.add(n)
            if not nxt:
                break
            frontier = nxt
        seen.discard(v)
        return seen


def init_from_seeds(
    field: DirectionField,
    seeds: list[Point] | set[Point],
    params: SearchParams = SearchParams(),
    frame: Frame = Frame(0.0, 0.0),
) -> SearchState:
    """Start a search from bare seed points (typically field peaks).

    Seeds become isolated vertices; the stack is ordered so the seed with the
    strongest field response is explored first (ties by coordinates).
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    state = SearchState(field, params, frame)
    ordered = sorted(
        seeds, key=lambda p: (-float(field.value_at(p).max()), p.x, p.y)
    )
    ids = [state.add_vertex(p) for p in ordered]
    state.stack = list(reversed(ids))
    return state


def init_from_basemap(
    field: DirectionField,
    base: RoadGraph,
    params: SearchParams = SearchParams(),
) -> SearchState:
    """Start from an existing map: graph = densified base, all vertices stacked.

    The densified base edges are recorded so the purely inferred part can be
    split off afterwards with :func:`extract_inferred`.
    """
    if base.n_vertices == 0:
        raise ValueError("base map is empty")
    dense = densify(base, params.step_dist)
    state = SearchState(field, params, base.frame)
    for vid in sorted(dense.vertices):
        p = dense.vertices[vid]
        state.vertices[vid] = p
        state.adjacency[vid] = set()
        state._bins.add_point(vid, p.x, p.y)
    state._next_id = max(dense.vertices) + 1
    for u, v in dense.edges:
        state.add_edge(u, v)
    state.base_edges = frozenset(dense.edges)
    state.stack = sorted(dense.vertices, reverse=True)  # lowest id on top
    return state


def mask_directions(state: SearchState) -> np.ndarray:
    """Field vector at the stack top with already-explored directions zeroed.

    Buckets within ``mask_halfwidth`` of the angle toward any vertex within
    ``hop_exclusion`` hops (which covers all incident edges) are cleared.
    Positions outside the field read as all-zero.
    """
    if not state.stack:
        raise ValueError("stack is empty")
    v = state.stack[-1]
    p = state.vertices[v]
    vec = state.field.value_at(p).copy()
    buckets = state.field.grid.buckets
    hw = state.params.mask_halfwidth
    offsets = np.arange(-hw, hw + 1)
    for w in state.within_hops(v, state.params.hop_exclusion):
        q = state.vertices[w]
        if q.x == p.x and q.y == p.y:
            continue
        a = math.atan2(q.y - p.y, q.x - p.x) % TAU
        k = bucket_of(a, buckets)
        vec[(k + offsets) % buckets] = 0.0
    return vec


def step(state: SearchState) -> StepEvent:
    """Advance the search by one decision; see module docstring for the cases."""
    if not state.stack:
        return StepEvent(TERMINATED)
    if state.steps_taken >= state.max_steps:
        state.hit_step_cap = True
        return StepEvent(TERMINATED)
    state.steps_taken += 1

    v = state.stack[-1]
    if not state.adjacency[v] and _near_existing(state, v):
        # an isolated seed sitting on already-traced road duplicates it; drop
        state.stack.pop()
        return StepEvent(POPPED, vertex=v)

    target = _merge_target(state, v)
    if target is not None:
        # Join the current path to a road traced earlier. The tip stays on
        # the stack: the new edge pulls that road into the tip's hop
        # neighbourhood, so masking now explains its directions and a
        # through-road keeps tracing past the junction instead of stalling.
        merge_edge = state.add_edge(v, target)
        return StepEvent(MERGED, vertex=v, edge=merge_edge)

    masked = mask_directions(state)
    best = float(masked.max())
    if best < state.params.threshold:
        state.stack.pop()
        return StepEvent(POPPED, vertex=v)

    a_best = int(masked.argmax())  # argmax takes the lowest index on ties
    angle = bucket_center(a_best, state.field.grid.buckets)
    p = state.vertices[v]
    step_dist = state.params.step_dist
    new_point = Point(p.x + step_dist * math.cos(angle), p.y + step_dist * math.sin(angle))
    n = state.add_vertex(new_point, parent=v)
    grown = state.add_edge(v, n)
    state.stack.append(n)
    return StepEvent(EXTENDED, vertex=n, edge=grown)


def _near_existing(state: SearchState, v: int) -> bool:
    radius = state.params.resolved_seed_dedup_radius()
    if radius <= 0:
        return False
    p = state.vertices[v]
    for w in state._bins.near(p.x, p.y, radius):
        if w == v:
            continue
        q = state.vertices[w]
        if math.hypot(q.x - p.x, q.y - p.y) <= radius:
            return True
    return False


def _merge_target(state: SearchState, v: int) -> int | None:
    """Merge partner for the stack top: the nearest vertex within merge_radius
    that is not a near hop-neighbour.

    For a tip that grew out of a parent vertex, candidates more than
    merge_turn_limit off the tip's heading are ignored: joining roughly along
    the direction of travel keeps the traced path monotone, instead of
    hanging detour chords onto whatever chain drifts into range first near
    compound junctions. Vertices without a heading (seeds, base-map
    vertices) merge toward any direction.
    """
    p = state.vertices[v]
    excluded = state.within_hops(v, state.params.hop_exclusion)
    excluded.add(v)
    min_cos = None
    parent = state.parent.get(v)
    if parent is not None and state.params.merge_turn_limit is not None:
        pp = state.vertices[parent]
        hx, hy = p.x - pp.x, p.y - pp.y
        norm = math.hypot(hx, hy)
        if norm > 0:
            min_cos = (hx / norm, hy / norm, math.cos(state.params.merge_turn_limit))
    best: tuple[float, int] | None = None
    for w in state._bins.near(p.x, p.y, state.merge_radius):
        if w in excluded:
            continue
        q = state.vertices[w]
        d = math.hypot(q.x - p.x, q.y - p.y)
        if d > state.merge_radius or d < 1e-9:  # never create zero-length edges
            continue
        if min_cos is not None:
            heading_cos = ((q.x - p.x) * min_cos[0] + (q.y - p.y) * min_cos[1]) / d
            if heading_cos < min_cos[2]:
                continue
        if best is None or (d, w) < best:
            best = (d, w)
    return best[1] if best else None


def run(state: SearchState) -> RoadGraph:
    """Step until termination and return the constructed graph.

    Warns if the step cap cut the search short (a symptom of a pathological
    field rather than normal operation).
    """
    while True:
        if step(state).kind == TERMINATED:
            break
    if state.hit_step_cap:
        warnings.warn(
            "search stopped at the step cap before exhausting its stack",
            RuntimeWarning,
            stacklevel=2,
        )
    return state.to_graph()


def extract_inferred(merged: RoadGraph, base_edges) -> RoadGraph:
    """Drop base edges from a merged graph, keeping only newly traced roads.

    Vertices that end up isolated disappear; junction vertices shared with the
    base survive on the inferred edges, so the two edge sets are disjoint while
    connection points remain shared.
    """
    base = frozenset(edge_key(u, v) for u, v in base_edges)
    merged_edges = set(merged.edges)
    if not base <= merged_edges:
        raise ValueError("base_edges must be a subset of the merged graph's edges")
    kept = [e for e in merged.edges if e not in base]
    vertices = {v: merged.vertices[v] for e in kept for v in e}
    return RoadGraph(vertices, kept, merged.frame)
