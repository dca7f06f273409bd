"""Planar road-network graphs in a local metric frame.

Vertices carry coordinates in metres east/north of a per-region projection
origin; edges are straight, undirected segments between vertex ids. Graphs
are immutable after construction -- derived graphs are built fresh.
"""

from __future__ import annotations

import heapq
import json
import math
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .spatial import GridIndex, segment_point_distance2

M_PER_DEG_LAT = 110574.0
M_PER_DEG_LON_EQUATOR = 111320.0


class Point(NamedTuple):
    x: float
    y: float


class Frame(NamedTuple):
    """Local equirectangular projection origin."""

    lat0: float
    lon0: float


Edge = tuple[int, int]


def edge_key(u: int, v: int) -> Edge:
    """Canonical undirected edge id: the sorted vertex pair."""
    return (u, v) if u < v else (v, u)


def latlon_to_local(lat: float, lon: float, frame: Frame) -> Point:
    """Project WGS84 degrees to metres in the frame's equirectangular plane."""
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise ValueError(f"coordinates out of range: ({lat}, {lon})")
    x = (lon - frame.lon0) * math.cos(math.radians(frame.lat0)) * M_PER_DEG_LON_EQUATOR
    y = (lat - frame.lat0) * M_PER_DEG_LAT
    return Point(x, y)


def local_to_latlon(p: Point, frame: Frame) -> tuple[float, float]:
    """Inverse of :func:`latlon_to_local`."""
    lat = frame.lat0 + p.y / M_PER_DEG_LAT
    lon = frame.lon0 + p.x / (math.cos(math.radians(frame.lat0)) * M_PER_DEG_LON_EQUATOR)
    return lat, lon


class GraphPosition(NamedTuple):
    """A location on a graph: an edge plus the fraction along it from the lower-id endpoint."""

    edge: Edge
    t: float
    point: Point


class RoadGraph:
    """Undirected planar graph with positive-length straight edges.

    Construction validates the structural invariants: endpoints exist,
    no self-loops, no duplicate edges, no zero-length edges.
    """

    def __init__(
        self,
        vertices: Mapping[int, tuple[float, float]],
        edges: Iterable[tuple[int, int]] = (),
        frame: Frame = Frame(0.0, 0.0),
    ):
        verts: dict[int, Point] = {}
        for vid, p in vertices.items():
            pt = Point(float(p[0]), float(p[1]))
            if not (math.isfinite(pt.x) and math.isfinite(pt.y)):
                raise ValueError(f"vertex {vid} has non-finite coordinates {pt}")
            verts[int(vid)] = pt
        edge_set: set[Edge] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop edge at vertex {u}")
            if u not in verts or v not in verts:
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
            e = edge_key(u, v)
            if e in edge_set:
                raise ValueError(f"duplicate edge {e}")
            a, b = verts[e[0]], verts[e[1]]
            if a.x == b.x and a.y == b.y:
                raise ValueError(f"zero-length edge {e}")
            edge_set.add(e)
        self._vertices = verts
        self._edges = tuple(sorted(edge_set))
        self._edge_set = frozenset(edge_set)
        self.frame = Frame(float(frame[0]), float(frame[1]))

    # -- basic accessors -------------------------------------------------

    @property
    def vertices(self) -> Mapping[int, Point]:
        return MappingProxyType(self._vertices)

    @property
    def edges(self) -> tuple[Edge, ...]:
        """All edges as canonical (u, v) pairs, sorted."""
        return self._edges

    def has_edge(self, u: int, v: int) -> bool:
        return edge_key(u, v) in self._edge_set

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @cached_property
    def adjacency(self) -> Mapping[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self._vertices}
        for u, v in self._edges:
            adj[u].append(v)
            adj[v].append(u)
        return MappingProxyType({v: tuple(sorted(ns)) for v, ns in adj.items()})

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edge_length(self, e: Edge) -> float:
        a = self._vertices[e[0]]
        b = self._vertices[e[1]]
        return math.hypot(b.x - a.x, b.y - a.y)

    @cached_property
    def edge_lengths(self) -> Mapping[Edge, float]:
        return MappingProxyType({e: self.edge_length(e) for e in self._edges})

    def total_length(self) -> float:
        return sum(self.edge_lengths.values())

    def bbox(self) -> tuple[Point, Point]:
        if not self._vertices:
            raise ValueError("empty graph has no bounding box")
        xs = [p.x for p in self._vertices.values()]
        ys = [p.y for p in self._vertices.values()]
        return Point(min(xs), min(ys)), Point(max(xs), max(ys))

    def point_on_edge(self, e: Edge, t: float) -> Point:
        a = self._vertices[e[0]]
        b = self._vertices[e[1]]
        return Point(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)

    @cached_property
    def edge_index(self) -> GridIndex:
        """Uniform-grid index over edges, binned at roughly the median edge length."""
        lengths = sorted(self.edge_lengths.values())
        bin_size = max(10.0, lengths[len(lengths) // 2]) if lengths else 10.0
        index = GridIndex(bin_size)
        for e in self._edges:
            a = self._vertices[e[0]]
            b = self._vertices[e[1]]
            index.add_bbox(e, a.x, a.y, b.x, b.y)
        return index

    def __eq__(self, other) -> bool:
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return (
            self._vertices == other._vertices
            and self._edge_set == other._edge_set
            and self.frame == other.frame
        )

    def __repr__(self) -> str:
        return f"RoadGraph({self.n_vertices} vertices, {self.n_edges} edges)"


# -- projection ----------------------------------------------------------


def project_to_graph(p: Point, g: RoadGraph) -> tuple[GraphPosition, float]:
    """Closest position on any edge of ``g`` to point ``p``.

    Ties are broken by the lowest canonical edge id. Raises on edgeless graphs.
    """
    if g.n_edges == 0:
        raise ValueError("cannot project onto a graph with no edges")
    best: tuple[float, Edge, float] | None = None
    searched = 0.0
    for guaranteed, candidates in g.edge_index.rings(p.x, p.y):
        for e in sorted(candidates):
            a = g.vertices[e[0]]
            b = g.vertices[e[1]]
            d2, t = segment_point_distance2(p.x, p.y, a.x, a.y, b.x, b.y)
            if best is None or d2 < best[0] or (d2 == best[0] and e < best[1]):
                best = (d2, e, t)
        searched = guaranteed
        if best is not None and best[0] <= searched * searched:
            break
    assert best is not None
    d2, e, t = best
    return GraphPosition(e, t, g.point_on_edge(e, t)), math.sqrt(d2)


# -- along-graph geometry --------------------------------------------------


def distances_from_position(
    g: RoadGraph, start: GraphPosition, radius: float
) -> dict[int, float]:
    """Shortest along-graph distance from ``start`` to every vertex within ``radius``."""
    u, v = start.edge
    length = g.edge_lengths[start.edge]
    s0 = start.t * length
    heap: list[tuple[float, int]] = []
    if s0 <= radius:
        heap.append((s0, u))
    if length - s0 <= radius:
        heap.append((length - s0, v))
    heapq.heapify(heap)
    dist: dict[int, float] = {}
    while heap:
        d, w = heapq.heappop(heap)
        if w in dist:
            continue
        dist[w] = d
        for n in g.adjacency[w]:
            if n not in dist:
                nd = d + g.edge_lengths[edge_key(w, n)]
                if nd <= radius:
                    heapq.heappush(heap, (nd, n))
    return dist


def points_at_graph_distance(g: RoadGraph, start: GraphPosition, d: float) -> list[Point]:
    """All points on ``g`` whose shortest along-graph distance from ``start`` is exactly ``d``.

    Points may fall mid-edge; dead ends shorter than ``d`` contribute nothing.
    Returned sorted by (x, y) with near-duplicates merged.
    """
    if d <= 0:
        raise ValueError("distance must be > 0")
    dist = distances_from_position(g, start, d)
    tol = 1e-9
    start_len = g.edge_lengths[start.edge]
    s0 = start.t * start_len

    def min_dist_on(e: Edge, s: float) -> float:
        length = g.edge_lengths[e]
        best = math.inf
        da = dist.get(e[0])
        db = dist.get(e[1])
        if da is not None:
            best = min(best, da + s)
        if db is not None:
            best = min(best, db + (length - s))
        if e == start.edge:
            best = min(best, abs(s - s0))
        return best

    candidates: list[tuple[Edge, float]] = []
    edges_to_scan: set[Edge] = {start.edge}
    for w in dist:
        for n in g.adjacency[w]:
            edges_to_scan.add(edge_key(w, n))
    for e in edges_to_scan:
        length = g.edge_lengths[e]
        sols: list[float] = []
        da = dist.get(e[0])
        db = dist.get(e[1])
        if da is not None:
            sols.append(d - da)
        if db is not None:
            sols.append(length - (d - db))
        if e == start.edge:
            sols.append(s0 - d)
            sols.append(s0 + d)
        for s in sols:
            if -tol <= s <= length + tol:
                s = min(max(s, 0.0), length)
                if min_dist_on(e, s) >= d - tol:
                    candidates.append((e, s))

    points: list[Point] = []
    for e, s in candidates:
        length = g.edge_lengths[e]
        points.append(g.point_on_edge(e, s / length if length > 0 else 0.0))
    points.sort()
    merged: list[Point] = []
    for p in points:
        if merged and math.hypot(p.x - merged[-1].x, p.y - merged[-1].y) < 1e-9:
            continue
        merged.append(p)
    return merged


# -- graph rewriting -------------------------------------------------------


def densify(g: RoadGraph, d: float) -> RoadGraph:
    """Split every edge longer than ``d`` with evenly spaced vertices.

    An edge of length L > d gains floor(L / d) interior vertices, so adjacent
    vertices end up at most ``d`` apart. Existing vertex ids are preserved;
    new ids continue past the current maximum.
    """
    if d <= 0:
        raise ValueError("spacing must be > 0")
    vertices = dict(g.vertices)
    next_id = max(vertices, default=-1) + 1
    edges: list[Edge] = []
    for e in g.edges:
        length = g.edge_lengths[e]
        if length <= d:
            edges.append(e)
            continue
        n_new = int(length // d)
        a, b = e
        pa, pb = vertices[a], vertices[b]
        chain = [a]
        for k in range(1, n_new + 1):
            t = k / (n_new + 1)
            vertices[next_id] = Point(pa.x + (pb.x - pa.x) * t, pa.y + (pb.y - pa.y) * t)
            chain.append(next_id)
            next_id += 1
        chain.append(b)
        edges.extend(edge_key(u, v) for u, v in zip(chain, chain[1:]))
    return RoadGraph(vertices, edges, g.frame)


def connected_components(g: RoadGraph) -> list[RoadGraph]:
    """Partition into connected subgraphs, ordered by smallest contained vertex id."""
    unvisited = set(g.vertices)
    components: list[RoadGraph] = []
    for seed in sorted(g.vertices):
        if seed not in unvisited:
            continue
        stack = [seed]
        unvisited.discard(seed)
        members = {seed}
        while stack:
            w = stack.pop()
            for n in g.adjacency[w]:
                if n in unvisited:
                    unvisited.discard(n)
                    members.add(n)
                    stack.append(n)
        verts = {v: g.vertices[v] for v in members}
        edges = [e for e in g.edges if e[0] in members and e[1] in members]
        components.append(RoadGraph(verts, edges, g.frame))
    return components


def convex_hull_area(g: RoadGraph) -> float:
    """Area of the convex hull of all vertices; 0 for degenerate hulls."""
    pts = sorted(set(g.vertices.values()))
    if len(pts) < 3:
        return 0.0
    hull = _monotone_chain(pts)
    if len(hull) < 3:
        return 0.0
    area2 = 0.0
    for (x0, y0), (x1, y1) in zip(hull, hull[1:] + hull[:1]):
        area2 += x0 * y1 - x1 * y0
    return abs(area2) / 2.0


def _monotone_chain(pts: list[Point]) -> list[Point]:
    def cross(o: Point, a: Point, b: Point) -> float:
        return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)

    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def edge_chains(g: RoadGraph) -> list[list[int]]:
    """Decompose into maximal vertex paths whose interior vertices have degree 2.

    Every edge appears in exactly one chain; pure cycles come out as closed
    chains. Deterministic: chains start at the lowest eligible vertex id.
    """
    used: set[Edge] = set()
    chains: list[list[int]] = []

    def walk(start: int, nxt: int) -> list[int]:
        chain = [start, nxt]
        used.add(edge_key(start, nxt))
        while g.degree(chain[-1]) == 2:
            a, b = g.adjacency[chain[-1]]
            follow = b if a == chain[-2] else a
            e = edge_key(chain[-1], follow)
            if e in used:
                break
            used.add(e)
            chain.append(follow)
        return chain

    for v in sorted(g.vertices):
        if g.degree(v) == 2:
            continue
        for n in g.adjacency[v]:
            if edge_key(v, n) not in used:
                chains.append(walk(v, n))
    # leftover pure cycles
    for v in sorted(g.vertices):
        for n in g.adjacency[v]:
            if edge_key(v, n) not in used:
                chains.append(walk(v, n))
    return chains


# -- file formats ----------------------------------------------------------


class GraphFormatError(ValueError):
    """Malformed graph document."""


def graph_to_json(g: RoadGraph) -> dict:
    return {
        "frame": {"lat0": g.frame.lat0, "lon0": g.frame.lon0},
        "nodes": [{"id": v, "x": p.x, "y": p.y} for v, p in sorted(g.vertices.items())],
        "edges": [[u, v] for u, v in g.edges],
    }


def graph_from_json(doc: dict) -> RoadGraph:
    try:
        frame = Frame(float(doc["frame"]["lat0"]), float(doc["frame"]["lon0"]))
        vertices = {int(n["id"]): (float(n["x"]), float(n["y"])) for n in doc["nodes"]}
        edges = [(int(u), int(v)) for u, v in doc["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"malformed graph-json document: {exc}") from exc
    return RoadGraph(vertices, edges, frame)


def write_graph_json(g: RoadGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_json(g)), encoding="utf-8")


def read_graph_json(path: str | Path) -> RoadGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from exc
    return graph_from_json(doc)


def graph_to_geojson(g: RoadGraph) -> dict:
    """FeatureCollection with one LineString per maximal edge chain.

    The projection origin rides along as a foreign ``frame`` member so a
    round trip reconstructs the same local coordinates.
    """
    features = []
    for chain in edge_chains(g):
        coords = []
        for v in chain:
            lat, lon = local_to_latlon(g.vertices[v], g.frame)
            coords.append([lon, lat])
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {},
            }
        )
    return {
        "type": "FeatureCollection",
        "frame": {"lat0": g.frame.lat0, "lon0": g.frame.lon0},
        "features": features,
    }


def graph_from_geojson(doc: dict, frame: Frame | None = None, snap: float = 0.01) -> RoadGraph:
    """Build a graph from LineString features, unifying endpoints within ``snap`` metres."""
    if doc.get("type") != "FeatureCollection":
        raise GraphFormatError("expected a FeatureCollection")
    if frame is None:
        if "frame" in doc:
            frame = Frame(float(doc["frame"]["lat0"]), float(doc["frame"]["lon0"]))
        else:
            frame = _centroid_frame(doc)
    index = GridIndex(max(snap, 1e-6))
    vertices: dict[int, Point] = {}
    edges: set[Edge] = set()

    def vertex_for(p: Point) -> int:
        for vid in index.near(p.x, p.y, snap):
            q = vertices[vid]
            if math.hypot(p.x - q.x, p.y - q.y) <= snap:
                return vid
        vid = len(vertices)
        vertices[vid] = p
        index.add_point(vid, p.x, p.y)
        return vid

    for feature in doc.get("features", []):
        geom = feature.get("geometry") or {}
        if geom.get("type") != "LineString":
            continue
        coords = geom.get("coordinates", [])
        prev: int | None = None
        for lon, lat in coords:
            vid = vertex_for(latlon_to_local(float(lat), float(lon), frame))
            if prev is not None and prev != vid:
                edges.add(edge_key(prev, vid))
            prev = vid
    return RoadGraph(vertices, edges, frame)


def _centroid_frame(doc: dict) -> Frame:
    lats: list[float] = []
    lons: list[float] = []
    for feature in doc.get("features", []):
        geom = feature.get("geometry") or {}
        if geom.get("type") == "LineString":
            for lon, lat in geom.get("coordinates", []):
                lats.append(float(lat))
                lons.append(float(lon))
    if not lats:
        return Frame(0.0, 0.0)
    return Frame(sum(lats) / len(lats), sum(lons) / len(lons))


def write_geojson(g: RoadGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_geojson(g)), encoding="utf-8")


def read_geojson(path: str | Path, frame: Frame | None = None, snap: float = 0.01) -> RoadGraph:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"not valid JSON: {exc}") from exc
    return graph_from_geojson(doc, frame=frame, snap=snap)
