"""Per-cell road-direction likelihood fields.

A field stores, for every grid cell, a vector of ``b`` likelihoods -- bucket
k covering angles [2*pi*k/b, 2*pi*(k+1)/b). Truth fields derived from a road
graph contain only {0, 1}; a model plugged in at the file boundary may emit
any values in [0, 1].
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .graph import (
    GraphPosition,
    Point,
    RoadGraph,
    edge_key,
    points_at_graph_distance,
    project_to_graph,
)

TAU = 2.0 * math.pi


@dataclass(frozen=True)
class FieldGrid:
    """Georeferencing of a field: cell (0, 0) is centred at ``origin``."""

    width: int
    height: int
    buckets: int = 64
    cell_size: float = 2.0
    origin: Point = Point(0.0, 0.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.buckets <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.buckets % 2 != 0:
            raise ValueError("bucket count must be even so opposite directions pair up")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be > 0")

    def cell_of(self, p: Point) -> tuple[int, int]:
        """Nearest cell indices to a point (may be out of bounds)."""
        i = round((p.x - self.origin.x) / self.cell_size)
        j = round((p.y - self.origin.y) / self.cell_size)
        return int(i), int(j)

    def contains(self, i: int, j: int) -> bool:
        return 0 <= i < self.width and 0 <= j < self.height

    def center(self, i: int, j: int) -> Point:
        return Point(
            self.origin.x + i * self.cell_size,
            self.origin.y + j * self.cell_size,
        )


@dataclass(frozen=True)
class DirectionField:
    grid: FieldGrid
    values: np.ndarray  # (width, height, buckets) float32, each value in [0, 1]

    def __post_init__(self):
        expected = (self.grid.width, self.grid.height, self.grid.buckets)
        arr = np.ascontiguousarray(self.values, dtype=np.float32)
        if arr.shape != expected:
            raise ValueError(f"field shape {arr.shape} != grid shape {expected}")
        if arr.size and (float(arr.min()) < 0.0 or float(arr.max()) > 1.0):
            raise ValueError("field values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    def value_at(self, p: Point) -> np.ndarray:
        """Likelihood vector of the cell nearest ``p``; zeros outside the grid."""
        i, j = self.grid.cell_of(p)
        if not self.grid.contains(i, j):
            return np.zeros(self.grid.buckets, dtype=np.float32)
        return self.values[i, j]

    def max_likelihood(self) -> np.ndarray:
        """Per-cell maximum over buckets, shape (width, height)."""
        return self.values.max(axis=2)


def zero_field(grid: FieldGrid) -> DirectionField:
    return DirectionField(grid, np.zeros((grid.width, grid.height, grid.buckets), np.float32))


# -- angles and buckets ------------------------------------------------------


def bucket_of(angle: float, buckets: int) -> int:
    """Bucket index whose half-open angle range contains ``angle``."""
    a = angle % TAU
    return int(a * buckets / TAU) % buckets


def bucket_center(k: int, buckets: int) -> float:
    return TAU * (k + 0.5) / buckets


def bucketize(angles: Iterable[float], buckets: int) -> np.ndarray:
    """Bit-vector with bit k set iff some angle falls in bucket k."""
    if buckets <= 0:
        raise ValueError("buckets must be > 0")
    bits = np.zeros(buckets, dtype=np.uint8)
    for a in angles:
        bits[bucket_of(a, buckets)] = 1
    return bits


def truth_angles(
    g: RoadGraph, cell_center: Point, step_dist: float, match_thresh: float
) -> tuple[float, ...]:
    """Road directions at a cell, from the graph.

    Empty when no edge lies within ``match_thresh``. Otherwise the cell centre
    is projected onto its nearest edge and the returned angles point from the
    cell centre toward every graph point exactly ``step_dist`` away from that
    projection along the network.
    """
    if step_dist <= 0 or match_thresh <= 0:
        raise ValueError("step_dist and match_thresh must be > 0")
    if g.n_edges == 0:
        return ()
    pos, dist = project_to_graph(cell_center, g)
    if dist > match_thresh:
        return ()
    return _angles_from_position(g, pos, cell_center, step_dist)


def _angles_from_position(
    g: RoadGraph, pos: GraphPosition, cell_center: Point, step_dist: float
) -> tuple[float, ...]:
    targets = points_at_graph_distance(g, pos, step_dist)
    # np.arctan2 rather than math.atan2: the bulk rasterizer computes angles
    # with numpy, and the two can differ in the last ulp, which matters for
    # angles landing exactly on a bucket boundary
    angles = {
        float(np.arctan2(p.y - cell_center.y, p.x - cell_center.x) % TAU)
        for p in targets
        if (p.x, p.y) != (cell_center.x, cell_center.y)
    }
    return tuple(sorted(angles))


# -- truth-field rasterization ----------------------------------------------


def rasterize_truth(
    g: RoadGraph, grid: FieldGrid, step_dist: float = 12.0, match_thresh: float = 20.0
) -> DirectionField:
    """Per-cell truth labels over a whole grid.

    Equivalent to calling :func:`truth_angles` + :func:`bucketize` at every
    cell centre, but computed edge-by-edge: a vectorized band pass finds each
    cell's nearest edge and projection, interior cells get their two along-road
    points in bulk, and only cells projecting near an edge end fall back to
    the exact per-cell expansion.
    """
    if step_dist <= 0 or match_thresh <= 0:
        raise ValueError("step_dist and match_thresh must be > 0")
    values = np.zeros((grid.width, grid.height, grid.buckets), np.float32)
    if g.n_edges == 0:
        return DirectionField(grid, values)

    edges = g.edges
    ax = np.array([g.vertices[e[0]].x for e in edges])
    ay = np.array([g.vertices[e[0]].y for e in edges])
    bx = np.array([g.vertices[e[1]].x for e in edges])
    by = np.array([g.vertices[e[1]].y for e in edges])
    lengths = np.hypot(bx - ax, by - ay)

    dist2, s_along, nearest = _nearest_edge_transform(
        grid, ax, ay, bx, by, lengths, match_thresh
    )

    ii, jj = np.nonzero(dist2 <= match_thresh * match_thresh)
    if ii.size == 0:
        return DirectionField(grid, values)
    cx = grid.origin.x + ii * grid.cell_size
    cy = grid.origin.y + jj * grid.cell_size
    em = nearest[ii, jj]
    s0 = s_along[ii, jj]
    el = lengths[em]

    interior = (s0 >= step_dist) & (el - s0 >= step_dist)
    _mark_interior(
        values, grid.buckets, ii, jj, cx, cy, em, s0, el, ax, ay, bx, by, step_dist, interior
    )
    _mark_near_endpoints(
        values, g, grid.buckets, edges, lengths,
        ii, jj, cx, cy, em, s0, el, ax, ay, bx, by, step_dist, ~interior,
    )
    return DirectionField(grid, values)


def _nearest_edge_transform(grid, ax, ay, bx, by, lengths, match_thresh):
    """Per-cell squared distance to the nearest edge, its arc offset, and its index."""
    w, h, cs = grid.width, grid.height, grid.cell_size
    ox, oy = grid.origin
    dist2 = np.full((w, h), np.inf)
    s_along = np.zeros((w, h))
    nearest = np.full((w, h), -1, dtype=np.int64)
    for m in range(len(lengths)):
        x0 = min(ax[m], bx[m]) - match_thresh
        x1 = max(ax[m], bx[m]) + match_thresh
        y0 = min(ay[m], by[m]) - match_thresh
        y1 = max(ay[m], by[m]) + match_thresh
        i0 = max(0, math.ceil((x0 - ox) / cs))
        i1 = min(w - 1, math.floor((x1 - ox) / cs))
        j0 = max(0, math.ceil((y0 - oy) / cs))
        j1 = min(h - 1, math.floor((y1 - oy) / cs))
        if i0 > i1 or j0 > j1:
            continue
        px = ox + np.arange(i0, i1 + 1)[:, None] * cs
        py = oy + np.arange(j0, j1 + 1)[None, :] * cs
        dx = bx[m] - ax[m]
        dy = by[m] - ay[m]
        seg2 = dx * dx + dy * dy
        t = ((px - ax[m]) * dx + (py - ay[m]) * dy) / seg2
        np.clip(t, 0.0, 1.0, out=t)
        ex = px - (ax[m] + t * dx)
        ey = py - (ay[m] + t * dy)
        d2 = ex * ex + ey * ey
        view = dist2[i0 : i1 + 1, j0 : j1 + 1]
        better = d2 < view
        view[better] = d2[better]
        s_along[i0 : i1 + 1, j0 : j1 + 1][better] = (t * lengths[m])[better]
        nearest[i0 : i1 + 1, j0 : j1 + 1][better] = m
    return dist2, s_along, nearest


def _scatter_angle_bits(values, buckets, ii, jj, cx, cy, px, py):
    keep = (px != cx) | (py != cy)
    if not np.any(keep):
        return
    ang = np.arctan2(py[keep] - cy[keep], px[keep] - cx[keep]) % TAU
    kk = (ang * buckets / TAU).astype(np.int64) % buckets
    values[ii[keep], jj[keep], kk] = 1.0


def _mark_interior(values, buckets, ii, jj, cx, cy, em, s0, el, ax, ay, bx, by, step, mask):
    """Cells whose projection sits >= step from both edge ends: exactly two targets.

    Target points interpolate by edge fraction with the same arithmetic as
    ``RoadGraph.point_on_edge`` so results agree bit-for-bit with the
    per-cell reference path.
    """
    if not np.any(mask):
        return
    sel = np.nonzero(mask)[0]
    e = em[sel]
    for s_target in (s0[sel] - step, s0[sel] + step):
        tt = s_target / el[sel]
        px = ax[e] + (bx[e] - ax[e]) * tt
        py = ay[e] + (by[e] - ay[e]) * tt
        _scatter_angle_bits(values, buckets, ii[sel], jj[sel], cx[sel], cy[sel], px, py)


def _mark_near_endpoints(
    values, g, buckets, edges, lengths, ii, jj, cx, cy, em, s0, el, ax, ay, bx, by, step, mask
):
    """Cells projecting within ``step`` of an edge end.

    When the host edge is >= 2*step long and every other edge at the near
    endpoint is >= step long, the distance-``step`` points are one forward
    point on the host edge plus one point a fixed arc along each sibling
    edge -- computed in bulk per (edge, endpoint) group. Anything else falls
    back to the exact per-cell expansion.
    """
    sel = np.nonzero(mask)[0]
    if sel.size == 0:
        return
    near_a = s0[sel] < step
    groups: dict[tuple[int, int], list[int]] = {}
    fallback: list[int] = []
    for idx, cell in enumerate(sel):
        m = int(em[cell])
        length = lengths[m]
        sa = s0[cell]
        if sa < step and length - sa < step:
            fallback.append(cell)
            continue
        side = 0 if near_a[idx] else 1
        if length < 2 * step:
            fallback.append(cell)
            continue
        end_vertex = edges[m][side]
        siblings = _sibling_edges(g, end_vertex, edges[m])
        if any(g.edge_lengths[f] < step for f in siblings):
            fallback.append(cell)
            continue
        groups.setdefault((m, side), []).append(cell)

    for (m, side), cells in groups.items():
        cells_arr = np.asarray(cells)
        sa = s0[cells_arr]
        length = lengths[m]
        if side == 0:
            end = Point(ax[m], ay[m])
            s_end = sa  # arc distance to endpoint a
            fwd = sa + step
        else:
            end = Point(bx[m], by[m])
            s_end = length - sa
            fwd = sa - step
        tt = fwd / length
        px = ax[m] + (bx[m] - ax[m]) * tt
        py = ay[m] + (by[m] - ay[m]) * tt
        _scatter_angle_bits(
            values, buckets, ii[cells_arr], jj[cells_arr], cx[cells_arr], cy[cells_arr], px, py
        )
        remainder = step - s_end  # arc to walk along each sibling edge
        end_vertex = edges[m][side]
        for f in _sibling_edges(g, end_vertex, edges[m]):
            other = f[1] if f[0] == end_vertex else f[0]
            q = g.vertices[other]
            flen = g.edge_lengths[f]
            fx = end.x + (q.x - end.x) * (remainder / flen)
            fy = end.y + (q.y - end.y) * (remainder / flen)
            _scatter_angle_bits(
                values, buckets, ii[cells_arr], jj[cells_arr], cx[cells_arr], cy[cells_arr],
                fx, fy,
            )

    for cell in fallback:
        m = int(em[cell])
        e = edges[m]
        t = float(s0[cell] / lengths[m])
        pos = GraphPosition(e, t, g.point_on_edge(e, t))
        center = Point(float(cx[cell]), float(cy[cell]))
        for a in _angles_from_position(g, pos, center, step):
            values[ii[cell], jj[cell], bucket_of(a, buckets)] = 1.0


def _sibling_edges(g: RoadGraph, vertex: int, exclude: tuple[int, int]) -> list[tuple[int, int]]:
    return [
        edge_key(vertex, n)
        for n in g.adjacency[vertex]
        if edge_key(vertex, n) != exclude
    ]


# -- peak extraction ---------------------------------------------------------


def extract_peaks(
    field: DirectionField, t_init: float, nms_radius: float
) -> list[Point]:
    """Cell centres of local maxima of the per-cell max likelihood.

    Candidates need value >= ``t_init`` and must be >= all 8 neighbours
    (plateaus qualify). Greedy suppression then drops any candidate strictly
    within ``nms_radius`` of an already kept, not-weaker peak.

    Ties are broken by how much road structure a cell's profile shows: cells
    confident in more distinct direction clusters come first (junctions beat
    plain road, road beats fringe), then cells with an opposite-direction pair
    (road centres beat off-centre band cells), then (i, j). On saturated
    fields -- truth labels are all-1.0 plateaus -- this pins seeds to
    junctions and road centres instead of arbitrary cells inside the match
    band; on graded model outputs it only affects exact ties.
    """
    if not (0.0 < t_init <= 1.0):
        raise ValueError("t_init must be in (0, 1]")
    if nms_radius <= 0:
        raise ValueError("nms_radius must be > 0")
    m = field.max_likelihood()
    padded = np.full((m.shape[0] + 2, m.shape[1] + 2), -np.inf, dtype=m.dtype)
    padded[1:-1, 1:-1] = m
    neigh = np.full_like(m, -np.inf)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            np.maximum(neigh, padded[1 + di : 1 + di + m.shape[0], 1 + dj : 1 + dj + m.shape[1]], out=neigh)
    cand = (m >= t_init) & (m >= neigh)
    ci, cj = np.nonzero(cand)
    if ci.size == 0:
        return []
    vals = m[ci, cj]
    confident = field.values[ci, cj] >= t_init
    # buckets whose opposite is also confident: maximal at junctions and road
    # centres, near zero for off-centre cells whose view of the road is skewed
    paired = np.sum(
        confident & np.roll(confident, field.grid.buckets // 2, axis=1), axis=1
    )
    # distinct runs of confident buckets, circularly
    clusters = np.sum(confident & ~np.roll(confident, 1, axis=1), axis=1)
    order = np.lexsort((cj, ci, -clusters, -paired, -vals))
    ci, cj, vals = ci[order], cj[order], vals[order]

    cs = field.grid.cell_size
    ox, oy = field.grid.origin
    xs = (ox + ci * cs).tolist()
    ys = (oy + cj * cs).tolist()
    r2 = nms_radius * nms_radius
    inv_bin = 1.0 / nms_radius
    bins: dict[tuple[int, int], list[int]] = {}
    kept: list[int] = []
    for idx in range(len(xs)):
        x = xs[idx]
        y = ys[idx]
        bi = math.floor(x * inv_bin)
        bj = math.floor(y * inv_bin)
        suppressed = False
        for nbi in (bi - 1, bi, bi + 1):
            for nbj in (bj - 1, bj, bj + 1):
                for k in bins.get((nbi, nbj), ()):
                    dx = xs[k] - x
                    dy = ys[k] - y
                    if dx * dx + dy * dy < r2:
                        suppressed = True
                        break
                if suppressed:
                    break
            if suppressed:
                break
        if not suppressed:
            kept.append(idx)
            bins.setdefault((bi, bj), []).append(idx)
    return [Point(xs[k], ys[k]) for k in kept]


# -- file format ---------------------------------------------------------------

_MAGIC = b"DFL1"
_HEADER = struct.Struct("<4sIIIddd")


class FieldFormatError(ValueError):
    """Base class for malformed direction-field files."""


class FieldMagicError(FieldFormatError):
    """File does not start with the field magic."""


class FieldDimensionError(FieldFormatError):
    """Header declares impossible dimensions."""


class FieldPayloadError(FieldFormatError):
    """Payload size disagrees with the header."""


class FieldValueError(FieldFormatError):
    """Payload contains likelihoods outside [0, 1]."""


def write_field(field: DirectionField, path: str | Path) -> None:
    """Serialize to the little-endian "dirfield v1" layout; see read_field."""
    grid = field.grid
    header = _HEADER.pack(
        _MAGIC, grid.width, grid.height, grid.buckets,
        grid.cell_size, grid.origin.x, grid.origin.y,
    )
    payload = np.ascontiguousarray(field.values, dtype="<f4").tobytes()
    Path(path).write_bytes(header + payload)


def read_field(path: str | Path) -> DirectionField:
    data = Path(path).read_bytes()
    if len(data) >= 4 and data[:4] != _MAGIC:
        raise FieldMagicError(f"bad magic {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise FieldPayloadError("file shorter than the fixed header")
    _, w, h, b, cell_size, origin_x, origin_y = _HEADER.unpack_from(data)
    if w == 0 or h == 0 or b == 0:
        raise FieldDimensionError(f"impossible dimensions {w}x{h}x{b}")
    expected = w * h * b * 4
    payload = data[_HEADER.size :]
    if len(payload) != expected:
        raise FieldPayloadError(
            f"payload holds {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(w, h, b)
    if values.size and (float(values.min()) < 0.0 or float(values.max()) > 1.0):
        raise FieldValueError("likelihood outside [0, 1]")
    try:
        grid = FieldGrid(w, h, b, cell_size, Point(origin_x, origin_y))
    except ValueError as exc:
        raise FieldDimensionError(str(exc)) from exc
    return DirectionField(grid, values.copy())
