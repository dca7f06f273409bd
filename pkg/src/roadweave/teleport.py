"""Ranking of unmapped components and the cursor that walks a validator through them."""

from __future__ import annotations

from dataclasses import dataclass

from .graph import Point, RoadGraph, connected_components, convex_hull_area

BBOX_PADDING = 100.0  # metres added around a component for viewport fit


@dataclass(frozen=True)
class RankedComponent:
    graph: RoadGraph
    area: float  # convex hull, m^2
    connections: int  # vertices shared with the base map
    score: float
    bbox: tuple[Point, Point]  # padded min/max corners


def score_components(
    inferred: RoadGraph, base: RoadGraph, weight: float = 1_000_000.0
) -> list[RankedComponent]:
    """Connected components of the inferred graph, best validation targets first.

    score = hull area + weight * shared-vertex count; the default weight makes
    one connection to the existing map worth a square kilometre of hull.
    Ties resolve to the component containing the smallest vertex id.
    """
    if weight < 0:
        raise ValueError("weight must be >= 0")
    base_ids = set(base.vertices)
    ranked: list[RankedComponent] = []
    for comp in connected_components(inferred):
        area = convex_hull_area(comp)
        conn = len(set(comp.vertices) & base_ids)
        lo, hi = comp.bbox()
        ranked.append(
            RankedComponent(
                graph=comp,
                area=area,
                connections=conn,
                score=area + weight * conn,
                bbox=(
                    Point(lo.x - BBOX_PADDING, lo.y - BBOX_PADDING),
                    Point(hi.x + BBOX_PADDING, hi.y + BBOX_PADDING),
                ),
            )
        )
    ranked.sort(key=lambda rc: (-rc.score, min(rc.graph.vertices)))
    return ranked


class TeleportCursor:
    """Visits each ranked component exactly once, best first."""

    def __init__(self, ranked: list[RankedComponent]):
        self._ranked = list(ranked)
        self._next = 0

    def next_component(self) -> RankedComponent | None:
        """The best unvisited component, or None once exhausted."""
        if self._next >= len(self._ranked):
            return None
        comp = self._ranked[self._next]
        self._next += 1
        return comp

    @property
    def visited(self) -> int:
        return self._next

    @property
    def total(self) -> int:
        return len(self._ranked)
