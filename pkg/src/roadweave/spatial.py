"""Uniform-grid spatial indexes for points and line segments."""

from __future__ import annotations

import math
from typing import Hashable, Iterator


class GridIndex:
    """Hash-grid over 2D items keyed by the bins their bounding box touches.

    Bin size should be on the order of the query radius; queries walk the
    bins covering the query disk and return candidate items (supersets --
    callers do the exact distance test).
    """

    def __init__(self, bin_size: float):
        if bin_size <= 0:
            raise ValueError("bin_size must be > 0")
        self.bin_size = float(bin_size)
        self._bins: dict[tuple[int, int], list[Hashable]] = {}

    def _bin_of(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.bin_size), math.floor(y / self.bin_size))

    def add_point(self, item: Hashable, x: float, y: float) -> None:
        self._bins.setdefault(self._bin_of(x, y), []).append(item)

    def add_bbox(self, item: Hashable, x0: float, y0: float, x1: float, y1: float) -> None:
        bi0, bj0 = self._bin_of(min(x0, x1), min(y0, y1))
        bi1, bj1 = self._bin_of(max(x0, x1), max(y0, y1))
        for bi in range(bi0, bi1 + 1):
            for bj in range(bj0, bj1 + 1):
                self._bins.setdefault((bi, bj), []).append(item)

    def near(self, x: float, y: float, radius: float) -> Iterator[Hashable]:
        """Candidates whose bins intersect the disk of ``radius`` around (x, y)."""
        reach = max(1, math.ceil(radius / self.bin_size))
        bi, bj = self._bin_of(x, y)
        seen: set[Hashable] = set()
        for di in range(-reach, reach + 1):
            for dj in range(-reach, reach + 1):
                for item in self._bins.get((bi + di, bj + dj), ()):
                    if item not in seen:
                        seen.add(item)
                        yield item

    def rings(self, x: float, y: float) -> Iterator[tuple[float, list[Hashable]]]:
        """Expanding-ring candidate search for nearest-item queries.

        Yields (guaranteed_radius, items). Once the ring at Chebyshev index k
        has been consumed, every item within guaranteed_radius = k * bin_size
        of (x, y) has been seen, because rings 0..k cover the square of
        half-width k * bin_size around the query and items sit in every bin
        their bbox touches. Callers should stop once their best hit is within
        the guaranteed radius. Long empty prefixes (queries far outside the
        indexed area) are skipped by jumping to the nearest populated ring.
        """
        if not self._bins:
            return
        bi, bj = self._bin_of(x, y)
        k = 0
        bound: int | None = None
        jumped = False
        while True:
            ring: list[Hashable] = []
            if k == 0:
                ring.extend(self._bins.get((bi, bj), ()))
            else:
                for di in range(-k, k + 1):
                    ring.extend(self._bins.get((bi + di, bj - k), ()))
                    ring.extend(self._bins.get((bi + di, bj + k), ()))
                for dj in range(-k + 1, k):
                    ring.extend(self._bins.get((bi - k, bj + dj), ()))
                    ring.extend(self._bins.get((bi + k, bj + dj), ()))
            yield (k * self.bin_size, ring)
            if not jumped and not ring and k >= 4:
                dists = [max(abs(ci - bi), abs(cj - bj)) for ci, cj in self._bins]
                bound = max(dists)
                ahead = [dist for dist in dists if dist > k]
                jumped = True
                if not ahead:
                    return
                k = min(ahead)
                continue
            k += 1
            if bound is not None and k > bound:
                return


def segment_point_distance2(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> tuple[float, float]:
    """Squared distance from point p to segment a-b and the foot parameter t in [0, 1]."""
    dx = bx - ax
    dy = by - ay
    seg2 = dx * dx + dy * dy
    if seg2 <= 0.0:
        ex = px - ax
        ey = py - ay
        return ex * ex + ey * ey, 0.0
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    qx = ax + t * dx
    qy = ay + t * dy
    ex = px - qx
    ey = py - qy
    return ex * ex + ey * ey, t
