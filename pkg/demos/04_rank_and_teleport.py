"""Rank unmapped road groups and walk a validator through them.

Inferred-but-unvalidated roads form disconnected components; each is scored
by hull area plus a bonus per connection to the existing map, and a cursor
hands them out best-first.
"""

import numpy as np

from roadweave import RoadGraph, TeleportCursor, score_components

rng = np.random.default_rng(5)
verts = {}
edges = []
vid = 0
for _ in range(8):
    ox, oy = rng.uniform(0, 30000, size=2)
    k = int(rng.integers(4, 10))
    first = vid
    for _ in range(k):
        verts[vid] = (float(ox + rng.uniform(0, 1200)), float(oy + rng.uniform(0, 1200)))
        if vid > first:
            edges.append((vid - 1, vid))
        vid += 1
inferred = RoadGraph(verts, edges)
base = RoadGraph({v: verts[v] for v in range(0, vid, 6)}, [])

ranked = score_components(inferred, base, weight=1_000_000.0)
print(f"{len(ranked)} unmapped components, best first:")
for r in ranked:
    print(f"  score {r.score / 1e6:7.2f}M  hull {r.area / 1e6:5.2f} km^2  "
          f"links to map {r.connections}  edges {r.graph.n_edges}")

cursor = TeleportCursor(ranked)
print("\nteleport order:")
while True:
    comp = cursor.next_component()
    if comp is None:
        print("  (all components visited)")
        break
    lo, hi = comp.bbox
    print(f"  pan viewport to x [{lo.x:.0f}, {hi.x:.0f}], y [{lo.y:.0f}, {hi.y:.0f}]")
