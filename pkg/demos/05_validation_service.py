"""The full validation workflow against the session service, in process.

Writes a base map and a truth field to a scratch directory, creates a
session over the HTTP API, accepts and rejects segments, teleports, and
exports the final map.
"""

import math
import tempfile
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from roadweave import (
    FieldGrid,
    Point,
    RoadGraph,
    graph_from_json,
    rasterize_truth,
    write_field,
    write_graph_json,
)
from roadweave.server import create_app


def town_grid(n=5, spacing=80.0):
    verts = {}
    edges = []
    for j in range(n):
        for i in range(n):
            verts[j * n + i] = (i * spacing, j * spacing)
    for j in range(n):
        for i in range(n):
            v = j * n + i
            if i + 1 < n:
                edges.append((v, v + 1))
            if j + 1 < n:
                edges.append((v, v + n))
    return RoadGraph(verts, edges)


truth = town_grid()
rng = np.random.default_rng(2)
all_edges = list(truth.edges)
drop = set(tuple(all_edges[k]) for k in rng.choice(len(all_edges), 10, replace=False))
base = RoadGraph(dict(truth.vertices), [e for e in all_edges if e not in drop])

with tempfile.TemporaryDirectory() as tmp:
    data_dir = Path(tmp)
    write_graph_json(base, data_dir / "base.json")
    lo, hi = truth.bbox()
    grid = FieldGrid(
        width=int(math.ceil((hi.x - lo.x + 40) / 2.0)) + 1,
        height=int(math.ceil((hi.y - lo.y + 40) / 2.0)) + 1,
        cell_size=2.0,
        origin=Point(lo.x - 20, lo.y - 20),
    )
    write_field(rasterize_truth(truth, grid, 12.0, 20.0), data_dir / "field.dfl")

    client = TestClient(create_app(data_dir))
    session = client.post(
        "/sessions",
        json={"base_graph": "base.json", "field": "field.dfl", "threshold": 0.5},
    ).json()
    sid = session["id"]
    print(f"session {sid}: {session['segments']} inferred segments to validate")

    overlay = client.get(f"/sessions/{sid}/overlay").json()["segments"]
    accepted = overlay[: len(overlay) - 1]
    for seg in accepted:
        client.post(f"/sessions/{sid}/segments/{seg['id']}/accept")
        print(f"  left-click {seg['id']}: accepted ({len(seg['points']) - 1} edges)")
    rejected = overlay[-1]
    client.post(f"/sessions/{sid}/segments/{rejected['id']}/reject")
    print(f"  right-click {rejected['id']}: hidden")

    hop = client.post(f"/sessions/{sid}/teleport").json()
    if hop["exhausted"]:
        print("teleport: nothing left to look at")
    else:
        print(f"teleport: viewport -> bbox {['%.0f' % c for c in hop['bbox']]}")

    doc = client.get(f"/sessions/{sid}/export").json()
    final = graph_from_json(doc)
    print(f"export: {final.n_edges} edges "
          f"(base {base.n_edges} + accepted {final.n_edges - base.n_edges})")
