"""Keep only the roads that matter for long trips.

Two dense neighbourhoods sit 6 km apart, joined by one arterial. Clustering
plus trimmed centre-to-centre routes retains exactly the arterial's middle,
while plain betweenness thresholds struggle to separate it from busy local
streets (shown on a small example).
"""

from roadweave import PruneParams, RoadGraph, betweenness, grid_cluster, prune_major


def block(origin, extent=500.0, spacing=50.0, id_base=0):
    n = int(extent / spacing) + 1
    ox, oy = origin
    verts = {}
    for j in range(n):
        for i in range(n):
            verts[id_base + j * n + i] = (ox + i * spacing, oy + j * spacing)
    edges = []
    for j in range(n):
        for i in range(n):
            v = id_base + j * n + i
            if i + 1 < n:
                edges.append((v, v + 1))
            if j + 1 < n:
                edges.append((v, v + n))
    return verts, edges


v1, e1 = block((0, 0))
v2, e2 = block((6000, 0), id_base=1000)
verts = {**v1, **v2}
edges = e1 + e2
prev = 5 + 5 * 11  # east-mid vertex of block one
next_id = 2000
for k in range(1, 37):
    verts[next_id] = (500 + 5500 * k / 37, 250.0)
    edges.append((prev, next_id))
    prev = next_id
    next_id += 1
edges.append((prev, 1000 + 5 * 11))  # west-mid vertex of block two
g = RoadGraph(verts, edges)
print(f"network: {g.n_edges} edges, {g.total_length() / 1000:.1f} km")

params = PruneParams(cell_size=1000.0, min_cell_vertices=10,
                     min_separation=5000.0, trim=500.0)
centers = grid_cluster(g, params)
print(f"cluster centres: {[tuple(map(round, p)) for p in centers.points(g)]}")

major = prune_major(g, centers, params)
print(f"retained after pruning: {major.n_edges} edges "
      f"({major.total_length() / 1000:.2f} km) -- the trimmed arterial middle")
print(f"dropped: {g.n_edges - major.n_edges} local-street edges")

# betweenness baseline on a path graph: counts over ordered vertex pairs
path = RoadGraph({0: (0, 0), 1: (1, 0), 2: (2, 0), 3: (3, 0)}, [(0, 1), (1, 2), (2, 3)])
print("betweenness baseline on a 4-vertex path:", betweenness(path))
