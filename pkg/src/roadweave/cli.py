"""Command-line pipeline: field generation, inference, pruning, ranking, metrics, serving."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .field import FieldGrid, extract_peaks, rasterize_truth, read_field, write_field
from .graph import Point, read_graph_json, write_graph_json
from .metrics import TopoParams, rge, topo_compare
from .pruning import PruneParams, grid_cluster, prune_major
from .search import (
    SearchParams,
    extract_inferred,
    init_from_basemap,
    init_from_seeds,
    run,
)
from .teleport import score_components


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.handler(args)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roadweave",
        description="road-network inference, pruning, ranking, and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-field", help="rasterize truth direction labels for a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cell-size", type=float, default=2.0)
    p.add_argument("--buckets", type=int, default=64)
    p.add_argument("--step-dist", type=float, default=12.0)
    p.add_argument("--match-thresh", type=float, default=20.0)
    p.add_argument("--margin", type=float, default=None,
                   help="grid margin around the graph bbox (default: match-thresh)")
    p.set_defaults(handler=_cmd_gen_field)

    p = sub.add_parser("infer", help="trace a road graph by following a direction field")
    p.add_argument("--field", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base", default=None, help="seed from this base map instead of field peaks")
    p.add_argument("--merged-out", default=None, help="also write base+inferred merged graph")
    p.add_argument("--threshold", type=float, default=0.4)
    p.add_argument("--step-dist", type=float, default=12.0)
    p.add_argument("--t-init", type=float, default=None,
                   help="peak threshold for seeding (default: --threshold)")
    p.add_argument("--nms-radius", type=float, default=None,
                   help="peak suppression radius (default: 2 * step-dist)")
    p.set_defaults(handler=_cmd_infer)

    p = sub.add_parser("prune", help="retain only major-road edges")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--r", type=float, default=1000.0, help="clustering cell size, metres")
    p.add_argument("--min-cell", type=int, default=10, help="minimum vertices per cluster cell")
    p.add_argument("--R", type=float, default=5000.0, help="minimum centre separation, metres")
    p.add_argument("--trim", type=float, default=500.0, help="trimmed from each path end, metres")
    p.set_defaults(handler=_cmd_prune)

    p = sub.add_parser("rank", help="rank unmapped components for teleport validation")
    p.add_argument("--inferred", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--weight", type=float, default=1_000_000.0)
    p.set_defaults(handler=_cmd_rank)

    p = sub.add_parser("eval-topo", help="reachability precision/recall of inferred vs truth")
    p.add_argument("--inferred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--origin-spacing", type=float, default=50.0)
    p.add_argument("--match-radius", type=float, default=15.0)
    p.add_argument("--travel-radius", type=float, default=300.0)
    p.add_argument("--marble-spacing", type=float, default=10.0)
    p.add_argument("--max-origins", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-origin", default=None, help="write a per-origin CSV table here")
    p.set_defaults(handler=_cmd_eval_topo)

    p = sub.add_parser("eval-rge", help="geometry error of added roads vs truth")
    p.add_argument("--added", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--spacing", type=float, default=5.0)
    p.set_defaults(handler=_cmd_eval_rge)

    p = sub.add_parser("serve", help="run the validation session service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", required=True)
    p.set_defaults(handler=_cmd_serve)

    return parser


def _cmd_gen_field(args) -> int:
    g = read_graph_json(args.graph)
    margin = args.match_thresh if args.margin is None else args.margin
    lo, hi = g.bbox()
    cs = args.cell_size
    origin = Point(lo.x - margin, lo.y - margin)
    width = int(math.ceil((hi.x - lo.x + 2 * margin) / cs)) + 1
    height = int(math.ceil((hi.y - lo.y + 2 * margin) / cs)) + 1
    grid = FieldGrid(width, height, args.buckets, cs, origin)
    field = rasterize_truth(g, grid, args.step_dist, args.match_thresh)
    write_field(field, args.out)
    print(json.dumps({"width": width, "height": height, "buckets": args.buckets,
                      "nonzero_cells": int((field.max_likelihood() > 0).sum())}))
    return 0


def _cmd_infer(args) -> int:
    field = read_field(args.field)
    params = SearchParams(step_dist=args.step_dist, threshold=args.threshold)
    if args.base:
        base = read_graph_json(args.base)
        state = init_from_basemap(field, base, params)
    else:
        t_init = args.threshold if args.t_init is None else args.t_init
        nms = 2.0 * args.step_dist if args.nms_radius is None else args.nms_radius
        seeds = extract_peaks(field, t_init, nms)
        if not seeds:
            print(json.dumps({"error": "no seeds above threshold"}), file=sys.stderr)
            return 1
        state = init_from_seeds(field, seeds, params)
    merged = run(state)
    inferred = extract_inferred(merged, state.base_edges)
    write_graph_json(inferred, args.out)
    if args.merged_out:
        write_graph_json(merged, args.merged_out)
    print(json.dumps({
        "steps": state.steps_taken,
        "inferred_vertices": inferred.n_vertices,
        "inferred_edges": inferred.n_edges,
        "hit_step_cap": state.hit_step_cap,
    }))
    return 0


def _cmd_prune(args) -> int:
    g = read_graph_json(args.graph)
    params = PruneParams(
        cell_size=args.r,
        min_cell_vertices=args.min_cell,
        min_separation=args.R,
        trim=args.trim,
    )
    centers = grid_cluster(g, params)
    major = prune_major(g, centers, params)
    write_graph_json(major, args.out)
    print(json.dumps({
        "centers": len(centers.vertex_ids),
        "retained_edges": major.n_edges,
        "input_edges": g.n_edges,
    }))
    return 0


def _cmd_rank(args) -> int:
    inferred = read_graph_json(args.inferred)
    base = read_graph_json(args.base)
    for idx, rc in enumerate(score_components(inferred, base, args.weight)):
        lo, hi = rc.bbox
        print(json.dumps({
            "rank": idx,
            "score": rc.score,
            "area": rc.area,
            "connections": rc.connections,
            "vertices": rc.graph.n_vertices,
            "edges": rc.graph.n_edges,
            "bbox": [lo.x, lo.y, hi.x, hi.y],
        }))
    return 0


def _cmd_eval_topo(args) -> int:
    inferred = read_graph_json(args.inferred)
    truth = read_graph_json(args.truth)
    params = TopoParams(
        origin_spacing=args.origin_spacing,
        match_radius=args.match_radius,
        travel_radius=args.travel_radius,
        marble_spacing=args.marble_spacing,
        max_origins=args.max_origins,
        seed=args.seed,
    )
    result = topo_compare(inferred, truth, params)
    if args.per_origin:
        lines = ["x,y,matched,precision,recall"]
        for o in result.origins:
            p = "" if o.precision is None else f"{o.precision:.6f}"
            lines.append(f"{o.origin.x:.3f},{o.origin.y:.3f},{int(o.matched)},{p},{o.recall:.6f}")
        Path(args.per_origin).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(json.dumps({
        "precision": result.precision,
        "recall": result.recall,
        "origins": len(result.origins),
    }))
    return 0


def _cmd_eval_rge(args) -> int:
    added = read_graph_json(args.added)
    truth = read_graph_json(args.truth)
    mean_err, max_err = rge(added, truth, args.spacing)
    print(json.dumps({"rge": mean_err, "max_rge": max_err}))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
