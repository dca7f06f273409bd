"""Session service for machine-assisted editing.

A session loads a base map and a direction field, traces the unmapped roads,
splits the result into clickable segments (maximal degree-<=2 chains), ranks
components for teleporting, and records accept/reject decisions. State is
persisted as a snapshot plus an append-only action log so a restart replays
to exactly the pre-crash state.
"""

from __future__ import annotations

import json
import threading
import uuid
import warnings
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .field import read_field
from .graph import (
    Point,
    RoadGraph,
    edge_chains,
    edge_key,
    graph_to_geojson,
    graph_to_json,
    graph_from_json,
    read_graph_json,
    GraphFormatError,
)
from .pruning import PruneParams, grid_cluster, prune_major
from .search import SearchParams, extract_inferred, init_from_basemap, run
from .teleport import score_components

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"


@dataclass
class Segment:
    id: str
    vertices: list[int]
    points: list[tuple[float, float]]
    status: str = PENDING
    major: bool = False  # survives the major-road pruning overlay
    component: int = -1  # index into the ranked component list


@dataclass
class Session:
    id: str
    base: RoadGraph
    inferred: RoadGraph
    segments: dict[str, Segment]
    ranked: list
    params: dict
    teleports_taken: int = 0
    lock: threading.Lock = dc_field(default_factory=threading.Lock)


class SessionError(Exception):
    def __init__(self, status_code: int, detail: str):
        self.status_code = status_code
        self.detail = detail
        super().__init__(detail)


class SessionStore:
    """Disk-backed store: one directory per session with snapshot + action log."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        for snap in sorted(self.data_dir.glob("*/snapshot.json")):
            session = self._load(snap.parent)
            self._sessions[session.id] = session

    # -- lifecycle -----------------------------------------------------------

    def create(
        self,
        base_graph_path: str,
        field_path: str,
        search_params: SearchParams,
        prune_params: PruneParams,
        rank_weight: float,
    ) -> Session:
        base_file = self._resolve(base_graph_path)
        field_file = self._resolve(field_path)
        try:
            base = read_graph_json(base_file)
        except (OSError, GraphFormatError, ValueError) as exc:
            raise SessionError(400, f"base graph unreadable: {exc}") from exc
        try:
            field = read_field(field_file)
        except (OSError, ValueError) as exc:
            raise SessionError(400, f"direction field unreadable: {exc}") from exc
        if base.n_vertices == 0:
            raise SessionError(400, "base graph is empty")
        if not _covers(field, base):
            raise SessionError(400, "field does not cover the base graph region")

        state = init_from_basemap(field, base, search_params)
        merged = run(state)
        inferred = extract_inferred(merged, state.base_edges)

        if inferred.n_edges:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # tiny regions rarely have far-apart centres
                major = prune_major(inferred, grid_cluster(inferred, prune_params), prune_params)
            major_edges = set(major.edges)
        else:
            major_edges = set()
        ranked = score_components(inferred, base, rank_weight)
        comp_of_vertex: dict[int, int] = {}
        for idx, rc in enumerate(ranked):
            for v in rc.graph.vertices:
                comp_of_vertex[v] = idx

        segments: dict[str, Segment] = {}
        for k, chain in enumerate(edge_chains(inferred)):
            sid = f"s{k:04d}"
            is_major = any(
                edge_key(u, v) in major_edges for u, v in zip(chain, chain[1:])
            )
            segments[sid] = Segment(
                id=sid,
                vertices=list(chain),
                points=[(inferred.vertices[v].x, inferred.vertices[v].y) for v in chain],
                major=is_major,
                component=comp_of_vertex.get(chain[0], -1),
            )

        session = Session(
            id=uuid.uuid4().hex[:12],
            base=base,
            inferred=inferred,
            segments=segments,
            ranked=ranked,
            params={
                "search": {
                    "step_dist": search_params.step_dist,
                    "threshold": search_params.threshold,
                },
                "prune": {
                    "cell_size": prune_params.cell_size,
                    "min_cell_vertices": prune_params.min_cell_vertices,
                    "min_separation": prune_params.min_separation,
                    "trim": prune_params.trim,
                },
                "rank_weight": rank_weight,
            },
        )
        self._persist(session)
        self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionError(404, f"unknown session {session_id!r}") from None

    def _resolve(self, relative: str) -> Path:
        p = (self.data_dir / relative).resolve()
        if not p.is_relative_to(self.data_dir.resolve()):
            raise SessionError(400, "paths must stay inside the data directory")
        return p

    # -- actions ---------------------------------------------------------------

    def act(self, session_id: str, segment_id: str, action: str) -> Segment:
        session = self.get(session_id)
        with session.lock:
            seg = session.segments.get(segment_id)
            if seg is None:
                raise SessionError(404, f"unknown segment {segment_id!r}")
            if seg.status != PENDING:
                raise SessionError(
                    409, f"segment {segment_id} already {seg.status}; only pending segments accept actions"
                )
            seg.status = ACCEPTED if action == "accept" else REJECTED
            self._append_log(session, {"action": action, "segment": segment_id})
            return seg

    def teleport(self, session_id: str) -> dict:
        session = self.get(session_id)
        with session.lock:
            result = _advance_teleport(session)
            self._append_log(session, {"action": "teleport"})
            return result

    # -- persistence -------------------------------------------------------------

    def _session_dir(self, session_id: str) -> Path:
        return self.data_dir / session_id

    def _persist(self, session: Session) -> None:
        sdir = self._session_dir(session.id)
        sdir.mkdir(parents=True, exist_ok=True)
        snapshot = {
            "id": session.id,
            "params": session.params,
            "base": graph_to_json(session.base),
            "inferred": graph_to_json(session.inferred),
            "segments": [
                {
                    "id": s.id,
                    "vertices": s.vertices,
                    "points": s.points,
                    "major": s.major,
                    "component": s.component,
                }
                for s in session.segments.values()
            ],
        }
        (sdir / "snapshot.json").write_text(json.dumps(snapshot), encoding="utf-8")
        (sdir / "actions.log").touch()

    def _append_log(self, session: Session, entry: dict) -> None:
        log = self._session_dir(session.id) / "actions.log"
        with log.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    def _load(self, sdir: Path) -> Session:
        snapshot = json.loads((sdir / "snapshot.json").read_text(encoding="utf-8"))
        base = graph_from_json(snapshot["base"])
        inferred = graph_from_json(snapshot["inferred"])
        ranked = score_components(inferred, base, snapshot["params"]["rank_weight"])
        segments = {
            s["id"]: Segment(
                id=s["id"],
                vertices=list(s["vertices"]),
                points=[tuple(p) for p in s["points"]],
                major=bool(s["major"]),
                component=int(s["component"]),
            )
            for s in snapshot["segments"]
        }
        session = Session(
            id=snapshot["id"],
            base=base,
            inferred=inferred,
            segments=segments,
            ranked=ranked,
            params=snapshot["params"],
        )
        log = sdir / "actions.log"
        if log.exists():
            for line in log.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry["action"] in ("accept", "reject"):
                    seg = session.segments[entry["segment"]]
                    seg.status = ACCEPTED if entry["action"] == "accept" else REJECTED
                elif entry["action"] == "teleport":
                    _advance_teleport(session)
        return session


def _covers(field, base: RoadGraph) -> bool:
    """Sanity check that the field and graph plausibly share a frame."""
    if base.n_vertices == 0:
        return True
    lo, hi = base.bbox()
    grid = field.grid
    half = grid.cell_size / 2.0
    fx0 = grid.origin.x - half
    fy0 = grid.origin.y - half
    fx1 = grid.origin.x + (grid.width - 1) * grid.cell_size + half
    fy1 = grid.origin.y + (grid.height - 1) * grid.cell_size + half
    return not (hi.x < fx0 or lo.x > fx1 or hi.y < fy0 or lo.y > fy1)


def _component_resolved(session: Session, comp_idx: int) -> bool:
    segs = [s for s in session.segments.values() if s.component == comp_idx]
    return bool(segs) and all(s.status != PENDING for s in segs)


def _advance_teleport(session: Session) -> dict:
    """Next unvisited component with work left; skipped ones count as visited."""
    while session.teleports_taken < len(session.ranked):
        idx = session.teleports_taken
        session.teleports_taken += 1
        if _component_resolved(session, idx):
            continue
        rc = session.ranked[idx]
        seg_ids = sorted(
            s.id for s in session.segments.values() if s.component == idx
        )
        (lo, hi) = rc.bbox
        return {
            "exhausted": False,
            "component": idx,
            "score": rc.score,
            "area": rc.area,
            "connections": rc.connections,
            "bbox": [lo.x, lo.y, hi.x, hi.y],
            "segment_ids": seg_ids,
        }
    return {"exhausted": True}


def _export_graph(session: Session) -> RoadGraph:
    """Base map plus accepted segments; junction ids shared with the base."""
    vertices: dict[int, Point] = dict(session.base.vertices)
    edges = set(session.base.edges)
    for seg in session.segments.values():
        if seg.status != ACCEPTED:
            continue
        for v, (x, y) in zip(seg.vertices, seg.points):
            if v not in vertices:
                vertices[v] = Point(x, y)
        for u, v in zip(seg.vertices, seg.vertices[1:]):
            edges.add(edge_key(u, v))
    return RoadGraph(vertices, edges, session.base.frame)


# -- HTTP surface ---------------------------------------------------------------


class CreateSessionRequest(BaseModel):
    base_graph: str = Field(description="graph-json file, relative to the data dir")
    field: str = Field(description="dirfield file, relative to the data dir")
    step_dist: float = 12.0
    threshold: float = 0.4
    prune_cell_size: float = 1000.0
    prune_min_cell_vertices: int = 10
    prune_min_separation: float = 5000.0
    prune_trim: float = 500.0
    rank_weight: float = 1_000_000.0


def create_app(data_dir: str | Path) -> FastAPI:
    store = SessionStore(data_dir)
    app = FastAPI(title="roadweave sessions")
    app.state.store = store

    def _http(exc: SessionError) -> HTTPException:
        return HTTPException(status_code=exc.status_code, detail=exc.detail)

    @app.post("/sessions")
    def create_session(req: CreateSessionRequest):
        try:
            search_params = SearchParams(step_dist=req.step_dist, threshold=req.threshold)
            prune_params = PruneParams(
                cell_size=req.prune_cell_size,
                min_cell_vertices=req.prune_min_cell_vertices,
                min_separation=req.prune_min_separation,
                trim=req.prune_trim,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            session = store.create(
                req.base_graph, req.field, search_params, prune_params, req.rank_weight
            )
        except SessionError as exc:
            raise _http(exc) from exc
        return {"id": session.id, "segments": len(session.segments)}

    @app.get("/sessions/{session_id}/status")
    def status(session_id: str):
        try:
            session = store.get(session_id)
        except SessionError as exc:
            raise _http(exc) from exc
        counts = {PENDING: 0, ACCEPTED: 0, REJECTED: 0}
        for seg in session.segments.values():
            counts[seg.status] += 1
        return {
            "id": session.id,
            "state": "ready",
            "segments": counts,
            "components": len(session.ranked),
            "teleports_taken": session.teleports_taken,
            "params": session.params,
        }

    @app.get("/sessions/{session_id}/overlay")
    def overlay(session_id: str, pruned: int = 0):
        try:
            session = store.get(session_id)
        except SessionError as exc:
            raise _http(exc) from exc
        segments = []
        for seg in sorted(session.segments.values(), key=lambda s: s.id):
            if seg.status == REJECTED:
                continue
            if pruned and seg.status == PENDING and not seg.major:
                continue
            segments.append(
                {
                    "id": seg.id,
                    "status": seg.status,
                    "major": seg.major,
                    "component": seg.component,
                    "points": [[x, y] for x, y in seg.points],
                }
            )
        return {"session": session.id, "pruned": bool(pruned), "segments": segments}

    @app.get("/sessions/{session_id}/base")
    def base(session_id: str):
        try:
            session = store.get(session_id)
        except SessionError as exc:
            raise _http(exc) from exc
        return graph_to_json(session.base)

    @app.post("/sessions/{session_id}/segments/{segment_id}/accept")
    def accept(session_id: str, segment_id: str):
        try:
            seg = store.act(session_id, segment_id, "accept")
        except SessionError as exc:
            raise _http(exc) from exc
        return {"id": seg.id, "status": seg.status}

    @app.post("/sessions/{session_id}/segments/{segment_id}/reject")
    def reject(session_id: str, segment_id: str):
        try:
            seg = store.act(session_id, segment_id, "reject")
        except SessionError as exc:
            raise _http(exc) from exc
        return {"id": seg.id, "status": seg.status}

    @app.post("/sessions/{session_id}/teleport")
    def teleport(session_id: str):
        try:
            return store.teleport(session_id)
        except SessionError as exc:
            raise _http(exc) from exc

    @app.get("/sessions/{session_id}/export")
    def export(session_id: str, format: str = "graph-json"):
        try:
            session = store.get(session_id)
        except SessionError as exc:
            raise _http(exc) from exc
        with session.lock:
            g = _export_graph(session)
        if format == "graph-json":
            return graph_to_json(g)
        if format == "geojson":
            return graph_to_geojson(g)
        raise HTTPException(status_code=400, detail=f"unknown export format {format!r}")

    return app
