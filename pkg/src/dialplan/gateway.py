"""HTTP + WebSocket service exposing compiled agents, live chat sessions,
and trace replay to the diagnostic frontend.

Wire format: JSON over HTTP for resources, JSON messages over a WebSocket
for live step events (see docs/wire-formats.md). Sessions are in-memory;
live traces use the executor's line-delimited log format, so anything the
UI shows can be replayed offline with ``dialplan replay``.
"""

from __future__ import annotations

import asyncio
import itertools
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .compiler import ExecutionManifest
from .errors import DialplanError, ExecutionError
from .executor import (
    ExecutionSession,
    Snapshot,
    StepRecord,
    TraceLog,
    replay as replay_trace,
    snapshot_at,
)
from .pddl import DomainDef, ProblemDef
from .planner import Controller


@dataclass(slots=True)
class AgentBundle:
    domain: DomainDef
    problem: ProblemDef
    controller: Controller
    manifest: ExecutionManifest
    spec_doc: dict | None = None


class CreateSession(BaseModel):
    mode: str = "live"
    trace: str | None = None


class Utterance(BaseModel):
    text: str = ""


@dataclass(slots=True)
class GatewaySession:
    session_id: str
    agent_id: str
    mode: str
    executor: ExecutionSession | None = None
    records: list[StepRecord] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)
    listeners: list[asyncio.Queue] = field(default_factory=list)


def snapshot_doc(snapshot: Snapshot) -> dict:
    return {
        "state": sorted(snapshot.state),
        "context": dict(sorted(snapshot.context.items())),
        "node": snapshot.node,
        "step": snapshot.step,
    }


def record_doc(record: StepRecord) -> dict:
    return {name: getattr(record, name) for name in StepRecord.FIELD_ORDER}


def graph_doc(bundle: AgentBundle) -> dict:
    controller = bundle.controller
    manifest = bundle.manifest
    scopes: dict[int, str] = {}
    for node in sorted(controller.states):
        action = controller.actmap.get(node)
        if action is not None:
            scopes[node] = manifest.actions[action]["kind"]
    # a goal node has no action of its own; it inherits the scope of the
    # (deterministically smallest) node whose action leads into it
    for (frm, _key), to in sorted(controller.edges.items()):
        if to in controller.goal_nodes and to not in scopes and frm in scopes:
            scopes[to] = scopes[frm]
    nodes = []
    for node in sorted(controller.states):
        action = controller.actmap.get(node)
        binding = manifest.actions.get(action) if action else None
        if node in controller.goal_nodes:
            node_type = "goal"
        elif node == controller.n0:
            node_type = "root"
        else:
            node_type = "regular"
        nodes.append({
            "id": node,
            "action": action,
            "short_name": binding["short_name"] if binding else None,
            "utterance": binding.get("utterance") if binding else None,
            "scope": scopes.get(node, "system"),
            "type": node_type,
            "is_root": node == controller.n0,
            "is_goal": node in controller.goal_nodes,
        })
    edges = [
        {
            "from": frm,
            "key": key,
            "labels": [part.partition("=")[2] for part in key.split(";") if part],
            "to": to,
        }
        for (frm, key), to in sorted(controller.edges.items())
    ]
    return {
        "agent": manifest.agent,
        "n0": controller.n0,
        "goal_nodes": sorted(controller.goal_nodes),
        "nodes": nodes,
        "edges": edges,
    }


def trace_path_doc(records: list[StepRecord]) -> list[dict]:
    """The exact (node, edge) sequence of the log; repeats keep multiplicity."""
    return [
        {
            "step": r.step,
            "from": r.node,
            "edge": r.edge,
            "to": r.next_node,
            "action": r.action,
            "utterances": r.utterances,
        }
        for r in records
    ]


def build_app(bundles: dict[str, AgentBundle]) -> FastAPI:
    app = FastAPI(title="dialplan gateway")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions: dict[str, GatewaySession] = {}
    counter = itertools.count(1)

    def get_bundle(agent_id: str) -> AgentBundle:
        if agent_id not in bundles:
            raise HTTPException(404, f"unknown agent {agent_id!r}")
        return bundles[agent_id]

    def get_session(session_id: str) -> GatewaySession:
        if session_id not in sessions:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return sessions[session_id]

    async def broadcast(session: GatewaySession, message: dict) -> None:
        for queue in list(session.listeners):
            await queue.put(message)

    @app.get("/agents")
    def list_agents() -> list[dict]:
        return [
            {
                "id": agent_id,
                "name": bundle.manifest.agent,
                "actions": len(bundle.manifest.actions),
                "nodes": len(bundle.controller.states),
            }
            for agent_id, bundle in bundles.items()
        ]

    @app.get("/agents/{agent_id}/graph")
    def agent_graph(agent_id: str) -> dict:
        return graph_doc(get_bundle(agent_id))

    @app.get("/agents/{agent_id}/spec")
    def agent_spec(agent_id: str) -> dict:
        bundle = get_bundle(agent_id)
        if bundle.spec_doc is None:
            raise HTTPException(404, "no spec export available for this agent")
        return bundle.spec_doc

    @app.post("/agents/{agent_id}/sessions")
    def create_session(agent_id: str, body: CreateSession) -> dict:
        bundle = get_bundle(agent_id)
        session_id = f"s{next(counter)}"
        if body.mode == "live":
            executor = ExecutionSession(
                bundle.domain, bundle.problem, bundle.controller, bundle.manifest
            )
            session = GatewaySession(session_id, agent_id, "live", executor=executor)
            session.snapshots = [executor.snapshot]
        elif body.mode == "replay":
            if not body.trace:
                raise HTTPException(422, "replay sessions need a trace")
            records = [
                StepRecord.from_json_line(line)
                for line in body.trace.splitlines()
                if line.strip()
            ]
            report = replay_trace(
                bundle.domain, bundle.problem, bundle.controller, bundle.manifest, records
            )
            if not report.consistent:
                raise HTTPException(
                    400, {"message": "trace diverges", "divergences": report.divergences}
                )
            session = GatewaySession(session_id, agent_id, "replay")
            session.records = records
            session.snapshots = report.snapshots
        else:
            raise HTTPException(422, f"unknown mode {body.mode!r}")
        sessions[session_id] = session
        return {
            "session_id": session_id,
            "mode": session.mode,
            "snapshot": snapshot_doc(session.snapshots[0]),
            "steps": len(session.records),
        }

    @app.get("/sessions/{session_id}")
    def session_info(session_id: str) -> dict:
        session = get_session(session_id)
        current = (
            session.executor.snapshot if session.executor else session.snapshots[-1]
        )
        doc = {
            "session_id": session.session_id,
            "agent": session.agent_id,
            "mode": session.mode,
            "steps": len(session.records),
            "snapshot": snapshot_doc(current),
        }
        if session.executor is not None:
            doc["done"] = session.executor.done
            doc["awaiting_input"] = session.executor.awaiting_input
            doc["prompt"] = session.executor.prompt()
        return doc

    @app.get("/sessions/{session_id}/steps/{k}")
    def session_step(session_id: str, k: int) -> dict:
        session = get_session(session_id)
        bundle = get_bundle(session.agent_id)
        try:
            snapshot = snapshot_at(
                bundle.domain, bundle.problem, bundle.controller, bundle.manifest,
                session.records, k,
            )
        except ExecutionError as exc:
            raise HTTPException(422, str(exc)) from exc
        return {"step": k, "snapshot": snapshot_doc(snapshot)}

    @app.get("/sessions/{session_id}/trace")
    def session_trace(session_id: str) -> dict:
        session = get_session(session_id)
        return {"path": trace_path_doc(session.records)}

    @app.post("/sessions/{session_id}/utterance")
    async def post_utterance(session_id: str, body: Utterance) -> dict:
        session = get_session(session_id)
        if session.mode != "live":
            raise HTTPException(409, "replay sessions are read-only")
        executor = session.executor
        if executor.done:
            raise HTTPException(409, "conversation complete")
        new_records: list[StepRecord] = []
        try:
            if not executor.awaiting_input:
                new_records.extend(executor.run_auto())
            if not executor.done and executor.awaiting_input:
                new_records.append(executor.step(body.text))
                new_records.extend(executor.run_auto())
        except DialplanError as exc:
            raise HTTPException(500, str(exc)) from exc
        session.records.extend(new_records)
        session.snapshots.append(executor.snapshot)
        for record in new_records:
            await broadcast(session, {"type": "step", "record": record_doc(record)})
        if executor.done:
            await broadcast(session, {"type": "done", "step": executor.snapshot.step})
        return {
            "records": [record_doc(r) for r in new_records],
            "snapshot": snapshot_doc(executor.snapshot),
            "done": executor.done,
            "prompt": executor.prompt(),
            "awaiting_input": executor.awaiting_input,
        }

    @app.websocket("/sessions/{session_id}/events")
    async def session_events(websocket: WebSocket, session_id: str) -> None:
        if session_id not in sessions:
            await websocket.close(code=4404)
            return
        session = sessions[session_id]
        await websocket.accept()
        queue: asyncio.Queue = asyncio.Queue()
        session.listeners.append(queue)
        try:
            await websocket.send_json({
                "type": "hello",
                "session_id": session_id,
                "steps": len(session.records),
            })
            while True:
                message = await queue.get()
                await websocket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            if queue in session.listeners:
                session.listeners.remove(queue)

    return app
