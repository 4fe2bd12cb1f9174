from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from dialplan.agentspec import spec_to_doc
from dialplan.executor import ExecutionSession, TraceLog, snapshot_at
from dialplan.gateway import AgentBundle, build_app

from test_executor import INSPECTION_REPLIES, drive_inspection


@pytest.fixture(scope="module")
def car_bundle_obj(car_compiled, car_controller):
    return AgentBundle(
        car_compiled.domain,
        car_compiled.problem,
        car_controller,
        car_compiled.manifest,
        spec_doc=spec_to_doc(car_compiled.spec),
    )


@pytest.fixture(scope="module")
def client(car_bundle_obj):
    return TestClient(build_app({"car": car_bundle_obj}))


@pytest.fixture(scope="module")
def finished_trace(car_compiled, car_controller) -> list:
    session = drive_inspection(
        ExecutionSession(
            car_compiled.domain, car_compiled.problem, car_controller,
            car_compiled.manifest,
        )
    )
    return session.trace.records


class TestAgentResources:
    def test_list_agents(self, client):
        agents = client.get("/agents").json()
        assert agents[0]["id"] == "car"
        assert agents[0]["name"] == "Car-Inspection"

    def test_graph_payload_carries_scope_and_type(self, client, car_controller):
        graph = client.get("/agents/car/graph").json()
        assert graph["n0"] == car_controller.n0
        assert len(graph["nodes"]) == len(car_controller.states)
        assert len(graph["edges"]) == len(car_controller.edges)
        types = {node["type"] for node in graph["nodes"]}
        assert types == {"root", "goal", "regular"}
        assert all(node["scope"] in ("dialogue", "system", "web") for node in graph["nodes"])
        roots = [n for n in graph["nodes"] if n["type"] == "root"]
        assert len(roots) == 1 and roots[0]["id"] == car_controller.n0
        goal_ids = {n["id"] for n in graph["nodes"] if n["is_goal"]}
        assert goal_ids == set(car_controller.goal_nodes)

    def test_spec_export(self, client):
        doc = client.get("/agents/car/spec").json()
        assert doc["agent"] == "Car-Inspection"

    def test_unknown_agent_404(self, client):
        assert client.get("/agents/nope/graph").status_code == 404


class TestLiveSessions:
    def test_create_starts_at_step_zero(self, client, car_controller):
        created = client.post("/agents/car/sessions", json={"mode": "live"}).json()
        assert created["snapshot"]["step"] == 0
        assert created["snapshot"]["node"] == car_controller.n0

    def test_utterance_steps_and_streams(self, client):
        created = client.post("/agents/car/sessions", json={"mode": "live"}).json()
        sid = created["session_id"]
        with client.websocket_connect(f"/sessions/{sid}/events") as ws:
            hello = ws.receive_json()
            assert hello["type"] == "hello"
            response = client.post(
                f"/sessions/{sid}/utterance", json={"text": "check the oil"}
            ).json()
            assert len(response["records"]) == 1
            event = ws.receive_json()
            assert event["type"] == "step"
            assert event["record"]["edge"].endswith("oil__check-oil_status-eq-found")

    def test_full_live_conversation(self, client):
        sid = client.post("/agents/car/sessions", json={"mode": "live"}).json()["session_id"]
        replies = {k: list(v) for k, v in INSPECTION_REPLIES.items()}
        done = False
        for _ in range(20):
            info = client.get(f"/sessions/{sid}").json()
            if info.get("done"):
                done = True
                break
            action = None
            if info.get("awaiting_input"):
                # find the pending action through the graph payload
                node = info["snapshot"]["node"]
                graph = client.get("/agents/car/graph").json()
                action = next(n["action"] for n in graph["nodes"] if n["id"] == node)
            queue = replies.get(action, [])
            text = queue.pop(0) if queue else "hmm"
            result = client.post(f"/sessions/{sid}/utterance", json={"text": text}).json()
            if result["done"]:
                done = True
                break
        assert done
        trace = client.get(f"/sessions/{sid}/trace").json()["path"]
        assert trace[-1]["edge"].endswith("end_conversation-outcome-fallback__")

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/zzz").status_code == 404


class TestReplaySessions:
    @pytest.fixture()
    def replay_session(self, client, finished_trace):
        text = "\n".join(r.to_json_line() for r in finished_trace)
        created = client.post(
            "/agents/car/sessions", json={"mode": "replay", "trace": text}
        )
        assert created.status_code == 200
        return created.json(), finished_trace

    def test_trace_path_matches_log_with_multiplicity(self, replay_session, client):
        created, records = replay_session
        path = client.get(f"/sessions/{created['session_id']}/trace").json()["path"]
        assert [(p["from"], p["edge"], p["to"]) for p in path] == [
            (r.node, r.edge, r.next_node) for r in records
        ]
        # the same (node, edge) pair appears as often as it was traversed
        state_message_edges = [
            p for p in path if p["edge"].endswith("state-message-outcome-fallback__")
        ]
        assert len(state_message_edges) == 3

    def test_snapshot_at_step_k_equals_prefix_execution(
        self, replay_session, client, car_compiled, car_controller
    ):
        created, records = replay_session
        sid = created["session_id"]
        for k in range(len(records) + 1):
            payload = client.get(f"/sessions/{sid}/steps/{k}").json()
            expected = snapshot_at(
                car_compiled.domain, car_compiled.problem, car_controller,
                car_compiled.manifest, records, k,
            )
            assert payload["snapshot"]["state"] == sorted(expected.state)
            assert payload["snapshot"]["node"] == expected.node

    def test_replay_sessions_reject_utterances(self, replay_session, client):
        created, _records = replay_session
        response = client.post(
            f"/sessions/{created['session_id']}/utterance", json={"text": "hi"}
        )
        assert response.status_code == 409

    def test_divergent_trace_rejected(self, client, finished_trace):
        doc = json.loads(finished_trace[0].to_json_line())
        doc["edge"] = doc["edge"].replace("oil", "what")
        response = client.post(
            "/agents/car/sessions",
            json={"mode": "replay", "trace": json.dumps(doc)},
        )
        assert response.status_code == 400

    def test_step_out_of_range(self, replay_session, client):
        created, records = replay_session
        response = client.get(
            f"/sessions/{created['session_id']}/steps/{len(records) + 5}"
        )
        assert response.status_code == 422
