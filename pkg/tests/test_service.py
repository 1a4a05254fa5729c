"""Session service: lifecycle, mutation, firing, event stream, replay."""

import json
import threading
import time

import pytest
from fastapi.testclient import TestClient

from qbench.service import create_app


@pytest.fixture()
def client():
    return TestClient(create_app())


def create_session(client, scene="single-qubit-gate", seed=42):
    r = client.post("/sessions", json={"scene": scene, "seed": seed})
    assert r.status_code == 201
    return r.json()["id"]


def drain_events(client, sid, start=0, idle_ms=150):
    events = []
    with client.stream(
        "GET", f"/sessions/{sid}/events", params={"from": start, "idle_ms": idle_ms}
    ) as resp:
        assert resp.status_code == 200
        buf = ""
        for chunk in resp.iter_text():
            buf += chunk
            while "\n\n" in buf:
                block, buf = buf.split("\n\n", 1)
                if block.startswith(":") or not block.strip():
                    continue
                data = [l[6:] for l in block.split("\n") if l.startswith("data: ")]
                if data:
                    events.append(json.loads(data[0]))
    return events


# ---------------------------------------------------------------------------
# lifecycle


def test_create_and_read_session(client):
    sid = create_session(client)
    state = client.get(f"/sessions/{sid}").json()
    assert state["scene_name"] == "single-qubit-gate"
    assert state["shots"] == 0
    assert state["seq"] == 0


def test_distinct_ids(client):
    assert create_session(client) != create_session(client)


def test_unknown_session_404(client):
    r = client.get("/sessions/nothere")
    assert r.status_code == 404
    assert r.json()["error"]["code"] == "reference"


def test_invalid_scene_document_422(client):
    doc = {
        "schema_version": "1",
        "components": [{"id": "a", "kind": "apd"}],
        "links": [{"from": "a.zap", "to": "a.in"}],
        "sources": [],
        "detectors": [],
    }
    r = client.post("/sessions", json={"scene": doc})
    assert r.status_code == 422
    assert r.json()["error"]["code"] == "validation"


def test_custom_scene_document_accepted(client):
    doc = {
        "schema_version": "1",
        "components": [
            {"id": "src", "kind": "photon_source"},
            {"id": "det", "kind": "apd"},
        ],
        "links": [{"from": "src.out", "to": "det.in"}],
        "sources": ["src"],
        "detectors": ["det"],
    }
    r = client.post("/sessions", json={"scene": doc, "seed": 1})
    assert r.status_code == 201


def test_delete_session(client):
    sid = create_session(client)
    assert client.delete(f"/sessions/{sid}").status_code == 204
    assert client.get(f"/sessions/{sid}").status_code == 404


def test_session_expiry():
    app = create_app(expire_seconds=0.0)
    c = TestClient(app)
    sid = create_session(c)
    time.sleep(0.02)
    c.post("/sessions", json={"scene": "heralded", "seed": 1})  # triggers sweep
    assert c.get(f"/sessions/{sid}").status_code == 404


# ---------------------------------------------------------------------------
# parameter mutation


def test_set_param_exact(client):
    sid = create_session(client)
    r = client.patch(
        f"/sessions/{sid}/components/hwp",
        json={"param": "angle_deg", "value": 22.5},
    )
    hwp = [c for c in r.json()["scene"]["components"] if c["id"] == "hwp"][0]
    assert hwp["params"]["angle_deg"] == 22.5


def test_set_param_interactive_quantizes(client):
    sid = create_session(client)
    r = client.patch(
        f"/sessions/{sid}/components/hwp",
        json={"param": "angle_deg", "value": 23, "interactive": True},
    )
    hwp = [c for c in r.json()["scene"]["components"] if c["id"] == "hwp"][0]
    assert hwp["params"]["angle_deg"] == 25.0


def test_set_param_unknown_component_404(client):
    sid = create_session(client)
    r = client.patch(
        f"/sessions/{sid}/components/ghost", json={"param": "angle_deg", "value": 5}
    )
    assert r.status_code == 404


def test_set_param_out_of_range_422(client):
    sid = create_session(client, scene="heralded")
    r = client.patch(
        f"/sessions/{sid}/components/bbo",
        json={"param": "emission_probability", "value": 7.0},
    )
    assert r.status_code == 422


def test_sessions_are_isolated(client):
    a = create_session(client)
    b = create_session(client)
    client.patch(f"/sessions/{a}/components/hwp", json={"param": "angle_deg", "value": 45})
    hwp_b = [
        c
        for c in client.get(f"/sessions/{b}").json()["scene"]["components"]
        if c["id"] == "hwp"
    ][0]
    assert hwp_b["params"]["angle_deg"] == 0.0


# ---------------------------------------------------------------------------
# firing and events


def test_fire_single_shot_plate_events(client):
    sid = create_session(client)
    r = client.post(f"/sessions/{sid}/fire", json={"shots": 1})
    assert r.status_code == 202
    events = drain_events(client, sid)
    plates = [e for e in events if e["kind"] == "plate_crossed"]
    assert len(plates) == 3
    for e in plates:
        assert abs(sum(x * x for x in e["bloch"]) - 1.0) < 1e-9


def test_fire_counts_match_detection_events(client):
    sid = create_session(client, scene="projective-measurement")
    client.patch(
        f"/sessions/{sid}/components/prep_hwp",
        json={"param": "angle_deg", "value": 22.5},
    )
    client.post(f"/sessions/{sid}/fire", json={"shots": 40})
    state = client.get(f"/sessions/{sid}").json()
    events = drain_events(client, sid)
    folded = {}
    for e in events:
        if e["kind"] == "detection":
            folded[e["detector"]] = folded.get(e["detector"], 0) + e["clicks"]
        elif e["kind"] == "batch":
            for det, n in e["per_detector"].items():
                folded[det] = folded.get(det, 0) + n
    counted = {k: v for k, v in state["counts"].items() if v}
    assert folded == counted


def test_fire_batches_large_runs(client):
    sid = create_session(client, scene="projective-measurement")
    client.post(f"/sessions/{sid}/fire", json={"shots": 500})
    events = drain_events(client, sid)
    batch = [e for e in events if e["kind"] == "batch"]
    assert len(batch) == 1
    assert batch[0]["shots"] == 450
    state = client.get(f"/sessions/{sid}").json()
    folded = sum(e["clicks"] for e in events if e["kind"] == "detection")
    folded += sum(batch[0]["per_detector"].values())
    assert folded == sum(state["counts"].values())


def test_cnot_fire_emits_herald_booleans(client):
    sid = create_session(client, scene="heralded-cnot", seed=7)
    client.post(f"/sessions/{sid}/fire", json={"shots": 20})
    events = drain_events(client, sid)
    heralds = [e for e in events if e["kind"] == "herald"]
    assert len(heralds) == 20
    assert {e["ok"] for e in heralds} <= {True, False}
    assert all(isinstance(e["pattern"], str) for e in heralds)


def test_sequence_numbers_strictly_increase(client):
    sid = create_session(client)
    client.post(f"/sessions/{sid}/fire", json={"shots": 2})
    client.patch(f"/sessions/{sid}/components/hwp", json={"param": "angle_deg", "value": 5})
    client.post(f"/sessions/{sid}/fire", json={"shots": 1})
    events = drain_events(client, sid)
    seqs = [e["seq"] for e in events]
    assert seqs == sorted(seqs)
    assert len(set(seqs)) == len(seqs)
    assert seqs[0] == 1


def test_stream_resume_no_gap_no_duplicates(client):
    sid = create_session(client)
    client.post(f"/sessions/{sid}/fire", json={"shots": 1})
    full = drain_events(client, sid)
    k = full[3]["seq"]
    resumed = drain_events(client, sid, start=k)
    assert resumed[0]["seq"] == k + 1
    assert [e["seq"] for e in resumed] == [e["seq"] for e in full if e["seq"] > k]


def test_concurrent_consumers_see_identical_streams(client):
    sid = create_session(client)
    client.post(f"/sessions/{sid}/fire", json={"shots": 1})
    results = [None, None]

    def consume(i):
        results[i] = drain_events(client, sid)

    threads = [threading.Thread(target=consume, args=(i,)) for i in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert json.dumps(results[0]) == json.dumps(results[1])


def test_quiet_stream_closes_cleanly_with_idle_limit(client):
    sid = create_session(client)
    events = drain_events(client, sid, idle_ms=100)
    assert events == []


def test_state_cumulative_counts_consistent(client):
    sid = create_session(client, scene="heralded", seed=3)
    for _ in range(3):
        client.post(f"/sessions/{sid}/fire", json={"shots": 30})
    state = client.get(f"/sessions/{sid}").json()
    assert state["shots"] == 90
    events = drain_events(client, sid)
    folded = sum(e["clicks"] for e in events if e["kind"] == "detection")
    assert folded == state["counts"]["herald_apd"]


# ---------------------------------------------------------------------------
# replay equivalence


def test_replay_reproduces_event_log_byte_for_byte(client):
    def run_session():
        sid = create_session(client, scene="projective-measurement", seed=1234)
        client.patch(
            f"/sessions/{sid}/components/prep_hwp",
            json={"param": "angle_deg", "value": 22.5},
        )
        client.post(f"/sessions/{sid}/fire", json={"shots": 25})
        client.patch(
            f"/sessions/{sid}/components/analysis_hwp",
            json={"param": "angle_deg", "value": 22.5},
        )
        client.post(f"/sessions/{sid}/fire", json={"shots": 25})
        return drain_events(client, sid)

    first = run_session()
    second = run_session()
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_fire_requires_positive_shots(client):
    sid = create_session(client)
    r = client.post(f"/sessions/{sid}/fire", json={"shots": 0})
    assert r.status_code == 422


def test_static_ui_mount(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>bench ui</body></html>")
    c = TestClient(create_app(ui_dir=str(tmp_path)))
    r = c.get("/ui/")
    assert r.status_code == 200
    assert "bench ui" in r.text


# ---------------------------------------------------------------------------
# live server: the unbounded stream pushes events as they happen


def test_live_stream_pushes_new_events():
    import socket

    import httpx
    import uvicorn

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]

    config = uvicorn.Config(
        create_app(), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        assert time.time() < deadline, "server did not start"
        time.sleep(0.01)
    base = f"http://127.0.0.1:{port}"
    try:
        sid = httpx.post(
            base + "/sessions", json={"scene": "single-qubit-gate", "seed": 7}
        ).json()["id"]

        received = []
        ready = threading.Event()

        def consume():
            with httpx.stream(
                "GET", f"{base}/sessions/{sid}/events", timeout=10
            ) as resp:
                ready.set()
                buf = ""
                for chunk in resp.iter_text():
                    buf += chunk
                    while "\n\n" in buf:
                        block, buf = buf.split("\n\n", 1)
                        data = [
                            l[6:] for l in block.split("\n") if l.startswith("data: ")
                        ]
                        if data:
                            received.append(json.loads(data[0]))
                    if len(received) >= 8:
                        return

        consumer = threading.Thread(target=consume, daemon=True)
        consumer.start()
        assert ready.wait(5)
        time.sleep(0.2)  # consumer is idle on a quiet session (keepalives only)
        httpx.post(f"{base}/sessions/{sid}/fire", json={"shots": 1})
        consumer.join(timeout=10)
        assert not consumer.is_alive()
        assert [e["seq"] for e in received] == list(range(1, 9))
        kinds = {e["kind"] for e in received}
        assert "plate_crossed" in kinds and "photon_emitted" in kinds
    finally:
        server.should_exit = True
        thread.join(timeout=5)
