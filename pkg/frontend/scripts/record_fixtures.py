#!/usr/bin/env python3
"""Record event-stream fixtures from the real session service.

The UI contract tests fold these streams and compare against the session
state the service reported, so the fixtures must come from actual runs.
Regenerate with:  python3 frontend/scripts/record_fixtures.py
"""

import json
import pathlib

from fastapi.testclient import TestClient

from qbench.service import create_app

OUT = pathlib.Path(__file__).parent.parent / "test" / "fixtures"


def drain(client, sid):
    events = []
    with client.stream(
        "GET", f"/sessions/{sid}/events", params={"from": 0, "idle_ms": 200}
    ) as resp:
        buf = ""
        for chunk in resp.iter_text():
            buf += chunk
            while "\n\n" in buf:
                block, buf = buf.split("\n\n", 1)
                data = [l[6:] for l in block.split("\n") if l.startswith("data: ")]
                if data:
                    events.append(json.loads(data[0]))
    return events


def record(client, name, scene, seed, actions):
    sid = client.post("/sessions", json={"scene": scene, "seed": seed}).json()["id"]
    for action in actions:
        if action[0] == "set":
            _, component, value = action
            r = client.patch(
                f"/sessions/{sid}/components/{component}",
                json={"param": "angle_deg", "value": value, "interactive": True},
            )
            assert r.status_code == 200, r.text
        elif action[0] == "fire":
            r = client.post(f"/sessions/{sid}/fire", json={"shots": action[1]})
            assert r.status_code == 202, r.text
    state = client.get(f"/sessions/{sid}").json()
    fixture = {
        "scene": scene,
        "seed": seed,
        "events": drain(client, sid),
        "final_counts": state["counts"],
        "final_shots": state["shots"],
        "scene_doc": state["scene"],
    }
    OUT.mkdir(parents=True, exist_ok=True)
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(fixture, indent=1, sort_keys=True) + "\n")
    print(f"wrote {path} ({len(fixture['events'])} events)")


def main():
    client = TestClient(create_app())
    record(
        client,
        "single_qubit_fire",
        "single-qubit-gate",
        seed=2024,
        actions=[("set", "hwp", 23), ("fire", 1)],
    )
    record(
        client,
        "cnot_heralding",
        "heralded-cnot",
        seed=31,
        actions=[("fire", 24)],
    )
    record(
        client,
        "projective_counts",
        "projective-measurement",
        seed=77,
        actions=[("set", "prep_hwp", 25), ("fire", 40), ("set", "analysis_hwp", 25), ("fire", 40)],
    )
    record(
        client,
        "heralded_batch",
        "heralded",
        seed=5,
        actions=[("fire", 300)],
    )


if __name__ == "__main__":
    main()
