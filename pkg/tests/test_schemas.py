"""Machine-readable outputs validate against the shipped schemas."""

import json
from importlib import resources

import jsonschema
import pytest
from fastapi.testclient import TestClient

from qbench.cli import main
from qbench.scene import BUILTIN_SCENE_NAMES, builtin_scene_document
from qbench.service import create_app


def schema(name):
    text = resources.files("qbench.schemas").joinpath(name).read_text()
    return json.loads(text)


def cli_json(capsys, *argv):
    assert main(list(argv)) == 0
    return json.loads(capsys.readouterr().out)


def test_run_output_schema(capsys):
    doc = cli_json(capsys, "run", "heralded", "--shots", "50", "--seed", "1")
    jsonschema.validate(doc, schema("counts_run.schema.json"))


def test_amplitudes_output_schema(capsys):
    doc = cli_json(capsys, "amplitudes", "heralded-cnot")
    jsonschema.validate(doc, schema("amplitudes.schema.json"))


def test_tomography_output_schema(capsys):
    doc = cli_json(capsys, "tomography", "--exact", "--seed", "2")
    jsonschema.validate(doc, schema("tomography.schema.json"))


def test_decompose_output_schema(capsys, tmp_path):
    f = tmp_path / "u.json"
    f.write_text(json.dumps({"matrix": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}))
    doc = cli_json(capsys, "decompose", str(f))
    jsonschema.validate(doc, schema("decompose.schema.json"))


def test_cnot_report_schema(capsys):
    doc = cli_json(capsys, "run", "heralded-cnot", "--exact")
    jsonschema.validate(doc, schema("cnot_report.schema.json"))


@pytest.mark.parametrize("name", BUILTIN_SCENE_NAMES)
def test_shipped_scene_documents_schema(name):
    doc = json.loads(builtin_scene_document(name))
    jsonschema.validate(doc, schema("scene.schema.json"))


def test_service_events_schema():
    client = TestClient(create_app())
    sid = client.post("/sessions", json={"scene": "heralded-cnot", "seed": 5}).json()["id"]
    client.patch(
        f"/sessions/{sid}/components/c_hwp", json={"param": "angle_deg", "value": 20, "interactive": True}
    )
    client.post(f"/sessions/{sid}/fire", json={"shots": 60})
    event_schema = schema("event.schema.json")
    events = []
    with client.stream(
        "GET", f"/sessions/{sid}/events", params={"from": 0, "idle_ms": 150}
    ) as resp:
        buf = ""
        for chunk in resp.iter_text():
            buf += chunk
            while "\n\n" in buf:
                block, buf = buf.split("\n\n", 1)
                data = [l[6:] for l in block.split("\n") if l.startswith("data: ")]
                if data:
                    events.append(json.loads(data[0]))
    assert events
    kinds = set()
    for event in events:
        jsonschema.validate(event, event_schema)
        kinds.add(event["kind"])
    assert {"param_changed", "photon_emitted", "herald", "batch"} <= kinds
