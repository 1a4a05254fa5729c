"""Optical-table scene graph: components, ports, links, documents.

A scene document is UTF-8 JSON with schema_version "1" and top-level keys
{schema_version, components, links, sources, detectors, layout}.  Angles are
degrees in documents and service payloads, radians inside the engine.  The
five builtin benches ship as JSON documents that load identically to the
programmatic builders here.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

from .errors import (
    ReferenceError_,
    SceneParseError,
    UnknownSceneError,
    ValidationError,
)

SCHEMA_VERSION = "1"

# (input ports, output ports) per component kind
PORTS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "laser": ((), ("out",)),
    "photon_source": ((), ("out",)),
    "bell_source": ((), ("out1", "out2")),
    "pbs": (("in1", "in2"), ("out1", "out2")),
    "hwp": (("in",), ("out",)),
    "qwp": (("in",), ("out",)),
    "bbo": (("in",), ("out1", "out2")),
    "apd": (("in",), ()),
    "smf": (("in",), ("out",)),
    "prism": (("in",), ("out",)),
}

_STATE_PARAM = {"state"}
_DEFAULT_PARAMS: dict[str, dict] = {
    "laser": {"state": {"h": [0.0, 0.0], "v": [1.0, 0.0]}},
    "photon_source": {"state": {"h": [1.0, 0.0], "v": [0.0, 0.0]}},
    "bell_source": {"bell": "phi_plus"},
    "pbs": {"basis": "HV", "reflection_phase": [0.0, 1.0]},
    "hwp": {"angle_deg": 0.0},
    "qwp": {"angle_deg": 0.0},
    "bbo": {
        "geometry": "single-crystal",
        "emission_probability": 0.05,
        "relative_phase_deg": 0.0,
        "pump_wavelength_nm": 351.0,
    },
    "apd": {"efficiency": 1.0, "dark_count_probability": 0.0, "number_resolving": True},
    "smf": {},
    "prism": {},
}

ANGLE_PARAMS = {"angle_deg"}


def effective_params(comp: "ComponentInstance") -> dict:
    """Component parameters with the kind defaults filled in."""
    return {**_DEFAULT_PARAMS[comp.kind], **comp.params}

BUILTIN_SCENE_NAMES = (
    "heralded",
    "single-qubit-gate",
    "projective-measurement",
    "entangled-pair",
    "heralded-cnot",
)

SCENE_DESCRIPTIONS = {
    "heralded": "Announced single photons from a down-conversion crystal with a herald detector.",
    "single-qubit-gate": "Arbitrary polarization rotation via a quarter-half-quarter plate triple.",
    "projective-measurement": "State preparation, analysis plates and a two-port polarizing measurement.",
    "entangled-pair": "Crossed-crystal source emitting polarization-entangled photon pairs.",
    "heralded-cnot": "Two-qubit C-NOT from linear optics, ancilla pair and four herald detectors.",
}


# ---------------------------------------------------------------------------
# data model


@dataclass
class ComponentInstance:
    id: str
    kind: str
    params: dict = field(default_factory=dict)
    angle_step_deg: float = 5.0

    def port_names(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return PORTS[self.kind]


@dataclass(frozen=True)
class Link:
    src: str  # "component.port" on the output side
    dst: str  # "component.port" on the input side

    def path_name(self) -> str:
        """Spatial path carried by this link, named after its source port."""
        return self.src


@dataclass
class Scene:
    schema_version: str
    components: list[ComponentInstance]
    links: list[Link]
    sources: list[str]
    detectors: list[str]
    layout: dict[str, tuple[float, float]] = field(default_factory=dict)

    # -- lookups -----------------------------------------------------------

    def component(self, component_id: str) -> ComponentInstance:
        for comp in self.components:
            if comp.id == component_id:
                return comp
        raise ReferenceError_(f"unknown component {component_id!r}")

    def has_component(self, component_id: str) -> bool:
        return any(c.id == component_id for c in self.components)

    def links_from(self, component_id: str) -> list[Link]:
        prefix = component_id + "."
        return [l for l in self.links if l.src.startswith(prefix)]

    def link_at_src(self, src: str) -> Link | None:
        for l in self.links:
            if l.src == src:
                return l
        return None

    def link_at_dst(self, dst: str) -> Link | None:
        for l in self.links:
            if l.dst == dst:
                return l
        return None

    # -- mutation ----------------------------------------------------------

    def set_param(self, component_id: str, param: str, value, interactive: bool = False):
        """Set one component parameter; interactive angle edits snap to the step."""
        comp = self.component(component_id)
        if param not in _DEFAULT_PARAMS[comp.kind]:
            raise ReferenceError_(
                f"component {component_id!r} ({comp.kind}) has no parameter {param!r}"
            )
        if param in ANGLE_PARAMS:
            value = float(value)
            if interactive:
                step = comp.angle_step_deg
                value = round(value / step) * step
        merged = dict(comp.params)
        merged[param] = value
        _validate_params(comp.kind, merged, where=component_id)
        comp.params[param] = value
        return value

    def copy(self) -> "Scene":
        return scene_from_dict(scene_to_dict(self))

    # -- structure ---------------------------------------------------------

    def topological_order(self) -> list[ComponentInstance]:
        order: list[ComponentInstance] = []
        incoming = {c.id: 0 for c in self.components}
        for link in self.links:
            incoming[link.dst.split(".")[0]] += 1
        ready = [c for c in self.components if incoming[c.id] == 0]
        ready.sort(key=lambda c: [x.id for x in self.components].index(c.id))
        while ready:
            comp = ready.pop(0)
            order.append(comp)
            for link in self.links_from(comp.id):
                target = link.dst.split(".")[0]
                incoming[target] -= 1
                if incoming[target] == 0:
                    ready.append(self.component(target))
        if len(order) != len(self.components):
            raise ValidationError("propagation graph contains a cycle")
        return order


# ---------------------------------------------------------------------------
# validation


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str):
    unknown = set(obj) - allowed
    if unknown:
        raise ValidationError(f"unknown field(s) {sorted(unknown)} in {where}")
    missing = required - set(obj)
    if missing:
        raise ValidationError(f"missing field(s) {sorted(missing)} in {where}")


def _validate_state_param(value, where: str):
    if not isinstance(value, dict) or set(value) != {"h", "v"}:
        raise ValidationError(f"{where}: state must have exactly keys 'h' and 'v'")
    for key in ("h", "v"):
        pair = value[key]
        if (
            not isinstance(pair, (list, tuple))
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) for x in pair)
        ):
            raise ValidationError(f"{where}: state.{key} must be [re, im]")
    h = complex(*value["h"])
    v = complex(*value["v"])
    if abs(h) ** 2 + abs(v) ** 2 < 1e-12:
        raise ValidationError(f"{where}: state amplitudes are all zero")


def _validate_params(kind: str, params: dict, where: str):
    defaults = _DEFAULT_PARAMS[kind]
    unknown = set(params) - set(defaults)
    if unknown:
        raise ValidationError(f"unknown parameter(s) {sorted(unknown)} for {where} ({kind})")
    merged = {**defaults, **params}
    if "state" in merged:
        _validate_state_param(merged["state"], where)
    if kind == "pbs":
        if merged["basis"] not in ("HV", "DA"):
            raise ValidationError(f"{where}: PBS basis must be 'HV' or 'DA'")
        phase = merged["reflection_phase"]
        if not isinstance(phase, (list, tuple)) or len(phase) != 2:
            raise ValidationError(f"{where}: reflection_phase must be [re, im]")
        if abs(abs(complex(*phase)) - 1.0) > 1e-9:
            raise ValidationError(f"{where}: reflection_phase must have unit modulus")
    if kind == "bell_source" and merged["bell"] not in (
        "phi_plus",
        "phi_minus",
        "psi_plus",
        "psi_minus",
    ):
        raise ValidationError(f"{where}: unknown Bell state {merged['bell']!r}")
    if kind == "bbo":
        if merged["geometry"] not in ("single-crystal", "crossed-pair"):
            raise ValidationError(f"{where}: unknown BBO geometry")
        if not 0.0 < merged["emission_probability"] <= 1.0:
            raise ValidationError(f"{where}: emission_probability must be in (0, 1]")
    if kind == "apd":
        if not 0.0 <= merged["efficiency"] <= 1.0:
            raise ValidationError(f"{where}: efficiency must be in [0, 1]")
        if merged["dark_count_probability"] < 0.0:
            raise ValidationError(f"{where}: dark_count_probability must be >= 0")
    for key in ANGLE_PARAMS & set(merged):
        if not isinstance(merged[key], (int, float)):
            raise ValidationError(f"{where}: {key} must be a number")


def validate_scene(scene: Scene) -> Scene:
    if scene.schema_version != SCHEMA_VERSION:
        raise ValidationError(
            f"unsupported schema_version {scene.schema_version!r}, expected {SCHEMA_VERSION!r}"
        )
    seen_ids: set[str] = set()
    for comp in scene.components:
        if comp.kind not in PORTS:
            raise ValidationError(f"component {comp.id!r} has unknown kind {comp.kind!r}")
        if comp.id in seen_ids:
            raise ValidationError(f"duplicate component id {comp.id!r}")
        if "." in comp.id or not comp.id:
            raise ValidationError(f"component id {comp.id!r} must be nonempty without dots")
        seen_ids.add(comp.id)
        _validate_params(comp.kind, comp.params, where=comp.id)
        if comp.angle_step_deg <= 0:
            raise ValidationError(f"component {comp.id!r}: angle_step_deg must be positive")

    def port_ref(ref: str, side: int) -> tuple[str, str]:
        parts = ref.split(".")
        if len(parts) != 2:
            raise ValidationError(f"malformed port reference {ref!r}")
        cid, port = parts
        if cid not in seen_ids:
            raise ValidationError(f"link references unknown component {cid!r}")
        comp = scene.component(cid)
        if port not in comp.port_names()[side]:
            kindword = "input" if side == 0 else "output"
            raise ValidationError(
                f"{ref!r} is not an {kindword} port of kind {comp.kind!r}"
            )
        return cid, port

    used_src: set[str] = set()
    used_dst: set[str] = set()
    for link in scene.links:
        port_ref(link.src, 1)
        port_ref(link.dst, 0)
        if link.src in used_src:
            raise ValidationError(f"output port {link.src!r} used by more than one link")
        if link.dst in used_dst:
            raise ValidationError(f"input port {link.dst!r} used by more than one link")
        used_src.add(link.src)
        used_dst.add(link.dst)

    for sid in scene.sources:
        if sid not in seen_ids:
            raise ValidationError(f"source list references unknown component {sid!r}")
        comp = scene.component(sid)
        if comp.kind not in ("laser", "photon_source", "bell_source"):
            raise ValidationError(f"source {sid!r} has non-source kind {comp.kind!r}")
    for did in scene.detectors:
        if did not in seen_ids:
            raise ValidationError(f"detector list references unknown component {did!r}")
        comp = scene.component(did)
        if comp.kind != "apd":
            raise ValidationError(f"detector {did!r} references kind {comp.kind!r}, not apd")
    for cid in scene.layout:
        if cid not in seen_ids:
            raise ValidationError(f"layout references unknown component {cid!r}")
    scene.topological_order()  # raises on cycles
    return scene


# ---------------------------------------------------------------------------
# (de)serialization


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema_version": scene.schema_version,
        "components": [
            {
                "id": c.id,
                "kind": c.kind,
                "params": c.params,
                "angle_step_deg": c.angle_step_deg,
            }
            for c in scene.components
        ],
        "links": [{"from": l.src, "to": l.dst} for l in scene.links],
        "sources": list(scene.sources),
        "detectors": list(scene.detectors),
        "layout": {cid: list(xy) for cid, xy in scene.layout.items()},
    }


def scene_from_dict(doc: dict) -> Scene:
    _require_keys(
        doc,
        {"schema_version", "components", "links", "sources", "detectors", "layout"},
        {"schema_version", "components", "links", "sources", "detectors"},
        "scene document",
    )
    components = []
    for raw in doc["components"]:
        _require_keys(
            raw,
            {"id", "kind", "params", "angle_step_deg"},
            {"id", "kind"},
            f"component {raw.get('id', '?')!r}",
        )
        components.append(
            ComponentInstance(
                id=raw["id"],
                kind=raw["kind"],
                params=dict(raw.get("params", {})),
                angle_step_deg=float(raw.get("angle_step_deg", 5.0)),
            )
        )
    links = []
    for raw in doc["links"]:
        _require_keys(raw, {"from", "to"}, {"from", "to"}, "link")
        links.append(Link(src=raw["from"], dst=raw["to"]))
    layout = {
        cid: (float(xy[0]), float(xy[1])) for cid, xy in doc.get("layout", {}).items()
    }
    scene = Scene(
        schema_version=doc["schema_version"],
        components=components,
        links=links,
        sources=list(doc["sources"]),
        detectors=list(doc["detectors"]),
        layout=layout,
    )
    return validate_scene(scene)


def serialize_scene(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), indent=2, sort_keys=True) + "\n"


def load_scene(text: str) -> Scene:
    """Parse and validate a scene document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(
            f"scene document is not valid JSON: {exc.msg}", exc.lineno, exc.colno
        ) from exc
    if not isinstance(doc, dict):
        raise SceneParseError("scene document must be a JSON object")
    return scene_from_dict(doc)


def scene_hash(scene: Scene) -> str:
    canonical = json.dumps(scene_to_dict(scene), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# angle helpers


def deg(value_rad: float) -> float:
    return math.degrees(value_rad)


def rad(value_deg: float) -> float:
    return math.radians(value_deg)


# ---------------------------------------------------------------------------
# builtin benches


def _component(cid, kind, **params) -> ComponentInstance:
    merged = {}
    merged.update(params)
    return ComponentInstance(id=cid, kind=kind, params=merged)


def _link(src, dst) -> Link:
    return Link(src, dst)


def _build_heralded() -> Scene:
    return Scene(
        schema_version=SCHEMA_VERSION,
        components=[
            _component("laser", "laser"),
            _component("pump_pbs", "pbs"),
            _component("pump_hwp", "hwp", angle_deg=0.0),
            _component("bbo", "bbo"),
            _component("signal_smf", "smf"),
            _component("herald_apd", "apd"),
        ],
        links=[
            _link("laser.out", "pump_pbs.in1"),
            _link("pump_pbs.out2", "pump_hwp.in"),
            _link("pump_hwp.out", "bbo.in"),
            _link("bbo.out1", "signal_smf.in"),
            _link("bbo.out2", "herald_apd.in"),
        ],
        sources=["laser"],
        detectors=["herald_apd"],
        layout={
            "laser": (0.0, 0.0),
            "pump_pbs": (0.3, 0.0),
            "pump_hwp": (0.5, 0.2),
            "bbo": (0.8, 0.2),
            "signal_smf": (1.2, 0.05),
            "herald_apd": (1.2, 0.35),
        },
    )


def _build_single_qubit_gate() -> Scene:
    # Plate order matches the compiled gate qwp2 . hwp . qwp1: the photon
    # crosses qwp1 (third gate angle) first.
    return Scene(
        schema_version=SCHEMA_VERSION,
        components=[
            _component("source", "photon_source"),
            _component("qwp1", "qwp", angle_deg=0.0),
            _component("hwp", "hwp", angle_deg=0.0),
            _component("qwp2", "qwp", angle_deg=0.0),
            _component("out_smf", "smf"),
        ],
        links=[
            _link("source.out", "qwp1.in"),
            _link("qwp1.out", "hwp.in"),
            _link("hwp.out", "qwp2.in"),
            _link("qwp2.out", "out_smf.in"),
        ],
        sources=["source"],
        detectors=[],
        layout={
            "source": (0.0, 0.0),
            "qwp1": (0.3, 0.0),
            "hwp": (0.5, 0.0),
            "qwp2": (0.7, 0.0),
            "out_smf": (1.0, 0.0),
        },
    )


def _build_projective_measurement() -> Scene:
    return Scene(
        schema_version=SCHEMA_VERSION,
        components=[
            _component("source", "photon_source"),
            _component("prep_qwp1", "qwp", angle_deg=0.0),
            _component("prep_hwp", "hwp", angle_deg=0.0),
            _component("prep_qwp2", "qwp", angle_deg=0.0),
            _component("analysis_qwp", "qwp", angle_deg=0.0),
            _component("analysis_hwp", "hwp", angle_deg=0.0),
            _component("pbs", "pbs"),
            _component("apd_h", "apd"),
            _component("apd_v", "apd"),
        ],
        links=[
            _link("source.out", "prep_qwp1.in"),
            _link("prep_qwp1.out", "prep_hwp.in"),
            _link("prep_hwp.out", "prep_qwp2.in"),
            _link("prep_qwp2.out", "analysis_qwp.in"),
            _link("analysis_qwp.out", "analysis_hwp.in"),
            _link("analysis_hwp.out", "pbs.in1"),
            _link("pbs.out1", "apd_h.in"),
            _link("pbs.out2", "apd_v.in"),
        ],
        sources=["source"],
        detectors=["apd_h", "apd_v"],
        layout={
            "source": (0.0, 0.0),
            "prep_qwp1": (0.25, 0.0),
            "prep_hwp": (0.45, 0.0),
            "prep_qwp2": (0.65, 0.0),
            "analysis_qwp": (0.95, 0.0),
            "analysis_hwp": (1.15, 0.0),
            "pbs": (1.45, 0.0),
            "apd_h": (1.75, 0.0),
            "apd_v": (1.45, 0.3),
        },
    )


def _build_entangled_pair() -> Scene:
    # The pump half-wave plate at 67.5 deg turns the vertical pump into the
    # diagonal state that drives both crystals equally.
    return Scene(
        schema_version=SCHEMA_VERSION,
        components=[
            _component("laser", "laser"),
            _component("pump_pbs", "pbs"),
            _component("pump_hwp", "hwp", angle_deg=67.5),
            _component("bbo_pair", "bbo", geometry="crossed-pair"),
            _component("signal_smf", "smf"),
            _component("idler_smf", "smf"),
        ],
        links=[
            _link("laser.out", "pump_pbs.in1"),
            _link("pump_pbs.out2", "pump_hwp.in"),
            _link("pump_hwp.out", "bbo_pair.in"),
            _link("bbo_pair.out1", "signal_smf.in"),
            _link("bbo_pair.out2", "idler_smf.in"),
        ],
        sources=["laser"],
        detectors=[],
        layout={
            "laser": (0.0, 0.0),
            "pump_pbs": (0.3, 0.0),
            "pump_hwp": (0.5, 0.2),
            "bbo_pair": (0.8, 0.2),
            "signal_smf": (1.2, 0.05),
            "idler_smf": (1.2, 0.35),
        },
    )


def _build_heralded_cnot() -> Scene:
    components = [
        _component("c_source", "photon_source"),
        _component("c_qwp1", "qwp", angle_deg=0.0),
        _component("c_hwp", "hwp", angle_deg=0.0),
        _component("c_qwp2", "qwp", angle_deg=0.0),
        _component("t_source", "photon_source"),
        _component("t_qwp1", "qwp", angle_deg=0.0),
        _component("t_hwp", "hwp", angle_deg=0.0),
        _component("t_qwp2", "qwp", angle_deg=0.0),
        _component("bell_src", "bell_source"),
        _component("pbs1", "pbs", basis="HV"),
        _component("pbs2", "pbs", basis="DA"),
        _component("a1_analyzer", "pbs", basis="DA"),
        _component("a2_analyzer", "pbs", basis="HV"),
        _component("c_smf", "smf"),
        _component("t_smf", "smf"),
        _component("d1", "apd"),
        _component("d2", "apd"),
        _component("d3", "apd"),
        _component("d4", "apd"),
    ]
    links = [
        _link("c_source.out", "c_qwp1.in"),
        _link("c_qwp1.out", "c_hwp.in"),
        _link("c_hwp.out", "c_qwp2.in"),
        _link("c_qwp2.out", "pbs1.in1"),
        _link("bell_src.out1", "pbs1.in2"),
        _link("t_source.out", "t_qwp1.in"),
        _link("t_qwp1.out", "t_hwp.in"),
        _link("t_hwp.out", "t_qwp2.in"),
        _link("t_qwp2.out", "pbs2.in1"),
        _link("bell_src.out2", "pbs2.in2"),
        _link("pbs1.out1", "c_smf.in"),
        _link("pbs1.out2", "a1_analyzer.in1"),
        _link("pbs2.out1", "t_smf.in"),
        _link("pbs2.out2", "a2_analyzer.in1"),
        _link("a1_analyzer.out1", "d1.in"),
        _link("a1_analyzer.out2", "d2.in"),
        _link("a2_analyzer.out1", "d3.in"),
        _link("a2_analyzer.out2", "d4.in"),
    ]
    layout = {
        "c_source": (0.0, 0.0),
        "c_qwp1": (0.25, 0.0),
        "c_hwp": (0.45, 0.0),
        "c_qwp2": (0.65, 0.0),
        "t_source": (0.0, 1.0),
        "t_qwp1": (0.25, 1.0),
        "t_hwp": (0.45, 1.0),
        "t_qwp2": (0.65, 1.0),
        "bell_src": (0.65, 0.5),
        "pbs1": (1.0, 0.0),
        "pbs2": (1.0, 1.0),
        "a1_analyzer": (1.35, 0.35),
        "a2_analyzer": (1.35, 0.65),
        "c_smf": (1.6, 0.0),
        "t_smf": (1.6, 1.0),
        "d1": (1.6, 0.25),
        "d2": (1.35, 0.1),
        "d3": (1.6, 0.75),
        "d4": (1.35, 0.9),
    }
    return Scene(
        schema_version=SCHEMA_VERSION,
        components=components,
        links=links,
        sources=["c_source", "t_source", "bell_src"],
        detectors=["d1", "d2", "d3", "d4"],
        layout=layout,
    )


_BUILDERS = {
    "heralded": _build_heralded,
    "single-qubit-gate": _build_single_qubit_gate,
    "projective-measurement": _build_projective_measurement,
    "entangled-pair": _build_entangled_pair,
    "heralded-cnot": _build_heralded_cnot,
}

# Ancilla detector grouping for the C-NOT bench success condition.
CNOT_GROUP_A = ("d1", "d2")
CNOT_GROUP_B = ("d3", "d4")


def builtin_scene(name: str) -> Scene:
    """One of the five shipped benches, freshly built."""
    if name not in _BUILDERS:
        raise UnknownSceneError(
            f"unknown scene {name!r}; builtin scenes: {', '.join(BUILTIN_SCENE_NAMES)}"
        )
    return validate_scene(_BUILDERS[name]())


def builtin_scene_document(name: str) -> str:
    """The shipped JSON document for a builtin scene."""
    if name not in _BUILDERS:
        raise UnknownSceneError(f"unknown scene {name!r}")
    return resources.files("qbench.scenes").joinpath(f"{name}.json").read_text()
