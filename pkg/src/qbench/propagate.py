"""Photon propagation through a scene, exact and Monte-Carlo.

The pump laser is carried as a classical Jones vector until a crystal
converts it into a photon-pair branch; everything downstream of the sources
is one sparse Fock state rewritten component by component in topological
order.  Exact propagation is deterministic; the sampled engine draws a fixed
budget of uniforms per shot from a counter-based stream, so results are
reproducible and shot-parallelizable for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DanglingPathError, ReferenceError_, ValidationError
from .measure import CountsTable, coincidence_key
from .optics import (
    DetectorSpec,
    PbsSpec,
    SpdcSourceSpec,
    bell_pair,
    detect,
    jones_hwp,
    jones_qwp,
    pbs_scattering_block,
)
from .quantum import (
    H_POL,
    V_POL,
    FockState,
    ModeIndex,
    ModeUnitary,
    PolarizationState,
    bloch_from_state,
    tensor,
)
from .rng import PRNG_ID, shot_uniforms
from .scene import Scene, effective_params, rad, scene_hash

# ---------------------------------------------------------------------------
# events


@dataclass(frozen=True)
class Event:
    """One step of a run; ``shot`` is None for exact (amplitude-level) passes."""

    kind: str
    shot: int | None
    data: dict

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "shot": self.shot}
        out.update(self.data)
        return out


def photon_emitted(shot, paths, state) -> Event:
    return Event("photon_emitted", shot, {"paths": list(paths), "state": state})


def segment_traversed(shot, link) -> Event:
    return Event("segment_traversed", shot, {"link": link})


def plate_crossed(shot, component, bloch) -> Event:
    if bloch is not None and abs(sum(b * b for b in bloch) - 1.0) > 1e-9:
        raise ValidationError("plate snapshot must have a unit Bloch vector")
    return Event("plate_crossed", shot, {"component": component, "bloch": bloch})


def detection(shot, detector, clicks) -> Event:
    return Event("detection", shot, {"detector": detector, "clicks": clicks})


def herald(shot, ok, pattern) -> Event:
    return Event("herald", shot, {"ok": bool(ok), "pattern": pattern})


@dataclass
class EventTrace:
    events: list[Event] = field(default_factory=list)

    def add(self, event: Event):
        self.events.append(event)

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]


# ---------------------------------------------------------------------------
# helpers on Fock states


def path_occupancy(state: FockState, path: str, occ: tuple[int, ...]) -> int:
    total = 0
    for i, mode in enumerate(state.registry):
        if mode.path == path:
            total += occ[i]
    return total


def reduced_path_state(state: FockState, path: str) -> PolarizationState | None:
    """Pure single-photon polarization on ``path``, or None if undefined.

    Groups amplitudes by the occupation of all other modes; the path carries
    a pure qubit only when exactly one photon sits there in every branch and
    the 2x2 reduced matrix is rank one.
    """
    idx_h = idx_v = None
    for i, mode in enumerate(state.registry):
        if mode.path == path:
            if mode.pol == H_POL:
                idx_h = i
            else:
                idx_v = i
    if idx_h is None or idx_v is None:
        return None
    rho = np.zeros((2, 2), dtype=complex)
    groups: dict[tuple, np.ndarray] = {}
    for occ, amp in state.amplitudes.items():
        n_here = occ[idx_h] + occ[idx_v]
        if n_here != 1:
            return None
        rest = tuple(v for i, v in enumerate(occ) if i not in (idx_h, idx_v))
        vec = groups.setdefault(rest, np.zeros(2, dtype=complex))
        vec[0 if occ[idx_h] else 1] += amp
    for vec in groups.values():
        rho += np.outer(vec, vec.conj())
    tr = np.trace(rho).real
    if tr < 1e-12:
        return None
    rho /= tr
    vals, vecs = np.linalg.eigh(rho)
    if vals[-1] < 1.0 - 1e-9:
        return None  # mixed: path is entangled with the rest
    v = vecs[:, -1]
    return PolarizationState.from_amplitudes(v[0], v[1])


# ---------------------------------------------------------------------------
# exact propagation


@dataclass
class PropagationStep:
    """One component application, exposed so partial recomposition is testable."""

    component_id: str
    unitary: ModeUnitary


@dataclass
class ExactPropagation:
    """Amplitude-level result of one pass through a scene."""

    scene_digest: str
    emission_probability: float
    final_state: FockState | None
    path_states: dict[str, PolarizationState | None]
    pump_states: dict[str, PolarizationState]
    detector_paths: dict[str, str]
    plate_blochs: dict[str, tuple[float, float, float] | None]
    steps: list[PropagationStep]
    trace: EventTrace
    source_snapshots: dict[str, dict]
    initial_state: FockState | None = None  # emitted state before passive optics

    def detector_pattern_probabilities(self) -> dict[tuple[int, ...], float]:
        """Photon-count distribution over the scene's detectors (in order).

        Includes the no-emission branch, so the probabilities sum to one.
        """
        det_ids = list(self.detector_paths)
        zero = tuple(0 for _ in det_ids)
        out: dict[tuple[int, ...], float] = {}
        q = self.emission_probability
        if q < 1.0:
            out[zero] = 1.0 - q
        if self.final_state is not None:
            for occ, amp in self.final_state.amplitudes.items():
                pattern = tuple(
                    path_occupancy(self.final_state, self.detector_paths[d], occ)
                    for d in det_ids
                )
                out[pattern] = out.get(pattern, 0.0) + q * abs(amp) ** 2
        elif q == 0.0:
            out[zero] = 1.0
        return out

    def conditional_pattern_probabilities(self) -> dict[tuple[int, ...], float]:
        """Detector pattern distribution given that the sources emitted."""
        det_ids = list(self.detector_paths)
        out: dict[tuple[int, ...], float] = {}
        if self.final_state is None:
            out[tuple(0 for _ in det_ids)] = 1.0
            return out
        for occ, amp in self.final_state.amplitudes.items():
            pattern = tuple(
                path_occupancy(self.final_state, self.detector_paths[d], occ)
                for d in det_ids
            )
            out[pattern] = out.get(pattern, 0.0) + abs(amp) ** 2
        return out


def _state_param(comp) -> PolarizationState:
    raw = effective_params(comp)["state"]
    return PolarizationState.from_amplitudes(complex(*raw["h"]), complex(*raw["v"]))


def _bloch_tuple(psi: PolarizationState) -> tuple[float, float, float]:
    b = bloch_from_state(psi)
    return (b.x, b.y, b.z)


def _plate_jones(comp) -> np.ndarray:
    theta = rad(float(effective_params(comp)["angle_deg"]))
    return jones_hwp(theta) if comp.kind == "hwp" else jones_qwp(theta)


def _pbs_spec(comp) -> PbsSpec:
    params = effective_params(comp)
    return PbsSpec(
        basis=params["basis"],
        reflection_phase=complex(*params["reflection_phase"]),
    )


def _spdc_spec(comp) -> SpdcSourceSpec:
    params = effective_params(comp)
    return SpdcSourceSpec(
        geometry=params["geometry"],
        pump_wavelength=float(params["pump_wavelength_nm"]) * 1e-9,
        emission_probability=float(params["emission_probability"]),
        relative_phase=rad(float(params["relative_phase_deg"])),
    )


def _detector_spec(comp) -> DetectorSpec:
    params = effective_params(comp)
    return DetectorSpec(
        efficiency=float(params["efficiency"]),
        dark_count_probability=float(params["dark_count_probability"]),
        number_resolving=bool(params["number_resolving"]),
    )


class _Propagator:
    def __init__(self, scene: Scene, input_states: dict | None):
        self.scene = scene
        self.inputs = input_states or {}
        for cid in self.inputs:
            if not scene.has_component(cid):
                raise ReferenceError_(f"input override targets unknown component {cid!r}")
        self.state: FockState | None = None
        self.pump: dict[str, np.ndarray] = {}
        self.pump_snapshots: dict[str, PolarizationState] = {}
        self.trace = EventTrace()
        self.steps: list[PropagationStep] = []
        self.plate_blochs: dict[str, tuple[float, float, float] | None] = {}
        self.detector_paths: dict[str, str] = {}
        self.keep_paths: set[str] = set()
        self.source_snapshots: dict[str, dict] = {}
        self.initial_state: FockState | None = None
        self._vac_counter = 0

    # -- path plumbing ----------------------------------------------------

    def _in_path(self, comp, port: str) -> str | None:
        link = self.scene.link_at_dst(f"{comp.id}.{port}")
        return link.path_name() if link else None

    def _out_path(self, comp, port: str) -> str:
        # the outgoing path is named after the source port whether or not a
        # link consumes it; unconsumed photon paths fail the dangling check
        return f"{comp.id}.{port}"

    def _emit_segments(self, comp):
        for link in self.scene.links_from(comp.id):
            src_path = link.path_name()
            carries_photons = self.state is not None and any(
                m.path == src_path for m in self.state.registry
            )
            if carries_photons or src_path in self.pump:
                self.trace.add(segment_traversed(None, f"{link.src}->{link.dst}"))

    # -- state plumbing -----------------------------------------------------

    def _merge_emission(self, branch: FockState, source_id: str, paths: list[str]):
        self.state = branch if self.state is None else tensor(self.state, branch)
        snapshot: dict = {"paths": paths}
        per_path = {}
        for p in paths:
            reduced = reduced_path_state(branch, p)
            if reduced is not None:
                per_path[p] = _bloch_tuple(reduced)
        snapshot["bloch"] = per_path or None
        self.source_snapshots[source_id] = snapshot
        self.trace.add(photon_emitted(None, paths, snapshot["bloch"]))

    def _path_modes_present(self, path: str) -> bool:
        return self.state is not None and any(
            m.path == path for m in self.state.registry
        )

    def _extend_with_vacuum(self, path: str):
        assert self.state is not None
        if self.initial_state is None:
            self.initial_state = self.state
        registry = self.state.registry + (
            ModeIndex(path, H_POL),
            ModeIndex(path, V_POL),
        )
        amps = {occ + (0, 0): a for occ, a in self.state.amplitudes.items()}
        self.state = FockState(registry, amps, self.state.norm)

    def _apply_rewiring(
        self, comp_id: str, in_paths: list[str], out_paths: list[str], block: np.ndarray
    ):
        """Apply a scattering block mapping in-path modes onto out-path modes.

        The block is indexed per path pair in (H, V) order.  Modes not touched
        pass through unchanged; target registry keeps source positions so the
        registry order stays deterministic.
        """
        assert self.state is not None
        src_registry = self.state.registry
        in_modes = [ModeIndex(p, pol) for p in in_paths for pol in (H_POL, V_POL)]
        positions = [self.state.mode_position(m) for m in in_modes]
        out_modes = [ModeIndex(p, pol) for p in out_paths for pol in (H_POL, V_POL)]
        target = list(src_registry)
        for pos, mode in zip(positions, out_modes):
            target[pos] = mode
        n = len(src_registry)
        u = np.eye(n, dtype=complex)
        for pos in positions:
            u[pos, pos] = 0.0
        for r, pos_r in enumerate(positions):
            for c, pos_c in enumerate(positions):
                u[pos_r, pos_c] = block[r, c]
        unitary = ModeUnitary(u, src_registry, tuple(target))
        if self.initial_state is None:
            self.initial_state = self.state
        self.steps.append(PropagationStep(comp_id, unitary))
        from .quantum import apply_mode_unitary

        self.state = apply_mode_unitary(self.state, unitary)

    # -- component handlers -------------------------------------------------

    def run(self) -> ExactPropagation:
        scene = self.scene
        for comp in scene.topological_order():
            handler = getattr(self, f"_handle_{comp.kind}")
            handler(comp)
            self._emit_segments(comp)
        self._check_dangling()
        path_states: dict[str, PolarizationState | None] = {}
        if self.state is not None:
            for path in sorted({m.path for m in self.state.registry}):
                path_states[path] = reduced_path_state(self.state, path)
        q = float(self.state.norm**2) if self.state is not None else 0.0
        return ExactPropagation(
            scene_digest=scene_hash(scene),
            emission_probability=min(1.0, q),
            final_state=self.state,
            path_states=path_states,
            pump_states=dict(self.pump_snapshots),
            detector_paths=dict(self.detector_paths),
            plate_blochs=dict(self.plate_blochs),
            steps=self.steps,
            trace=self.trace,
            source_snapshots=self.source_snapshots,
            initial_state=self.initial_state,
        )

    def _handle_laser(self, comp):
        psi = self.inputs.get(comp.id) or _state_param(comp)
        self.pump[self._out_path(comp, "out")] = psi.as_vector()

    def _handle_photon_source(self, comp):
        psi = self.inputs.get(comp.id) or _state_param(comp)
        path = self._out_path(comp, "out")
        registry = (ModeIndex(path, H_POL), ModeIndex(path, V_POL))
        branch = FockState.single_photon(registry, psi, path)
        self._merge_emission(branch, comp.id, [path])

    def _handle_bell_source(self, comp):
        path_a = self._out_path(comp, "out1")
        path_b = self._out_path(comp, "out2")
        branch = bell_pair(effective_params(comp)["bell"], path_a, path_b)
        self._merge_emission(branch, comp.id, [path_a, path_b])

    def _handle_bbo(self, comp):
        in_path = self._in_path(comp, "in")
        if in_path is None or in_path not in self.pump:
            raise ValidationError(
                f"crystal {comp.id!r} needs a pump beam on its input"
            )
        if self._path_modes_present(in_path):
            raise ValidationError("photon input to a crystal is not supported")
        vec = self.pump.pop(in_path)
        weight = float(np.linalg.norm(vec))
        signal = self._out_path(comp, "out1")
        idler = self._out_path(comp, "out2")
        if weight < 1e-12:
            return
        pump_psi = PolarizationState.from_amplitudes(vec[0], vec[1])
        from .optics import spdc_emit

        branch = spdc_emit(_spdc_spec(comp), pump_psi, signal, idler)
        if branch is None:
            return
        if self.state is not None and self.state.norm < 1.0:
            raise ValidationError("at most one probabilistic source per scene")
        branch = FockState(branch.registry, branch.amplitudes, branch.norm * weight)
        self._merge_emission(branch, comp.id, [signal, idler])

    def _handle_hwp(self, comp):
        self._handle_plate(comp)

    def _handle_qwp(self, comp):
        self._handle_plate(comp)

    def _handle_plate(self, comp):
        in_path = self._in_path(comp, "in")
        if in_path is None:
            return
        out_path = self._out_path(comp, "out")
        jones = _plate_jones(comp)
        if in_path in self.pump:
            vec = jones @ self.pump.pop(in_path)
            self.pump[out_path] = vec
            norm = np.linalg.norm(vec)
            if norm > 1e-12:
                psi = PolarizationState.from_amplitudes(vec[0], vec[1])
                self.pump_snapshots[out_path] = psi
                bloch = _bloch_tuple(psi)
            else:
                bloch = None
            self.plate_blochs[comp.id] = bloch
            self.trace.add(plate_crossed(None, comp.id, bloch))
            return
        if not self._path_modes_present(in_path):
            return
        self._apply_rewiring(comp.id, [in_path], [out_path], jones)
        reduced = reduced_path_state(self.state, out_path)
        bloch = _bloch_tuple(reduced) if reduced is not None else None
        self.plate_blochs[comp.id] = bloch
        self.trace.add(plate_crossed(None, comp.id, bloch))

    def _handle_pbs(self, comp):
        in1 = self._in_path(comp, "in1")
        in2 = self._in_path(comp, "in2")
        spec = _pbs_spec(comp)
        block = pbs_scattering_block(spec)
        pump_in = [p for p in (in1, in2) if p is not None and p in self.pump]
        fock_in = [p for p in (in1, in2) if p is not None and self._path_modes_present(p)]
        if pump_in and fock_in:
            raise ValidationError(
                f"PBS {comp.id!r} mixes pump and photon inputs; not supported"
            )
        out1 = self._out_path(comp, "out1")
        out2 = self._out_path(comp, "out2")
        if pump_in:
            vecs = []
            for p in (in1, in2):
                vecs.append(self.pump.pop(p) if p in self.pump else np.zeros(2, complex))
            stacked = np.concatenate(vecs)
            out = block @ stacked
            self.pump[out1] = out[0:2]
            self.pump[out2] = out[2:4]
            for path in (out1, out2):
                n = np.linalg.norm(self.pump[path])
                if n > 1e-12:
                    self.pump_snapshots[path] = PolarizationState.from_amplitudes(
                        *self.pump[path]
                    )
            return
        if not fock_in:
            return
        paths = []
        for port, p in (("in1", in1), ("in2", in2)):
            if p is None or not self._path_modes_present(p):
                vac = f"{comp.id}.{port}.vac{self._vac_counter}"
                self._vac_counter += 1
                self._extend_with_vacuum(vac)
                paths.append(vac)
            else:
                paths.append(p)
        self._apply_rewiring(comp.id, paths, [out1, out2], block)

    def _handle_smf(self, comp):
        self._route_through(comp)

    def _handle_prism(self, comp):
        self._route_through(comp)

    def _route_through(self, comp):
        in_path = self._in_path(comp, "in")
        if in_path is None:
            return
        has_out = self.scene.link_at_src(f"{comp.id}.out") is not None
        if in_path in self.pump:
            if has_out:
                self.pump[self._out_path(comp, "out")] = self.pump.pop(in_path)
            return
        if not self._path_modes_present(in_path):
            return
        if has_out:
            self._apply_rewiring(
                comp.id, [in_path], [self._out_path(comp, "out")], np.eye(2, dtype=complex)
            )
        else:
            # lossless fiber terminator: the photon is kept, not lost
            self.keep_paths.add(in_path)

    def _handle_apd(self, comp):
        in_path = self._in_path(comp, "in")
        if in_path is None:
            return
        if in_path in self.pump:
            self.pump.pop(in_path)  # classical beam monitor, no photon counting
            return
        self.detector_paths[comp.id] = in_path

    # -- final checks --------------------------------------------------------

    def _check_dangling(self):
        for det in self.scene.detectors:
            if det not in self.detector_paths:
                self.detector_paths[det] = f"{det}.unreachable"
        if self.state is None:
            return
        terminal_ok = set(self.detector_paths.values()) | self.keep_paths
        for i, mode in enumerate(self.state.registry):
            if mode.path in terminal_ok:
                continue
            mass = sum(
                abs(a) ** 2 for occ, a in self.state.amplitudes.items() if occ[i] > 0
            )
            if mass > 1e-12:
                raise DanglingPathError(
                    f"photons reach unterminated path {mode.path!r}"
                )


def propagate_exact(scene: Scene, input_states: dict | None = None) -> ExactPropagation:
    """Exact amplitudes, per-path snapshots and an event trace for a scene."""
    return _Propagator(scene, input_states).run()


# ---------------------------------------------------------------------------
# sampled propagation


def _replay_events(exact: ExactPropagation, shot: int) -> list[Event]:
    """Shot-tagged copies of the exact pass's emission/segment/plate events."""
    return [Event(e.kind, shot, e.data) for e in exact.trace.events]


def propagate_sampled(
    scene: Scene,
    shots: int,
    seed: int,
    trace_shots: int = 50,
    herald_rule=None,
    input_states: dict | None = None,
    exact: ExactPropagation | None = None,
) -> tuple[CountsTable, EventTrace]:
    """Monte-Carlo run: Born-sampled detector outcomes over ``shots`` pulses.

    Per shot the engine consumes a fixed stride of uniforms (emission,
    outcome, and two per detector), so a given seed pins the entire outcome
    stream.  Detailed events are recorded for the first ``trace_shots`` shots;
    ``herald_rule`` maps a shot's click dict to (ok, pattern) when the scene
    has a success condition to announce.
    """
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    if exact is None:
        exact = propagate_exact(scene, input_states)
    det_ids = list(scene.detectors)
    det_specs = {d: _detector_spec(scene.component(d)) for d in det_ids}
    ideal = all(
        s.efficiency >= 1.0 and s.dark_count_probability == 0.0 for s in det_specs.values()
    )
    cond = sorted(exact.conditional_pattern_probabilities().items())
    patterns = [p for p, _ in cond]
    weights = np.array([w for _, w in cond])
    weights = weights / weights.sum()
    cum = np.cumsum(weights)
    q = exact.emission_probability

    stride = 2 + 2 * len(det_ids)
    draws = shot_uniforms(seed, shots, stride)
    emitted = draws[:, 0] < q
    choice = np.minimum(np.searchsorted(cum, draws[:, 1], side="right"), len(patterns) - 1)

    per_detector = {d: 0 for d in det_ids}
    coincidences: dict[str, int] = {}
    trace = EventTrace()
    zero_pattern = tuple(0 for _ in det_ids)

    def shot_clicks(i) -> dict[str, int]:
        pattern = patterns[choice[i]] if emitted[i] else zero_pattern
        clicks = {}
        for j, d in enumerate(det_ids):
            if ideal:
                clicks[d] = pattern[j]
            else:
                clicks[d] = detect(
                    det_specs[d], pattern[j], (draws[i, 2 + 2 * j], draws[i, 3 + 2 * j])
                )
        return clicks

    if ideal:
        # pattern tallies in bulk; click counts equal photon occupations
        # vacuum (no-emission) shots record no clicks and no coincidence rows
        pattern_counts = np.bincount(
            np.where(emitted, choice, -1)[emitted], minlength=len(patterns)
        )
        for p_idx, count in enumerate(pattern_counts):
            if count == 0:
                continue
            pattern = patterns[p_idx]
            for j, d in enumerate(det_ids):
                per_detector[d] += int(count) * pattern[j]
            key = coincidence_key(dict(zip(det_ids, pattern)))
            if key != "none":
                coincidences[key] = coincidences.get(key, 0) + int(count)
    else:
        for i in range(shots):
            clicks = shot_clicks(i)
            for d, c in clicks.items():
                per_detector[d] += c
            key = coincidence_key(clicks)
            if key != "none":
                coincidences[key] = coincidences.get(key, 0) + 1

    for i in range(min(shots, trace_shots)):
        clicks = shot_clicks(i)
        if emitted[i]:
            for e in _replay_events(exact, i):
                trace.add(e)
        for d in det_ids:
            if clicks[d] > 0:
                trace.add(detection(i, d, clicks[d]))
        if herald_rule is not None:
            ok, label = herald_rule(clicks)
            trace.add(herald(i, ok, label))

    counts = CountsTable(
        shots=shots,
        per_detector=per_detector,
        coincidences=coincidences,
        seed=seed,
        prng=PRNG_ID,
    )
    return counts, trace


def cnot_herald_rule(group_a=("d1", "d2"), group_b=("d3", "d4")):
    """Success announcement for the C-NOT bench: one and only one click per pair."""
    from .measure import coincidence_1ao1

    def rule(clicks: dict[str, int]):
        ok = coincidence_1ao1(clicks, group_a, group_b)
        return ok, coincidence_key(clicks)

    return rule


def herald_click_rule(detector: str):
    """Announcement rule for the heralded-photon bench."""

    def rule(clicks: dict[str, int]):
        return clicks.get(detector, 0) >= 1, coincidence_key(clicks)

    return rule


HERALD_RULES = {
    "heralded-cnot": cnot_herald_rule(),
    "heralded": herald_click_rule("herald_apd"),
}
