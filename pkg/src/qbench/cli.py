"""Command-line entry point.

Angles are degrees on the command line, radians inside.  Every run embeds
its seed, PRNG identifier and scene hash in the output so it can be
reproduced exactly; QBENCH_SEED provides the default seed.

Exit codes: 0 success, 2 validation failure, 3 bad reference (unknown
scene/component/parameter), 4 insufficient data.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import experiments, measure
from .errors import (
    InsufficientDataError,
    QBenchError,
    ReferenceError_,
    ValidationError,
)
from .measure import TomographySettings, exact_diffs, reconstruct_from_diffs
from .optics import qhq_decompose, qhq_unitary, unitary_distance
from .propagate import HERALD_RULES, propagate_exact, propagate_sampled
from .quantum import (
    STATE_A,
    STATE_D,
    STATE_H,
    STATE_L,
    STATE_R,
    STATE_V,
    PolarizationState,
    apply_jones,
    fidelity,
)
from .rng import PRNG_ID, fresh_seed
from .scene import (
    BUILTIN_SCENE_NAMES,
    SCENE_DESCRIPTIONS,
    Scene,
    builtin_scene,
    load_scene,
    rad,
    scene_hash,
)

STATE_SHORTHAND = {
    "H": STATE_H,
    "V": STATE_V,
    "D": STATE_D,
    "A": STATE_A,
    "R": STATE_R,
    "L": STATE_L,
}


def _resolve_scene(ref: str) -> Scene:
    if ref in BUILTIN_SCENE_NAMES:
        return builtin_scene(ref)
    if os.path.exists(ref):
        with open(ref, encoding="utf-8") as fh:
            return load_scene(fh.read())
    raise ReferenceError_(f"{ref!r} is neither a builtin scene nor a readable file")


def _parse_override(scene: Scene, text: str):
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ValidationError(f"override {text!r} must look like component.param=value")
    target, raw = text.split("=", 1)
    component_id, param = target.split(".", 1)
    if not scene.has_component(component_id):
        raise ReferenceError_(f"override targets missing component {component_id!r}")
    if param == "state":
        if raw in STATE_SHORTHAND:
            psi = STATE_SHORTHAND[raw]
        else:
            parts = [float(x) for x in raw.split(",")]
            if len(parts) != 4:
                raise ValidationError(
                    f"state override {raw!r} must be H/V/D/A/R/L or h_re,h_im,v_re,v_im"
                )
            psi = PolarizationState.from_amplitudes(
                complex(parts[0], parts[1]), complex(parts[2], parts[3])
            )
        value = {
            "h": [psi.alpha.real, psi.alpha.imag],
            "v": [psi.beta.real, psi.beta.imag],
        }
    else:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
    scene.set_param(component_id, param, value)


def _emit(text: str, output: str | None):
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_dumps(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _pattern_key(det_ids, pattern) -> str:
    from .measure import coincidence_key

    return coincidence_key(dict(zip(det_ids, pattern)))


def _default_seed(args_seed) -> int:
    if args_seed is not None:
        return args_seed
    env = os.environ.get("QBENCH_SEED")
    if env is not None:
        return int(env)
    return fresh_seed()


# ---------------------------------------------------------------------------
# subcommands


def cmd_list_scenes(args) -> int:
    if args.format == "json":
        payload = {
            "scenes": [
                {"name": name, "description": SCENE_DESCRIPTIONS[name]}
                for name in BUILTIN_SCENE_NAMES
            ]
        }
        _emit(_json_dumps(payload), args.output)
    else:
        lines = [f"{name}: {SCENE_DESCRIPTIONS[name]}" for name in BUILTIN_SCENE_NAMES]
        _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_run(args) -> int:
    scene = _resolve_scene(args.scene)
    for override in args.set or []:
        _parse_override(scene, override)
    seed = _default_seed(args.seed)
    digest = scene_hash(scene)
    if args.exact:
        if args.scene == "heralded-cnot":
            exact = propagate_exact(scene)
            c_in = _component_state(scene, "c_source")
            t_in = _component_state(scene, "t_source")
            bell = scene.component("bell_src").params.get("bell", "phi_plus")
            report = experiments.run_heralded_cnot(c_in, t_in, bell=bell)
            payload = report.to_json_dict()
            payload.update({"scene": args.scene, "scene_hash": digest})
            _emit(_json_dumps(payload), args.output)
            return 0
        return _amplitudes_payload(args, scene, digest)
    herald_rule = HERALD_RULES.get(args.scene)
    counts, _ = propagate_sampled(
        scene, args.shots, seed, herald_rule=herald_rule, trace_shots=0
    )
    if args.format == "csv":
        text = f"# scene={args.scene}\n# scene_hash={digest}\n" + counts.to_csv()
        _emit(text, args.output)
    else:
        payload = counts.to_json_dict()
        payload.update({"scene": args.scene, "scene_hash": digest})
        _emit(_json_dumps(payload), args.output)
    return 0


def _component_state(scene: Scene, component_id: str) -> PolarizationState:
    from .scene import effective_params

    raw = effective_params(scene.component(component_id))["state"]
    return PolarizationState.from_amplitudes(complex(*raw["h"]), complex(*raw["v"]))


def _amplitudes_payload(args, scene: Scene, digest: str) -> int:
    exact = propagate_exact(scene)
    det_ids = list(scene.detectors)
    patterns = exact.detector_pattern_probabilities()
    readable = {
        _pattern_key(det_ids, pattern): prob for pattern, prob in patterns.items()
    }
    payload = {
        "scene": args.scene,
        "scene_hash": digest,
        "detectors": det_ids,
        "patterns": {k: readable[k] for k in sorted(readable)},
        "total": sum(readable.values()),
    }
    _emit(_json_dumps(payload), args.output)
    return 0


def cmd_amplitudes(args) -> int:
    scene = _resolve_scene(args.scene)
    for override in args.set or []:
        _parse_override(scene, override)
    return _amplitudes_payload(args, scene, scene_hash(scene))


def cmd_tomography(args) -> int:
    if args.prep_state:
        psi = STATE_SHORTHAND[args.prep_state]
    else:
        alpha, beta, gamma = (rad(float(x)) for x in args.prep.split(","))
        psi = apply_jones(STATE_H, qhq_unitary(alpha, beta, gamma))
    settings = TomographySettings()
    seed = _default_seed(args.seed)
    if args.exact:
        rho = reconstruct_from_diffs(exact_diffs(psi, settings), settings)
        used_shots = 0
    else:
        if args.shots < 1:
            raise InsufficientDataError("tomography needs at least one shot per setting")
        from .rng import philox

        tables = []
        for k, setting in enumerate(settings.settings):
            p_h = measure.analyzer_port_probability(psi, *setting)
            rng = philox(seed, stream=k + 1)
            n_h = int(rng.binomial(args.shots, p_h))
            tables.append(
                measure.CountsTable(
                    shots=args.shots,
                    per_detector={"H": n_h, "V": args.shots - n_h},
                    coincidences={},
                    seed=seed,
                )
            )
        rho = measure.tomography_reconstruct(tables, settings)
        used_shots = args.shots
    fid = fidelity(rho, psi)
    payload = {
        "prep": [[psi.alpha.real, psi.alpha.imag], [psi.beta.real, psi.beta.imag]],
        "density_matrix": [
            [[z.real, z.imag] for z in row] for row in np.asarray(rho.matrix)
        ],
        "fidelity": fid,
        "shots_per_setting": used_shots,
        "seed": seed,
        "prng": PRNG_ID,
    }
    _emit(_json_dumps(payload), args.output)
    return 0


def cmd_decompose(args) -> int:
    with open(args.unitary, encoding="utf-8") as fh:
        doc = json.load(fh)
    if "matrix" not in doc:
        raise ValidationError("unitary file needs a 'matrix' field")
    raw = doc["matrix"]
    try:
        u = np.array(
            [[complex(*raw[r][c]) for c in range(2)] for r in range(2)], dtype=complex
        )
    except (TypeError, IndexError) as exc:
        raise ValidationError("matrix must be 2x2 of [re, im] pairs") from exc
    alpha, beta, gamma = qhq_decompose(u)
    residual = unitary_distance(qhq_unitary(alpha, beta, gamma), u)
    payload = {
        "alpha_deg": math.degrees(alpha),
        "beta_deg": math.degrees(beta),
        "gamma_deg": math.degrees(gamma),
        "residual": residual,
    }
    _emit(_json_dumps(payload), args.output)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(
        create_app(ui_dir=args.ui), host=args.bind, port=args.port, log_level="info"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbench",
        description="Linear-optics quantum computing bench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-scenes", help="list the builtin experiment scenes")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--output")
    p.set_defaults(func=cmd_list_scenes)

    p = sub.add_parser("run", help="run a scene (sampled by default)")
    p.add_argument("scene", help="builtin scene name or path to a scene document")
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output")
    p.add_argument(
        "--set",
        action="append",
        metavar="component.param=value",
        help="override a component parameter (angles in degrees)",
    )
    p.add_argument("--exact", action="store_true", help="exact amplitudes, no sampling")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("amplitudes", help="exact detector-pattern probabilities")
    p.add_argument("scene")
    p.add_argument("--set", action="append", metavar="component.param=value")
    p.add_argument("--output")
    p.set_defaults(func=cmd_amplitudes)

    p = sub.add_parser("tomography", help="reconstruct a prepared state")
    p.add_argument(
        "--prep",
        default="0,0,0",
        help="QHQ plate angles alpha,beta,gamma in degrees applied to |H>",
    )
    p.add_argument(
        "--prep-state", choices=sorted(STATE_SHORTHAND), help="shorthand prep state"
    )
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--seed", type=int)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--output")
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("decompose", help="decompose a 2x2 unitary into plate angles")
    p.add_argument("unitary", help="JSON file with a 'matrix' of [re,im] pairs")
    p.add_argument("--output")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--port", type=int, default=8077)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--ui", help="directory with the built lab UI, mounted at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ReferenceError_ as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except QBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
