// Role text for the explain panel, per component kind and per bench.

export interface Explanation {
  title: string;
  role: string;
  link?: string;
}

const KIND_TEXT: Record<string, Explanation> = {
  laser: {
    title: "Pump laser",
    role:
      "Produces the intense ultraviolet beam that drives the nonlinear crystal. " +
      "Click it to fire; its polarization is conditioned by the splitter and plate downstream.",
    link: "https://en.wikipedia.org/wiki/Ion_laser",
  },
  photon_source: {
    title: "Single-photon source",
    role:
      "Idealized heralded source that emits exactly one photon per click, " +
      "horizontally polarized unless configured otherwise. It stands in for the full heralding bench.",
    link: "https://en.wikipedia.org/wiki/Single-photon_source",
  },
  bell_source: {
    title: "Entangled-pair source",
    role:
      "Emits two photons in a maximally entangled polarization state (the ancilla pair of the gate). " +
      "A crossed pair of nonlinear crystals realizes it physically.",
    link: "https://en.wikipedia.org/wiki/Bell_state",
  },
  pbs: {
    title: "Polarizing beam splitter",
    role:
      "Transmits one linear polarization and reflects the orthogonal one. " +
      "In the diagonal basis (22.5° plates on its ports) it splits D from A instead of H from V; " +
      "two photons meeting here interfere, which is what makes the gate work.",
    link: "https://en.wikipedia.org/wiki/Polarizer#Beam-splitting_polarizers",
  },
  hwp: {
    title: "Half-wave plate",
    role:
      "Birefringent crystal retarding one axis by half a wave: rotates linear polarization " +
      "by twice the angle between the light and its fast axis. Click the arrows to turn it in 5° steps.",
    link: "https://en.wikipedia.org/wiki/Waveplate",
  },
  qwp: {
    title: "Quarter-wave plate",
    role:
      "Quarter-wave retarder: converts linear to circular polarization and back. " +
      "Together with the half-wave plate it reaches every point of the Bloch sphere.",
    link: "https://en.wikipedia.org/wiki/Waveplate",
  },
  bbo: {
    title: "Nonlinear crystal (BBO)",
    role:
      "Beta barium borate. Converts one pump photon into two lower-frequency photons " +
      "of matching polarization (type-I down-conversion); birefringence makes the momenta balance.",
    link: "https://en.wikipedia.org/wiki/Spontaneous_parametric_down-conversion",
  },
  apd: {
    title: "Single-photon detector",
    role:
      "Avalanche photodiode counting singles. Ideal here: every arriving photon clicks, " +
      "so the counters below it tally exactly what the quantum state delivers.",
    link: "https://en.wikipedia.org/wiki/Avalanche_photodiode",
  },
  smf: {
    title: "Single-mode fiber",
    role:
      "Routes the kept photon onward without loss. In these benches it terminates a path " +
      "whose photon is used later rather than detected.",
  },
  prism: {
    title: "Prism",
    role: "Redirects the beam path; leaves the polarization untouched.",
  },
};

const SCENE_NOTES: Record<string, string> = {
  heralded:
    "Detecting one photon of the pair announces its partner: set the pump plate to 0° for the maximum pair rate.",
  "single-qubit-gate":
    "The triple quarter-half-quarter acts as one arbitrary rotation of the qubit; watch the Bloch arrow move plate by plate.",
  "projective-measurement":
    "Five plates prepare and analyze the state; the splitter and two counters realize the projective measurement.",
  "entangled-pair":
    "With the pump diagonal, the two crystals emit indistinguishably and the pair leaves entangled.",
  "heralded-cnot":
    "Exactly one click on d1/d2 and one on d3/d4 heralds a successful gate on the two outgoing qubits.",
};

export function explain(kind: string, scene: string | null): Explanation {
  const base = KIND_TEXT[kind] ?? { title: kind, role: "Bench component." };
  const note = scene ? SCENE_NOTES[scene] : undefined;
  return note ? { ...base, role: `${base.role}\n\nIn this bench: ${note}` } : base;
}

export const INDISTINGUISHABILITY_NOTE =
  "Photon markers are illustrative; photons are indistinguishable.";
