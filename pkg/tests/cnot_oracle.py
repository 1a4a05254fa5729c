"""Brute-force amplitude oracle for the heralded C-NOT bench.

Ground truth for the correction table and the success probability.  Kept
deliberately independent of the engine: photons are tracked as explicit
creation-operator monomials, the diagonal-basis splitter is derived by a
basis change (not matrix conjugation), and output fidelities go through an
explicit reduced density matrix instead of an SVD factorization.
"""

import math
from itertools import product

import numpy as np

SQ2 = math.sqrt(2.0)
REFLECT = 1j  # splitter reflection phase, matching the bench convention

# single-photon substitution rules: mode label -> [(mode label, amplitude)]


def pbs_hv_rules(in1, in2, out1, out2):
    return {
        f"{in1}:H": [(f"{out1}:H", 1.0)],
        f"{in1}:V": [(f"{out2}:V", REFLECT)],
        f"{in2}:H": [(f"{out2}:H", 1.0)],
        f"{in2}:V": [(f"{out1}:V", REFLECT)],
    }


def pbs_da_rules(in1, in2, out1, out2):
    """Diagonal-basis splitter via explicit basis change.

    H = (D + A)/sqrt2, V = (D - A)/sqrt2; the D component transmits, the A
    component reflects with the usual phase, and the output is written back
    in the H/V mode pair of the destination path.
    """
    d = {"H": 1 / SQ2, "V": 1 / SQ2}  # |D> in HV coordinates
    a = {"H": 1 / SQ2, "V": -1 / SQ2}

    def route(in_path, thru, refl):
        rules = {}
        for pol, (coef_d, coef_a) in {"H": (1 / SQ2, 1 / SQ2), "V": (1 / SQ2, -1 / SQ2)}.items():
            targets = []
            for base, coef, dest in ((d, coef_d, thru), (a, coef_a * REFLECT, refl)):
                for out_pol, w in base.items():
                    targets.append((f"{dest}:{out_pol}", coef * w))
            rules[f"{in_path}:{pol}"] = targets
        return rules

    rules = {}
    rules.update(route(in1, out1, out2))
    rules.update(route(in2, out2, out1))
    return rules


def analyzer_da_rules(path, det_d, det_a):
    # measuring in D/A: the D component clicks one detector, A the other
    return {
        f"{path}:H": [(f"{det_d}:cnt", 1 / SQ2), (f"{det_a}:cnt", 1 / SQ2)],
        f"{path}:V": [(f"{det_d}:cnt", 1 / SQ2), (f"{det_a}:cnt", -1 / SQ2)],
    }


def analyzer_hv_rules(path, det_h, det_v):
    return {
        f"{path}:H": [(f"{det_h}:cnt", 1.0)],
        f"{path}:V": [(f"{det_v}:cnt", 1.0)],
    }


BELL = {
    "phi_plus": [(("a1:H", "a2:H"), 1 / SQ2), (("a1:V", "a2:V"), 1 / SQ2)],
    "phi_minus": [(("a1:H", "a2:H"), 1 / SQ2), (("a1:V", "a2:V"), -1 / SQ2)],
    "psi_plus": [(("a1:H", "a2:V"), 1 / SQ2), (("a1:V", "a2:H"), 1 / SQ2)],
    "psi_minus": [(("a1:H", "a2:V"), 1 / SQ2), (("a1:V", "a2:H"), -1 / SQ2)],
}


def substitute(terms, rules):
    """Apply substitution rules to every photon of every monomial term."""
    out = {}
    for modes, amp in terms.items():
        expansions = []
        for mode in modes:
            expansions.append(rules.get(mode, [(mode, 1.0)]))
        for combo in product(*expansions):
            new_modes = tuple(sorted(m for m, _ in combo))
            coeff = amp
            for _, c in combo:
                coeff *= c
            if abs(coeff) > 1e-15:
                out[new_modes] = out.get(new_modes, 0.0) + coeff
    return {k: v for k, v in out.items() if abs(v) > 1e-15}


def bosonic_amplitudes(terms):
    """Monomial coefficients -> occupation amplitudes (sqrt n! factors)."""
    out = {}
    for modes, coeff in terms.items():
        counts = {}
        for m in modes:
            counts[m] = counts.get(m, 0) + 1
        factor = math.sqrt(math.prod(math.factorial(n) for n in counts.values()))
        out[modes] = coeff * factor
    return out


def run_oracle(c_vec, t_vec, bell="phi_plus"):
    """Full amplitude map over monomials after splitters and analyzers."""
    alpha, beta = c_vec
    gamma, delta = t_vec
    terms = {}
    for (m1, m2), w in BELL[bell]:
        for cm, ca in (("c:H", alpha), ("c:V", beta)):
            for tm, ta in (("t:H", gamma), ("t:V", delta)):
                key = tuple(sorted((cm, tm, m1, m2)))
                amp = w * ca * ta
                if abs(amp) > 1e-15:
                    terms[key] = terms.get(key, 0.0) + amp
    terms = substitute(terms, pbs_hv_rules("c", "a1", "c_out", "a1_out"))
    terms = substitute(terms, pbs_da_rules("t", "a2", "t_out", "a2_out"))
    terms = substitute(terms, analyzer_da_rules("a1_out", "d1", "d2"))
    terms = substitute(terms, analyzer_hv_rules("a2_out", "d3", "d4"))
    return bosonic_amplitudes(terms)


def detector_counts(modes):
    counts = {"d1": 0, "d2": 0, "d3": 0, "d4": 0}
    for m in modes:
        det = m.split(":")[0]
        if det in counts:
            counts[det] += 1
    return counts


AO1_PATTERNS = {
    "d1+d3": {"d1": 1, "d2": 0, "d3": 1, "d4": 0},
    "d1+d4": {"d1": 1, "d2": 0, "d3": 0, "d4": 1},
    "d2+d3": {"d1": 0, "d2": 1, "d3": 1, "d4": 0},
    "d2+d4": {"d1": 0, "d2": 1, "d3": 0, "d4": 1},
}


def pattern_probability(amplitudes, pattern):
    return sum(
        abs(a) ** 2
        for modes, a in amplitudes.items()
        if detector_counts(modes) == pattern
    )


def success_probability(c_vec, t_vec, bell="phi_plus"):
    amps = run_oracle(c_vec, t_vec, bell)
    return sum(pattern_probability(amps, p) for p in AO1_PATTERNS.values())


def conditional_density(amplitudes, pattern):
    """4x4 density matrix of (c_out, t_out) given a detector pattern."""
    groups = {}
    for modes, amp in amplitudes.items():
        if detector_counts(modes) != pattern:
            continue
        c_pol = [m.split(":")[1] for m in modes if m.startswith("c_out:")]
        t_pol = [m.split(":")[1] for m in modes if m.startswith("t_out:")]
        if len(c_pol) != 1 or len(t_pol) != 1:
            raise AssertionError("pattern without one photon per output arm")
        rest = tuple(sorted(m for m in modes if not m.startswith(("c_out:", "t_out:"))))
        idx = ("HH", "HV", "VH", "VV").index(c_pol[0] + t_pol[0])
        vec = groups.setdefault(rest, np.zeros(4, dtype=complex))
        vec[idx] += amp
    rho = np.zeros((4, 4), dtype=complex)
    for vec in groups.values():
        rho += np.outer(vec, vec.conj())
    return rho  # unnormalized; trace = pattern probability


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
PAULI["XZ"] = PAULI["X"] @ PAULI["Z"]

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def correction_fidelity(rho, correction, c_vec, t_vec):
    ideal = CNOT @ np.kron(np.asarray(c_vec), np.asarray(t_vec))
    corrected_ideal = np.kron(PAULI[correction[0]], PAULI[correction[1]]).conj().T @ ideal
    tr = np.trace(rho).real
    if tr < 1e-15:
        return None
    return float(np.real(corrected_ideal.conj() @ rho @ corrected_ideal) / tr)


def derive_correction_table(bell="phi_plus"):
    """Input-independent Pauli pair per pattern, by probe intersection."""
    probes = [
        ((1.0, 0.0), (0.0, 1.0)),
        ((0.6, 0.8), (1 / SQ2, 1j / SQ2)),
        ((1 / SQ2, -1j / SQ2), (0.8, -0.6)),
        ((0.96, 0.28j), (0.28, 0.96j)),
    ]
    names = ("I", "X", "Z", "XZ")
    table = {}
    for key, pattern in AO1_PATTERNS.items():
        candidates = set(product(names, repeat=2))
        for c_vec, t_vec in probes:
            c = np.asarray(c_vec) / np.linalg.norm(c_vec)
            t = np.asarray(t_vec) / np.linalg.norm(t_vec)
            amps = run_oracle(c, t, bell)
            rho = conditional_density(amps, pattern)
            candidates = {
                pair
                for pair in candidates
                if (f := correction_fidelity(rho, pair, c, t)) is not None
                and f > 1 - 1e-9
            }
        assert len(candidates) == 1, (key, candidates)
        table[key] = candidates.pop()
    return table
