"""Projective measurement, tomography, coincidences and correlation statistics.

The analyzer in front of a PBS is a quarter-wave plate followed by a
half-wave plate; a setting (q, h) therefore applies HWP(h) @ QWP(q) to the
state before the H/V split.  Forward simulation of the three default
tomography settings shows they measure the z, x and y Bloch components in
that order; the reconstructor solves the general linear system, so any
informationally complete plate settings work.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError
from .optics import jones_hwp, jones_qwp
from .quantum import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix2,
    PolarizationState,
)
from .rng import PRNG_ID

H_PORT = "H"
V_PORT = "V"


# ---------------------------------------------------------------------------
# counts


@dataclass
class CountsTable:
    """Per-detector and coincidence tallies of one sampled run."""

    shots: int
    per_detector: dict[str, int]
    coincidences: dict[str, int]
    seed: int
    prng: str = PRNG_ID

    def __post_init__(self):
        for det, clicks in self.per_detector.items():
            if clicks < 0:
                raise ValidationError(f"negative click count for {det!r}")
        for pattern, count in self.coincidences.items():
            if count > self.shots:
                raise ValidationError(f"coincidence {pattern!r} exceeds shot count")

    def to_json_dict(self) -> dict:
        return {
            "shots": self.shots,
            "per_detector": dict(sorted(self.per_detector.items())),
            "coincidences": dict(sorted(self.coincidences.items())),
            "seed": self.seed,
            "prng": self.prng,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(f"# shots={self.shots}\n")
        out.write(f"# seed={self.seed}\n")
        out.write(f"# prng={self.prng}\n")
        out.write("detector,clicks\n")
        for det, clicks in sorted(self.per_detector.items()):
            out.write(f"{det},{clicks}\n")
        for pattern, count in sorted(self.coincidences.items()):
            out.write(f"coinc:{pattern},{count}\n")
        return out.getvalue()


def coincidence_key(clicks: dict[str, int]) -> str:
    """Canonical label for a shot's click pattern, e.g. 'd1+d3' or 'd2*2'."""
    parts = []
    for det in sorted(clicks):
        n = clicks[det]
        if n == 1:
            parts.append(det)
        elif n > 1:
            parts.append(f"{det}*{n}")
    return "+".join(parts) if parts else "none"


# ---------------------------------------------------------------------------
# projective law


def projective_probability(
    psi: PolarizationState, basis_state: PolarizationState
) -> float:
    """Born probability |<basis|psi>|^2."""
    return float(abs(basis_state.overlap(psi)) ** 2)


def analyzer_unitary(qwp_angle: float, hwp_angle: float) -> np.ndarray:
    """Jones matrix of the analysis pair; the photon crosses the QWP first."""
    return jones_hwp(hwp_angle) @ jones_qwp(qwp_angle)


def analyzer_port_probability(
    psi: PolarizationState, qwp_angle: float, hwp_angle: float
) -> float:
    """Probability of the H output port after the analysis plates."""
    vec = analyzer_unitary(qwp_angle, hwp_angle) @ psi.as_vector()
    return float(abs(vec[0]) ** 2)


def measure_shot(
    psi: PolarizationState,
    analyzer: tuple[float, float],
    rng: np.random.Generator,
) -> str:
    """One Born-sampled PBS outcome ('H' or 'V') behind the analysis plates."""
    p_h = analyzer_port_probability(psi, analyzer[0], analyzer[1])
    return H_PORT if rng.random() < p_h else V_PORT


# ---------------------------------------------------------------------------
# tomography


@dataclass(frozen=True)
class TomographySettings:
    """Three (qwp, hwp) analyzer settings, radians."""

    settings: tuple[tuple[float, float], ...] = (
        (0.0, 0.0),
        (np.pi / 4, np.pi / 8),
        (0.0, np.pi / 8),
    )

    def __post_init__(self):
        if len(self.settings) != 3:
            raise ValidationError("tomography needs exactly three settings")

    def axes(self) -> np.ndarray:
        """Bloch axis measured by each setting (rows)."""
        rows = []
        for q, h in self.settings:
            a = analyzer_unitary(q, h)
            m = a.conj().T @ np.diag([1.0, -1.0]) @ a
            rows.append(
                [
                    float(np.trace(m @ PAULI_X).real) / 2.0,
                    float(np.trace(m @ PAULI_Y).real) / 2.0,
                    float(np.trace(m @ PAULI_Z).real) / 2.0,
                ]
            )
        return np.array(rows)


def tomography_frequencies(
    counts: "CountsTable", port_h: str = H_PORT, port_v: str = V_PORT
) -> float:
    """Frequency difference (H port minus V port) of one analyzer run."""
    if counts.shots < 1:
        raise InsufficientDataError("tomography setting has zero shots")
    n_h = counts.per_detector.get(port_h, 0)
    n_v = counts.per_detector.get(port_v, 0)
    return (n_h - n_v) / counts.shots


def reconstruct_from_diffs(
    diffs, settings: TomographySettings = TomographySettings()
) -> DensityMatrix2:
    """Density matrix from the three port-frequency differences.

    Negative eigenvalues from finite statistics are clipped to zero and the
    trace renormalized, so the output always satisfies the density-matrix
    invariants.
    """
    axes = settings.axes()
    if abs(np.linalg.det(axes)) < 1e-9:
        raise ValidationError("tomography settings are not informationally complete")
    s = np.linalg.solve(axes, np.asarray(diffs, dtype=float))
    rho = 0.5 * (np.eye(2) + s[0] * PAULI_X + s[1] * PAULI_Y + s[2] * PAULI_Z)
    vals, vecs = np.linalg.eigh(rho)
    vals = np.clip(vals, 0.0, None)
    if vals.sum() == 0.0:
        raise InsufficientDataError("reconstruction collapsed to the zero matrix")
    vals = vals / vals.sum()
    rho = (vecs * vals) @ vecs.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return DensityMatrix2(rho)


def exact_diffs(
    psi: PolarizationState, settings: TomographySettings = TomographySettings()
) -> list[float]:
    """Infinite-statistics port differences for each setting."""
    return [
        2.0 * analyzer_port_probability(psi, q, h) - 1.0 for q, h in settings.settings
    ]


def tomography_reconstruct(
    counts: list["CountsTable"],
    settings: TomographySettings = TomographySettings(),
    port_h: str = H_PORT,
    port_v: str = V_PORT,
) -> DensityMatrix2:
    """Linear-inversion state estimate from three analyzer runs."""
    if len(counts) != 3:
        raise ValidationError("expected one counts table per tomography setting")
    diffs = [tomography_frequencies(c, port_h, port_v) for c in counts]
    return reconstruct_from_diffs(diffs, settings)


def exact_setting_counts(
    psi: PolarizationState,
    setting: tuple[float, float],
    shots: int,
    seed: int = 0,
) -> CountsTable:
    """Counts table with exact (infinite-statistics) expected tallies."""
    p_h = analyzer_port_probability(psi, setting[0], setting[1])
    n_h = int(round(shots * p_h))
    return CountsTable(
        shots=shots,
        per_detector={H_PORT: n_h, V_PORT: shots - n_h},
        coincidences={},
        seed=seed,
    )


# ---------------------------------------------------------------------------
# coincidence logic


def coincidence_1ao1(
    clicks: dict[str, int], group_a: set[str] | tuple, group_b: set[str] | tuple
) -> bool:
    """True iff each detector group saw exactly one click in total."""
    group_a, group_b = set(group_a), set(group_b)
    if group_a & group_b:
        raise ValidationError("1AO1 groups must be disjoint")
    total_a = sum(clicks.get(d, 0) for d in group_a)
    total_b = sum(clicks.get(d, 0) for d in group_b)
    return total_a == 1 and total_b == 1


# ---------------------------------------------------------------------------
# correlations


def correlation_E(counts: CountsTable) -> float:
    """Polarization correlation from (++, +-, -+, --) coincidence tallies."""
    n = {key: counts.coincidences.get(key, 0) for key in ("++", "+-", "-+", "--")}
    total = sum(n.values())
    if total == 0:
        raise InsufficientDataError("no coincidences recorded for this angle pair")
    return (n["++"] + n["--"] - n["+-"] - n["-+"]) / total


def chsh_value(e_ab: float, e_abp: float, e_apb: float, e_apbp: float) -> float:
    """CHSH statistic |E(a,b) - E(a,b') + E(a',b) + E(a',b')|."""
    return abs(e_ab - e_abp + e_apb + e_apbp)
