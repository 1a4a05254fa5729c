"""Physics of the bench components.

Waveplates compile to Jones matrices, polarizing beam splitters to mode
unitaries, SPDC crystals to weighted two-photon branches.  Conventions are
pinned by tests, not prose: the quarter-wave plate splits its quarter wave
symmetrically so that QWP(45deg)|H> = (|H> + i|V>)/sqrt(2) up to a global
phase, and QWP(t)^2 equals HWP(t) up to a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidFrequenciesError, RegistryError, ValidationError
from .quantum import (
    H_POL,
    V_POL,
    FockState,
    ModeIndex,
    ModeUnitary,
    PolarizationState,
)

SPEED_OF_LIGHT = 299792458.0  # m/s

HV_BASIS = "HV"
DA_BASIS = "DA"


# ---------------------------------------------------------------------------
# Jones matrices


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def jones_retarder(theta: float, retardance: float) -> np.ndarray:
    """General birefringent retarder with its axis at ``theta``.

    The retardance is split symmetrically (+delta/2 on the axis, -delta/2 on
    the orthogonal axis), which keeps the determinant at 1.
    """
    half = retardance / 2.0
    core = np.array([[np.exp(1j * half), 0.0], [0.0, np.exp(-1j * half)]])
    return _rotation(theta) @ core @ _rotation(-theta)


def jones_hwp(theta: float) -> np.ndarray:
    """Half-wave plate at axis angle ``theta`` (radians).

    Returns the real matrix [[cos 2t, sin 2t], [sin 2t, -cos 2t]]; it is its
    own inverse and equals the symmetric pi-retarder up to a global phase.
    """
    c, s = math.cos(2.0 * theta), math.sin(2.0 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def jones_qwp(theta: float) -> np.ndarray:
    """Quarter-wave plate at axis angle ``theta`` (radians)."""
    return jones_retarder(theta, math.pi / 2.0)


@dataclass(frozen=True)
class WaveplateSpec:
    """A waveplate: half, quarter, or general retardance, with axis angle."""

    kind: str
    theta: float
    retardance: float | None = None

    def __post_init__(self):
        if self.kind not in ("half", "quarter", "general"):
            raise ValidationError(f"unknown waveplate kind {self.kind!r}")
        if self.kind == "general" and self.retardance is None:
            raise ValidationError("general waveplate needs a retardance")

    def jones(self) -> np.ndarray:
        if self.kind == "half":
            return jones_hwp(self.theta)
        if self.kind == "quarter":
            return jones_qwp(self.theta)
        return jones_retarder(self.theta, float(self.retardance))


# ---------------------------------------------------------------------------
# QHQ gate


def qhq_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Compile the quarter-half-quarter plate triple into one unitary.

    The product is QWP(alpha) @ HWP(beta) @ QWP(gamma); the rightmost factor
    acts first, i.e. the photon crosses the gamma plate before the others.
    """
    return jones_qwp(alpha) @ jones_hwp(beta) @ jones_qwp(gamma)


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Frobenius distance between 2x2 unitaries minimized over global phase."""
    trace = np.trace(v.conj().T @ u)
    if abs(trace) < 1e-15:
        return float(min(np.linalg.norm(u - v), np.linalg.norm(u + v)))
    phase = trace / abs(trace)
    return float(np.linalg.norm(u - phase * v))


def _check_unitary2(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValidationError("expected a 2x2 matrix")
    if not np.allclose(u @ u.conj().T, np.eye(2), atol=1e-10):
        raise ValidationError("matrix is not unitary")
    return u


def _yxy_euler_angles(v: np.ndarray) -> tuple[float, float, float]:
    """Angles (t1, t2, t3) with v = exp(i t1 sy) exp(i t2 sx) exp(i t3 sy)."""
    a, b = v[0, 0], v[0, 1]
    cos_part = math.hypot(a.real, b.real)
    sin_part = math.hypot(a.imag, b.imag)
    t2 = math.atan2(sin_part, cos_part)
    s = math.atan2(b.real, a.real) if cos_part > 1e-12 else 0.0
    d = math.atan2(a.imag, b.imag) if sin_part > 1e-12 else 0.0
    return (s + d) / 2.0, t2, (s - d) / 2.0


def qhq_decompose(u: np.ndarray, tol: float = 1e-9) -> tuple[float, float, float]:
    """Plate angles (alpha, beta, gamma) whose QHQ gate equals ``u`` up to phase.

    Closed form: stripping the global phase reduces the plate product to a
    Y-X-Y Euler factorization of SU(2).  A bounded multi-start minimization
    of the recomposition distance backs it up for pathological inputs.
    """
    u = _check_unitary2(u)
    det = np.linalg.det(u)
    v = u / np.sqrt(det)  # either square root works up to overall sign
    t1, t2, t3 = _yxy_euler_angles(v)
    alpha = (-t1) % math.pi
    gamma = t3 % math.pi
    beta = ((alpha + gamma - t2) / 2.0) % math.pi
    if unitary_distance(qhq_unitary(alpha, beta, gamma), u) <= tol:
        return alpha, beta, gamma
    return _qhq_decompose_numeric(u)


def _qhq_decompose_numeric(u: np.ndarray) -> tuple[float, float, float]:
    def objective(angles):
        return unitary_distance(qhq_unitary(*angles), u)

    starts = [
        (a * math.pi / 2 + 0.4, b * math.pi / 2 + 0.2, g * math.pi / 2 + 0.7)
        for a in range(2)
        for b in range(4)
        for g in range(2)
    ]
    best = None
    for start in starts:
        res = minimize(
            objective,
            start,
            method="L-BFGS-B",
            bounds=[(0.0, math.pi)] * 3,
            options={"ftol": 1e-14, "gtol": 1e-12},
        )
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < 1e-10:
            break
    if best is None or best.fun > 1e-8:
        raise ValidationError("could not decompose unitary into a QHQ triple")
    return tuple(a % math.pi for a in best.x)


def haar_random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary via QR of a complex Gaussian."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q @ np.diag(np.diag(r) / np.abs(np.diag(r)))


# ---------------------------------------------------------------------------
# polarizing beam splitter


@dataclass(frozen=True)
class PbsSpec:
    """Polarizing beam splitter over four ports.

    In the HV basis, H entering port in_k exits out_k (transmission) while V
    crosses over with ``reflection_phase``.  The DA basis is the same device
    conjugated by 22.5 degree half-wave plates on every port, so diagonal
    light transmits and antidiagonal light reflects.
    """

    basis: str = HV_BASIS
    in1: str = "in1"
    in2: str = "in2"
    out1: str = "out1"
    out2: str = "out2"
    reflection_phase: complex = 1j

    def __post_init__(self):
        if self.basis not in (HV_BASIS, DA_BASIS):
            raise ValidationError(f"PBS basis must be HV or DA, got {self.basis!r}")
        if abs(abs(self.reflection_phase) - 1.0) > 1e-12:
            raise ValidationError("reflection phase must be a unit complex number")

    def ports(self) -> tuple[str, str, str, str]:
        return self.in1, self.in2, self.out1, self.out2


def pbs_scattering_block(spec: PbsSpec) -> np.ndarray:
    """4x4 unitary from (in1H, in1V, in2H, in2V) to (out1H, out1V, out2H, out2V)."""
    r = spec.reflection_phase
    block = np.array(
        [
            [1, 0, 0, 0],  # in1 H -> out1 H
            [0, 0, 0, r],  # in2 V -> out1 V
            [0, 0, 1, 0],  # in2 H -> out2 H
            [0, r, 0, 0],  # in1 V -> out2 V
        ],
        dtype=complex,
    )
    if spec.basis == DA_BASIS:
        h = jones_hwp(math.pi / 8)
        w = np.kron(np.eye(2), h)  # per-port 22.5deg plates
        block = w @ block @ w
    return block


def pbs_mode_unitary(spec: PbsSpec, registry) -> ModeUnitary:
    """Embed the PBS into a square unitary over ``registry``.

    Input-port modes scatter onto output-port modes; the inverse block routes
    output modes back so the matrix closes to a unitary.  Photons never sit
    on output modes before the splitter, so that completion is unobservable.
    """
    registry = tuple(registry)
    in_modes = [ModeIndex(p, pol) for p in (spec.in1, spec.in2) for pol in (H_POL, V_POL)]
    out_modes = [ModeIndex(p, pol) for p in (spec.out1, spec.out2) for pol in (H_POL, V_POL)]
    for m in in_modes + out_modes:
        if m not in registry:
            raise RegistryError(f"PBS port mode {m.label()} missing from registry")
    block = pbs_scattering_block(spec)
    n = len(registry)
    u = np.eye(n, dtype=complex)
    idx_in = [registry.index(m) for m in in_modes]
    idx_out = [registry.index(m) for m in out_modes]
    for i in idx_in + idx_out:
        u[i, i] = 0.0
    for r_out, row in enumerate(block):
        for c_in, amp in enumerate(row):
            u[idx_out[r_out], idx_in[c_in]] = amp
            u[idx_in[c_in], idx_out[r_out]] = np.conj(amp)
    return ModeUnitary(u, registry, registry)


# ---------------------------------------------------------------------------
# SPDC sources


@dataclass(frozen=True)
class SpdcSourceSpec:
    """Down-conversion crystal (single or crossed-pair geometry).

    A single crystal converts the vertical pump component into an |H,H> pair;
    the crossed pair emits the superposition beta|H,H> + alpha e^{i phi}|V,V>
    from pump alpha|H> + beta|V>, normalized, with per-pulse probability
    ``emission_probability``.
    """

    geometry: str = "single-crystal"
    pump_wavelength: float = 351e-9
    emission_probability: float = 0.05
    relative_phase: float = 0.0

    def __post_init__(self):
        if self.geometry not in ("single-crystal", "crossed-pair"):
            raise ValidationError(f"unknown SPDC geometry {self.geometry!r}")
        if not 0.0 < self.emission_probability <= 1.0:
            raise ValidationError("emission probability must be in (0, 1]")
        if self.pump_wavelength <= 0:
            raise ValidationError("pump wavelength must be positive")


def spdc_emit(
    spec: SpdcSourceSpec,
    pump: PolarizationState,
    signal_path: str = "signal",
    idler_path: str = "idler",
) -> FockState | None:
    """Emitted two-photon branch, or None when the pump cannot convert.

    The branch amplitudes are normalized; its ``norm`` field carries the
    per-pulse pair amplitude (sqrt of the emission probability).
    """
    registry = (
        ModeIndex(signal_path, H_POL),
        ModeIndex(signal_path, V_POL),
        ModeIndex(idler_path, H_POL),
        ModeIndex(idler_path, V_POL),
    )
    hh = (1, 0, 1, 0)
    vv = (0, 1, 0, 1)
    p = spec.emission_probability
    if spec.geometry == "single-crystal":
        weight = math.sqrt(p) * abs(pump.beta)
        if weight < 1e-15:
            return None
        return FockState(registry, {hh: 1.0}, norm=weight)
    terms = {
        hh: pump.beta,
        vv: pump.alpha * np.exp(1j * spec.relative_phase),
    }
    terms = {occ: amp for occ, amp in terms.items() if abs(amp) > 1e-15}
    return FockState.from_terms(registry, terms, norm=math.sqrt(p))


BELL_STATES = {
    "phi_plus": {(1, 0, 1, 0): 1 / math.sqrt(2), (0, 1, 0, 1): 1 / math.sqrt(2)},
    "phi_minus": {(1, 0, 1, 0): 1 / math.sqrt(2), (0, 1, 0, 1): -1 / math.sqrt(2)},
    "psi_plus": {(1, 0, 0, 1): 1 / math.sqrt(2), (0, 1, 1, 0): 1 / math.sqrt(2)},
    "psi_minus": {(1, 0, 0, 1): 1 / math.sqrt(2), (0, 1, 1, 0): -1 / math.sqrt(2)},
}


def bell_pair(name: str, path_a: str, path_b: str) -> FockState:
    """One of the four Bell states on two spatial paths."""
    if name not in BELL_STATES:
        raise ValidationError(f"unknown Bell state {name!r}")
    registry = (
        ModeIndex(path_a, H_POL),
        ModeIndex(path_a, V_POL),
        ModeIndex(path_b, H_POL),
        ModeIndex(path_b, V_POL),
    )
    return FockState(registry, BELL_STATES[name])


# ---------------------------------------------------------------------------
# detectors


@dataclass(frozen=True)
class DetectorSpec:
    """Idealized photon counter."""

    efficiency: float = 1.0
    dark_count_probability: float = 0.0
    number_resolving: bool = True

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValidationError("efficiency must be in [0, 1]")
        if self.dark_count_probability < 0.0:
            raise ValidationError("dark count probability must be >= 0")


def detect(spec: DetectorSpec, occupation: int, rng_draw: tuple[float, float]) -> int:
    """Click count for ``occupation`` photons given two unit uniform draws.

    Each photon registers independently with probability ``efficiency``
    (binomial thinning via inverse CDF on the first draw); the second draw
    adds at most one dark count per shot.  Non-number-resolving detectors
    clip the result to {0, 1}.
    """
    if occupation < 0:
        raise ValidationError("occupation must be >= 0")
    u_eff, u_dark = rng_draw
    clicks = 0
    if occupation > 0:
        if spec.efficiency >= 1.0:
            clicks = occupation
        elif spec.efficiency > 0.0:
            # inverse binomial CDF on one uniform
            p = spec.efficiency
            cdf = 0.0
            for k in range(occupation + 1):
                cdf += math.comb(occupation, k) * p**k * (1 - p) ** (occupation - k)
                if u_eff <= cdf:
                    clicks = k
                    break
            else:
                clicks = occupation
    if spec.dark_count_probability > 0.0 and u_dark < spec.dark_count_probability:
        clicks += 1
    if not spec.number_resolving:
        clicks = min(clicks, 1)
    return clicks


# ---------------------------------------------------------------------------
# phase matching


@dataclass(frozen=True)
class RefractiveIndexPoint:
    """Ordinary/extraordinary index pair of the crystal at one frequency."""

    n_ordinary: float
    n_extraordinary: float
    omega: float

    def __post_init__(self):
        if self.n_ordinary <= 1.0 or self.n_extraordinary <= 1.0:
            raise ValidationError("refractive indices must exceed 1")
        if self.omega <= 0.0:
            raise ValidationError("angular frequency must be positive")

    def index(self, polarization: str) -> float:
        if polarization == "o":
            return self.n_ordinary
        if polarization == "e":
            return self.n_extraordinary
        raise ValidationError("polarization must be 'o' or 'e'")


def phase_match(
    pump: RefractiveIndexPoint,
    signal: RefractiveIndexPoint,
    idler: RefractiveIndexPoint,
    tolerance: float,
    pump_pol: str = "e",
    signal_pol: str = "o",
    idler_pol: str = "o",
) -> tuple[bool, float]:
    """Collinear momentum-conservation test for down-conversion.

    Requires energy conservation (signal + idler = pump frequency) up front;
    returns (matched, mismatch) where the mismatch is |n3 w3 + n2 w2 - n1 w1|/c
    in rad/m and ``matched`` means mismatch <= tolerance.  The default
    polarization assignment is type-I: extraordinary pump, ordinary pair.
    """
    if abs(signal.omega + idler.omega - pump.omega) > 1e-9 * pump.omega:
        raise InvalidFrequenciesError(
            "signal and idler frequencies must sum to the pump frequency"
        )
    mismatch = (
        abs(
            signal.index(signal_pol) * signal.omega
            + idler.index(idler_pol) * idler.omega
            - pump.index(pump_pol) * pump.omega
        )
        / SPEED_OF_LIGHT
    )
    return mismatch <= tolerance, mismatch
