"""Complex-amplitude state representations and the algebra acting on them.

Single-qubit polarization states live in the {|H>, |V>} basis; multi-photon
states are sparse bosonic Fock states over (path, polarization) modes.
All values are immutable after construction and all operations are pure,
so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ImpossibleOutcomeError,
    NormalizationError,
    RegistryError,
    ValidationError,
)

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
MAX_PHOTONS = 6
MAX_MODES = 16

H_POL = "H"
V_POL = "V"

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


# ---------------------------------------------------------------------------
# single-qubit states


@dataclass(frozen=True)
class PolarizationState:
    """Pure polarization qubit: amplitudes of |H> and |V>."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(n - 1.0) > NORM_TOL:
            raise NormalizationError(
                f"state norm^2 = {n!r}, expected 1 within {NORM_TOL}"
            )

    @staticmethod
    def from_amplitudes(a: complex, b: complex) -> "PolarizationState":
        """Build a state from unnormalized amplitudes."""
        n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if n == 0.0:
            raise NormalizationError("zero vector cannot be normalized")
        return PolarizationState(a / n, b / n)

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def overlap(self, other: "PolarizationState") -> complex:
        """<self|other>."""
        return np.conj(self.alpha) * other.alpha + np.conj(self.beta) * other.beta

    def equals_up_to_phase(self, other: "PolarizationState", tol: float = 1e-10) -> bool:
        return abs(abs(self.overlap(other)) - 1.0) <= tol


STATE_H = PolarizationState(1.0, 0.0)
STATE_V = PolarizationState(0.0, 1.0)
STATE_D = PolarizationState(1 / math.sqrt(2), 1 / math.sqrt(2))
STATE_A = PolarizationState(1 / math.sqrt(2), -1 / math.sqrt(2))
STATE_R = PolarizationState(1 / math.sqrt(2), 1j / math.sqrt(2))
STATE_L = PolarizationState(1 / math.sqrt(2), -1j / math.sqrt(2))


@dataclass(frozen=True)
class BlochVector:
    """Point on (or inside) the unit sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        r2 = self.x**2 + self.y**2 + self.z**2
        if r2 > 1.0 + 1e-12:
            raise ValidationError(f"Bloch vector norm^2 = {r2} exceeds 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


def bloch_from_state(psi: PolarizationState) -> BlochVector:
    """Map a pure state to its Bloch-sphere point.

    Convention: (2 Re a*b, 2 Im a*b, |a|^2 - |b|^2), which puts |H> at +z,
    |D> at +x and (|H> - i|V>)/sqrt(2) at -y.  The tiny residual from storing
    irrational amplitudes in floats is removed by dividing through the squared
    norm, so basis-axis states land on the poles exactly.
    """
    a, b = psi.alpha, psi.beta
    n2 = abs(a) ** 2 + abs(b) ** 2
    cross = np.conj(a) * b
    return BlochVector(
        2.0 * cross.real / n2,
        2.0 * cross.imag / n2,
        (abs(a) ** 2 - abs(b) ** 2) / n2,
    )


def state_from_bloch(v: BlochVector) -> PolarizationState:
    """Inverse of bloch_from_state for unit vectors (global phase fixed)."""
    if abs(v.norm() - 1.0) > 1e-9:
        raise ValidationError("only unit Bloch vectors correspond to pure states")
    theta = math.acos(max(-1.0, min(1.0, v.z)))
    phi = math.atan2(v.y, v.x)
    return PolarizationState.from_amplitudes(
        math.cos(theta / 2.0), np.exp(1j * phi) * math.sin(theta / 2.0)
    )


def apply_jones(psi: PolarizationState, jones: np.ndarray) -> PolarizationState:
    """Apply a 2x2 unitary Jones matrix to a polarization state."""
    jones = np.asarray(jones, dtype=complex)
    if jones.shape != (2, 2):
        raise ValidationError(f"Jones matrix must be 2x2, got {jones.shape}")
    if not np.allclose(jones @ jones.conj().T, np.eye(2), atol=UNITARY_TOL):
        raise ValidationError("Jones matrix is not unitary")
    out = jones @ psi.as_vector()
    return PolarizationState.from_amplitudes(out[0], out[1])


# ---------------------------------------------------------------------------
# density matrices


@dataclass(frozen=True)
class DensityMatrix2:
    """2x2 density matrix (Hermitian, unit trace, positive)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.shape != (2, 2):
            raise ValidationError("density matrix must be 2x2")
        if not np.allclose(m, m.conj().T, atol=1e-10):
            raise ValidationError("density matrix must be Hermitian")
        if abs(np.trace(m) - 1.0) > 1e-10:
            raise ValidationError("density matrix trace must be 1")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise ValidationError("density matrix must be positive semidefinite")

    @staticmethod
    def from_state(psi: PolarizationState) -> "DensityMatrix2":
        v = psi.as_vector()
        return DensityMatrix2(np.outer(v, v.conj()))

    def bloch(self) -> BlochVector:
        m = self.matrix
        return BlochVector(
            float(2.0 * m[1, 0].real), float(2.0 * m[1, 0].imag), float((m[0, 0] - m[1, 1]).real)
        )


def fidelity(rho: DensityMatrix2, psi: PolarizationState) -> float:
    """<psi| rho |psi>, clipped into [0, 1] against float round-off."""
    v = psi.as_vector()
    val = float(np.real(v.conj() @ rho.matrix @ v))
    return min(1.0, max(0.0, val))


# ---------------------------------------------------------------------------
# Fock layer


@dataclass(frozen=True, order=True)
class ModeIndex:
    """One optical mode: a spatial path plus a polarization."""

    path: str
    pol: str

    def __post_init__(self):
        if self.pol not in (H_POL, V_POL):
            raise ValidationError(f"polarization must be H or V, got {self.pol!r}")

    def label(self) -> str:
        return f"{self.path}:{self.pol}"


def path_modes(path: str) -> tuple[ModeIndex, ModeIndex]:
    """The (H, V) mode pair of a spatial path."""
    return ModeIndex(path, H_POL), ModeIndex(path, V_POL)


def _check_registry(modes: Sequence[ModeIndex]) -> tuple[ModeIndex, ...]:
    reg = tuple(modes)
    if len(set(reg)) != len(reg):
        raise RegistryError("duplicate modes in registry")
    if len(reg) > MAX_MODES:
        raise RegistryError(f"registry has {len(reg)} modes, cap is {MAX_MODES}")
    return reg


@dataclass(frozen=True)
class FockState:
    """Sparse multi-photon state over an ordered mode registry.

    ``amplitudes`` maps occupation tuples (one entry per registry mode) to
    complex amplitudes and always sums to unit norm; ``norm`` carries the
    physical weight of conditional or probabilistic branches separately so
    that the amplitude map stays normalized.
    """

    registry: tuple[ModeIndex, ...]
    amplitudes: Mapping[tuple[int, ...], complex]
    norm: float = 1.0

    def __post_init__(self):
        reg = _check_registry(self.registry)
        object.__setattr__(self, "registry", reg)
        amps = {
            tuple(int(x) for x in occ): complex(a)
            for occ, a in self.amplitudes.items()
            if abs(a) > 0.0
        }
        if not amps:
            raise ValidationError("Fock state needs at least one nonzero amplitude")
        photons = {sum(occ) for occ in amps}
        if len(photons) != 1:
            raise ValidationError(
                f"mixed photon numbers {sorted(photons)} in one Fock state"
            )
        n_photons = photons.pop()
        if n_photons > MAX_PHOTONS:
            raise ValidationError(
                f"{n_photons} photons exceeds the cap of {MAX_PHOTONS}"
            )
        for occ in amps:
            if len(occ) != len(reg):
                raise RegistryError(
                    f"occupation vector length {len(occ)} != registry size {len(reg)}"
                )
            if any(k < 0 for k in occ):
                raise ValidationError("negative occupation")
        total = sum(abs(a) ** 2 for a in amps.values())
        if abs(total - 1.0) > 1e-10:
            # repair bounded floating-point drift, reject real violations
            if abs(total - 1.0) > 1e-6:
                raise NormalizationError(f"Fock amplitudes have norm^2 {total}")
            scale = 1.0 / math.sqrt(total)
            amps = {occ: a * scale for occ, a in amps.items()}
        object.__setattr__(self, "amplitudes", amps)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_terms(
        registry: Sequence[ModeIndex],
        terms: Mapping[tuple[int, ...], complex],
        norm: float = 1.0,
    ) -> "FockState":
        """Normalize raw amplitude terms; the dropped scale goes into ``norm``."""
        total = math.sqrt(sum(abs(a) ** 2 for a in terms.values()))
        if total == 0.0:
            raise ValidationError("all amplitudes vanish")
        return FockState(
            tuple(registry),
            {occ: a / total for occ, a in terms.items()},
            norm * total,
        )

    @staticmethod
    def single_photon(
        registry: Sequence[ModeIndex], psi: PolarizationState, path: str
    ) -> "FockState":
        """One photon on ``path`` in polarization state ``psi``."""
        reg = tuple(registry)
        amps: dict[tuple[int, ...], complex] = {}
        for amp, pol in ((psi.alpha, H_POL), (psi.beta, V_POL)):
            if abs(amp) == 0.0:
                continue
            occ = [0] * len(reg)
            occ[reg.index(ModeIndex(path, pol))] = 1
            amps[tuple(occ)] = amp
        return FockState(reg, amps)

    # -- helpers -----------------------------------------------------------

    def photon_count(self) -> int:
        return sum(next(iter(self.amplitudes)))

    def mode_position(self, mode: ModeIndex) -> int:
        try:
            return self.registry.index(mode)
        except ValueError:
            raise RegistryError(f"mode {mode.label()} not in registry") from None

    def probability(self, occ: tuple[int, ...]) -> float:
        return abs(self.amplitudes.get(tuple(occ), 0.0)) ** 2

    def overlap(self, other: "FockState") -> complex:
        if self.registry != other.registry:
            raise RegistryError("overlap requires identical registries")
        return sum(
            np.conj(a) * other.amplitudes.get(occ, 0.0)
            for occ, a in self.amplitudes.items()
        )

    def equals_up_to_phase(self, other: "FockState", tol: float = 1e-10) -> bool:
        return abs(abs(self.overlap(other)) - 1.0) <= tol


@dataclass(frozen=True)
class ModeUnitary:
    """Unitary scattering of creation operators between mode registries.

    ``matrix[k, j]`` is the amplitude with which input mode j feeds output
    mode k.  Source and target registries have equal size and usually
    coincide; components that reroute photons map one set of path modes onto
    another.
    """

    matrix: np.ndarray
    source: tuple[ModeIndex, ...]
    target: tuple[ModeIndex, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        src = _check_registry(self.source)
        object.__setattr__(self, "source", src)
        tgt = _check_registry(self.target if self.target is not None else src)
        object.__setattr__(self, "target", tgt)
        if m.shape != (len(tgt), len(src)):
            raise RegistryError(
                f"matrix shape {m.shape} does not match registries "
                f"({len(tgt)}x{len(src)})"
            )
        if m.shape[0] != m.shape[1] or not np.allclose(
            m @ m.conj().T, np.eye(m.shape[0]), atol=UNITARY_TOL
        ):
            raise ValidationError("mode matrix is not unitary")

    @staticmethod
    def identity(registry: Sequence[ModeIndex]) -> "ModeUnitary":
        reg = tuple(registry)
        return ModeUnitary(np.eye(len(reg)), reg, reg)

    def then(self, other: "ModeUnitary") -> "ModeUnitary":
        """Composition: apply self first, then other."""
        if other.source != self.target:
            raise RegistryError("composition registries do not line up")
        return ModeUnitary(other.matrix @ self.matrix, self.source, other.target)


def _multinomial(n: int, parts: Sequence[int]) -> int:
    out = math.factorial(n)
    for p in parts:
        out //= math.factorial(p)
    return out


def apply_mode_unitary(state: FockState, u: ModeUnitary) -> FockState:
    """Scatter every creation operator through ``u`` and re-expand.

    a+_j -> sum_k  u[k, j] a+_k over the target registry.  Photon number and
    norm are preserved; small float drift is renormalized away.
    """
    if state.registry != u.source:
        raise RegistryError(
            "state registry does not match the unitary's source registry"
        )
    n_out = len(u.target)
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.amplitudes.items():
        # coefficient of the monomial, tracked without factorial normalization
        terms: dict[tuple[int, ...], complex] = {(0,) * n_out: amp}
        denom = 1.0
        for j, nj in enumerate(occ):
            if nj == 0:
                continue
            denom *= math.factorial(nj)
            col = u.matrix[:, j]
            new_terms: dict[tuple[int, ...], complex] = {}
            for ks in combinations_with_replacement(range(n_out), nj):
                exps = [0] * n_out
                coeff = 1.0 + 0.0j
                for k in ks:
                    exps[k] += 1
                    coeff *= col[k]
                if coeff == 0.0:
                    continue
                coeff *= _multinomial(nj, exps)
                for prev, c in terms.items():
                    key = tuple(p + e for p, e in zip(prev, exps))
                    new_terms[key] = new_terms.get(key, 0.0) + c * coeff
            terms = new_terms
        scale = 1.0 / math.sqrt(denom)
        for occ_out, c in terms.items():
            fact = math.sqrt(
                math.prod(math.factorial(m) for m in occ_out)
            )
            out[occ_out] = out.get(occ_out, 0.0) + c * scale * fact
    out = {occ: a for occ, a in out.items() if abs(a) > 1e-14}
    total = math.sqrt(sum(abs(a) ** 2 for a in out.values()))
    if abs(total - 1.0) > 1e-8:
        raise ValidationError(f"unitary scattering changed the norm to {total}")
    return FockState(u.target, {occ: a / total for occ, a in out.items()}, state.norm)


# ---------------------------------------------------------------------------
# post-selection


@dataclass(frozen=True)
class OccupationPattern:
    """Partial constraint on mode occupations.

    ``exact`` pins single modes to photon counts; each entry of ``grouped``
    pins the total count across a set of modes (e.g. exactly one photon on
    either output of an analyzer).
    """

    exact: tuple[tuple[ModeIndex, int], ...] = ()
    grouped: tuple[tuple[tuple[ModeIndex, ...], int], ...] = ()

    @staticmethod
    def exactly(assignments: Mapping[ModeIndex, int]) -> "OccupationPattern":
        return OccupationPattern(exact=tuple(sorted(assignments.items())))

    @staticmethod
    def total_in(modes: Iterable[ModeIndex], count: int) -> "OccupationPattern":
        return OccupationPattern(grouped=((tuple(modes), count),))

    def combine(self, other: "OccupationPattern") -> "OccupationPattern":
        return OccupationPattern(
            self.exact + other.exact, self.grouped + other.grouped
        )

    def matches(self, registry: Sequence[ModeIndex], occ: Sequence[int]) -> bool:
        reg = list(registry)
        for mode, want in self.exact:
            if occ[reg.index(mode)] != want:
                return False
        for modes, want in self.grouped:
            if sum(occ[reg.index(m)] for m in modes) != want:
                return False
        return True


def post_select(
    state: FockState, pattern: OccupationPattern
) -> tuple[float, FockState]:
    """Condition on a detector pattern.

    Returns (probability, conditional state).  The conditional state is
    renormalized and keeps the full registry, with the constrained modes
    frozen at their observed occupations.  Raises ImpossibleOutcomeError if
    the pattern carries (numerically) no probability.
    """
    kept = {
        occ: amp
        for occ, amp in state.amplitudes.items()
        if pattern.matches(state.registry, occ)
    }
    probability = sum(abs(a) ** 2 for a in kept.values())
    if probability < 1e-15:
        raise ImpossibleOutcomeError("post-selection pattern has zero probability")
    scale = 1.0 / math.sqrt(probability)
    conditional = FockState(
        state.registry,
        {occ: a * scale for occ, a in kept.items()},
        state.norm * math.sqrt(probability),
    )
    return probability, conditional


def tensor(a: FockState, b: FockState) -> FockState:
    """Tensor product; registries are concatenated and must not overlap."""
    if set(a.registry) & set(b.registry):
        raise RegistryError("tensor operands share modes")
    registry = a.registry + b.registry
    amps: dict[tuple[int, ...], complex] = {}
    for occ_a, amp_a in a.amplitudes.items():
        for occ_b, amp_b in b.amplitudes.items():
            amps[occ_a + occ_b] = amp_a * amp_b
    return FockState(registry, amps, a.norm * b.norm)


def inner_product(a, b) -> complex:
    """<a|b> for two polarization states or two Fock states on one registry."""
    if isinstance(a, PolarizationState) and isinstance(b, PolarizationState):
        return a.overlap(b)
    if isinstance(a, FockState) and isinstance(b, FockState):
        return a.overlap(b)
    raise ValidationError("inner_product needs two states of the same kind")
