"""State algebra: polarization qubits, Bloch mapping, Fock layer."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fock_oracle import scatter_state
from qbench.errors import (
    ImpossibleOutcomeError,
    NormalizationError,
    RegistryError,
    ValidationError,
)
from qbench.optics import haar_random_unitary, jones_hwp
from qbench.quantum import (
    STATE_A,
    STATE_D,
    STATE_H,
    STATE_L,
    STATE_V,
    DensityMatrix2,
    FockState,
    ModeIndex,
    ModeUnitary,
    OccupationPattern,
    PolarizationState,
    apply_jones,
    apply_mode_unitary,
    bloch_from_state,
    fidelity,
    inner_product,
    post_select,
    state_from_bloch,
    tensor,
)


def random_state(rng) -> PolarizationState:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    v /= np.linalg.norm(v)
    return PolarizationState(v[0], v[1])


def random_mode_unitary(rng, registry) -> ModeUnitary:
    n = len(registry)
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return ModeUnitary(q @ np.diag(np.diag(r) / np.abs(np.diag(r))), registry, registry)


# ---------------------------------------------------------------------------
# polarization states and Bloch vectors


def test_normalization_enforced():
    with pytest.raises(NormalizationError):
        PolarizationState(1.0, 1.0)
    psi = PolarizationState.from_amplitudes(1.0, 1.0)
    assert abs(psi.alpha - 1 / math.sqrt(2)) < 1e-15


def test_bloch_basis_poles():
    assert bloch_from_state(STATE_H).as_array() == pytest.approx([0, 0, 1])
    assert bloch_from_state(STATE_V).as_array() == pytest.approx([0, 0, -1])


def test_bloch_diagonal():
    assert bloch_from_state(STATE_D).as_array() == pytest.approx([1, 0, 0])
    assert bloch_from_state(STATE_A).as_array() == pytest.approx([-1, 0, 0])


def test_bloch_minus_i_anchor():
    # (|H> - i|V>)/sqrt2 sits on the negative y axis, exactly
    b = bloch_from_state(STATE_L)
    assert (b.x, b.y, b.z) == (0.0, -1.0, 0.0)


def test_bloch_unit_norm_bulk():
    rng = np.random.default_rng(7)
    for _ in range(2000):
        b = bloch_from_state(random_state(rng))
        assert abs(b.norm() - 1.0) < 1e-12


def test_bloch_round_trip():
    rng = np.random.default_rng(8)
    for _ in range(500):
        psi = random_state(rng)
        back = state_from_bloch(bloch_from_state(psi))
        assert psi.equals_up_to_phase(back, tol=1e-10)


def test_apply_jones_identity_and_swap():
    assert apply_jones(STATE_D, np.eye(2)).equals_up_to_phase(STATE_D)
    swapped = apply_jones(STATE_H, jones_hwp(math.pi / 4))
    assert swapped.equals_up_to_phase(STATE_V)


def test_apply_jones_hadamard_point():
    out = apply_jones(STATE_H, jones_hwp(math.pi / 8))
    assert out.equals_up_to_phase(STATE_D)


def test_apply_jones_rejects_non_unitary():
    with pytest.raises(ValidationError):
        apply_jones(STATE_H, np.array([[1, 0], [0, 2]]))


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**9))
def test_jones_norm_preservation(seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng)
    out = apply_jones(psi, haar_random_unitary(rng))
    norm = abs(out.alpha) ** 2 + abs(out.beta) ** 2
    assert abs(norm - 1.0) < 1e-12


def test_jones_norm_preservation_bulk():
    rng = np.random.default_rng(77)
    for _ in range(10_000):
        psi = random_state(rng)
        out = apply_jones(psi, haar_random_unitary(rng))
        assert abs(abs(out.alpha) ** 2 + abs(out.beta) ** 2 - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# density matrices and fidelity


def test_density_matrix_invariants():
    rho = DensityMatrix2.from_state(STATE_D)
    assert fidelity(rho, STATE_D) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        DensityMatrix2(np.array([[0.7, 0.0], [0.0, 0.7]]))


def test_fidelity_anchors():
    assert fidelity(DensityMatrix2.from_state(STATE_H), STATE_H) == pytest.approx(1.0)
    mixed = DensityMatrix2(np.eye(2) / 2)
    rng = np.random.default_rng(5)
    for _ in range(20):
        assert fidelity(mixed, random_state(rng)) == pytest.approx(0.5)


def test_inner_product_anchor():
    assert inner_product(STATE_D, STATE_H) == pytest.approx(1 / math.sqrt(2))


# ---------------------------------------------------------------------------
# Fock layer


def two_mode_registry():
    return (ModeIndex("a", "H"), ModeIndex("b", "H"))


def test_fock_photon_number_fixed():
    reg = two_mode_registry()
    with pytest.raises(ValidationError):
        FockState(reg, {(1, 0): 1 / math.sqrt(2), (1, 1): 1 / math.sqrt(2)})


def test_fock_caps():
    reg = two_mode_registry()
    with pytest.raises(ValidationError):
        FockState(reg, {(7, 0): 1.0})


def test_mode_unitary_identity_and_permutation():
    reg = two_mode_registry()
    st_in = FockState(reg, {(1, 0): 1.0})
    assert apply_mode_unitary(st_in, ModeUnitary.identity(reg)).amplitudes == st_in.amplitudes
    perm = ModeUnitary(np.array([[0, 1], [1, 0]], dtype=complex), reg, reg)
    out = apply_mode_unitary(st_in, perm)
    assert out.amplitudes == {(0, 1): 1.0 + 0j}


def test_hong_ou_mandel_bunching():
    # expanding (a1+ i a2)(i a1 + a2)/2 kills the coincidence term
    reg = two_mode_registry()
    coupler = ModeUnitary(np.array([[1, 1j], [1j, 1]]) / math.sqrt(2), reg, reg)
    out = apply_mode_unitary(FockState(reg, {(1, 1): 1.0}), coupler)
    assert (1, 1) not in out.amplitudes
    assert abs(out.amplitudes[(2, 0)]) ** 2 == pytest.approx(0.5)
    assert abs(out.amplitudes[(0, 2)]) ** 2 == pytest.approx(0.5)


def test_mode_unitary_against_permanent_oracle():
    rng = np.random.default_rng(21)
    reg = tuple(ModeIndex(p, "H") for p in "abc")
    for _ in range(25):
        u = random_mode_unitary(rng, reg)
        raw = {
            (2, 0, 0): 0.5,
            (1, 1, 0): 0.5j,
            (0, 1, 1): -0.5,
            (0, 0, 2): 0.5,
        }
        state = FockState(reg, raw)
        engine = apply_mode_unitary(state, u)
        expected = scatter_state(np.asarray(u.matrix), raw)
        for occ in set(engine.amplitudes) | set(expected):
            assert engine.amplitudes.get(occ, 0.0) == pytest.approx(
                expected.get(occ, 0.0), abs=1e-10
            )


def test_fock_homomorphism():
    rng = np.random.default_rng(9)
    reg = tuple(ModeIndex(p, "H") for p in "abc")
    state = FockState.from_terms(reg, {(2, 0, 0): 0.3, (1, 1, 0): -0.4j, (0, 1, 1): 0.5})
    for _ in range(50):
        u = random_mode_unitary(rng, reg)
        v = random_mode_unitary(rng, reg)
        lhs = apply_mode_unitary(apply_mode_unitary(state, u), v)
        rhs = apply_mode_unitary(
            state, ModeUnitary(v.matrix @ u.matrix, reg, reg)
        )
        for occ in set(lhs.amplitudes) | set(rhs.amplitudes):
            assert lhs.amplitudes.get(occ, 0) == pytest.approx(
                rhs.amplitudes.get(occ, 0), abs=1e-10
            )


def test_mode_unitary_registry_mismatch():
    reg = two_mode_registry()
    other = (ModeIndex("x", "H"), ModeIndex("y", "H"))
    state = FockState(reg, {(1, 0): 1.0})
    with pytest.raises(RegistryError):
        apply_mode_unitary(state, ModeUnitary.identity(other))


# ---------------------------------------------------------------------------
# post-selection


def bell_phi_plus():
    reg = (
        ModeIndex("p1", "H"),
        ModeIndex("p1", "V"),
        ModeIndex("p2", "H"),
        ModeIndex("p2", "V"),
    )
    amp = 1 / math.sqrt(2)
    return FockState(reg, {(1, 0, 1, 0): amp, (0, 1, 0, 1): amp})


def test_post_select_trivial_pattern():
    state = bell_phi_plus()
    prob, cond = post_select(state, OccupationPattern())
    assert prob == pytest.approx(1.0)
    assert set(cond.amplitudes) == set(state.amplitudes)
    for occ, amp in state.amplitudes.items():
        assert cond.amplitudes[occ] == pytest.approx(amp)


def test_post_select_impossible():
    reg = (ModeIndex("p", "H"), ModeIndex("p", "V"))
    state = FockState(reg, {(1, 0): 1.0})
    with pytest.raises(ImpossibleOutcomeError):
        post_select(state, OccupationPattern.exactly({ModeIndex("p", "V"): 1}))


def test_post_select_bell_born_rule():
    state = bell_phi_plus()
    pattern = OccupationPattern.exactly(
        {ModeIndex("p1", "H"): 1, ModeIndex("p1", "V"): 0}
    )
    prob, cond = post_select(state, pattern)
    assert prob == pytest.approx(0.5)
    assert set(cond.amplitudes) == {(1, 0, 1, 0)}
    assert abs(cond.amplitudes[(1, 0, 1, 0)]) == pytest.approx(1.0)
    assert cond.norm == pytest.approx(math.sqrt(0.5))


def test_post_select_grouped_constraint():
    state = bell_phi_plus()
    pattern = OccupationPattern.total_in(
        (ModeIndex("p1", "H"), ModeIndex("p1", "V")), 1
    )
    prob, cond = post_select(state, pattern)
    assert prob == pytest.approx(1.0)
    assert len(cond.amplitudes) == 2


def test_post_selection_partition_sums_to_one():
    rng = np.random.default_rng(11)
    reg = tuple(ModeIndex(p, "H") for p in "abc")
    for _ in range(20):
        raw = {}
        for occ in ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)):
            raw[occ] = rng.normal() + 1j * rng.normal()
        state = FockState.from_terms(reg, raw)
        total = 0.0
        for k in range(3):
            pattern = OccupationPattern.exactly({ModeIndex("a", "H"): k})
            try:
                prob, _ = post_select(state, pattern)
            except ImpossibleOutcomeError:
                prob = 0.0
            total += prob
        assert total == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# tensor products


def test_tensor_concatenates_registries():
    a = FockState((ModeIndex("a", "H"), ModeIndex("a", "V")), {(1, 0): 1.0})
    b = FockState((ModeIndex("b", "H"), ModeIndex("b", "V")), {(0, 1): 1.0})
    joint = tensor(a, b)
    assert joint.amplitudes == {(1, 0, 0, 1): 1.0 + 0j}


def test_tensor_registry_collision():
    a = FockState((ModeIndex("a", "H"),), {(1,): 1.0})
    with pytest.raises(RegistryError):
        tensor(a, a)
