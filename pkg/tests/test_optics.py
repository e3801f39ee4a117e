import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import haar
from photonq.fock import ModeUnitary, StateVector, apply_unitary, enumerate_basis, lift_unitary_permanent
from photonq.measurement import BELL_STATES, POLARIZATIONS, encode_qubits, polarization_qubit
from photonq.optics import (
    BeamSplitter,
    Circuit,
    HalfWavePlate,
    PhaseShifter,
    PolarizingBeamSplitter,
    QuarterWavePlate,
    apply_beam_splitter,
    apply_element,
    apply_pauli,
    apply_pbs,
    apply_wave_plate,
    beam_splitter_block,
    circuit_to_unitary,
    reck_decompose,
)


def random_circuit(r, m, depth=6):
    elements = []
    for _ in range(depth):
        kind = int(r.integers(5 if m >= 4 else 4))
        if kind == 1 or m == 1:
            elements.append(PhaseShifter((int(r.integers(m)),), float(r.uniform(-math.pi, math.pi))))
            continue
        a, b = (int(x) for x in r.choice(m, 2, replace=False))
        angle = float(r.uniform(-math.pi, math.pi))
        if kind == 0:
            elements.append(BeamSplitter((a, b), angle))
        elif kind == 2:
            elements.append(HalfWavePlate((a, b), angle))
        elif kind == 3:
            elements.append(QuarterWavePlate((a, b), angle))
        else:
            elements.append(PolarizingBeamSplitter(tuple(int(x) for x in r.permutation(m)[:4])))
    return Circuit(m, tuple(elements))


def random_state(r, m, n):
    basis = enumerate_basis(m, n)
    amps = r.normal(size=len(basis)) + 1j * r.normal(size=len(basis))
    return StateVector(m, n, dict(zip(basis, amps))).normalized()


def test_beam_splitter_block_is_self_inverse():
    b = beam_splitter_block(0.37)
    assert np.allclose(b @ b, np.eye(2), atol=1e-15)


def test_hom_amplitude_cancels_exactly():
    out = apply_beam_splitter(StateVector.basis((1, 1)), (0, 1), math.pi / 4)
    assert out.amplitude((1, 1)) == 0
    assert out.probability((2, 0)) == pytest.approx(0.5, abs=1e-15)
    assert out.probability((0, 2)) == pytest.approx(0.5, abs=1e-15)


def test_single_photon_path_entanglement():
    out = apply_beam_splitter(StateVector.basis((1, 0)), (0, 1), math.pi / 4)
    assert out.amplitude((1, 0)) == pytest.approx(math.sqrt(0.5))
    assert abs(out.amplitude((0, 1))) == pytest.approx(math.sqrt(0.5))


def test_wave_plates_on_polarization():
    h = polarization_qubit(1, 0)
    to_v = apply_wave_plate(h, (0, 1), "HWP", math.pi / 4)
    assert to_v.is_close(polarization_qubit(0, 1), up_to_phase=True)
    to_l = apply_wave_plate(h, (0, 1), "QWP", math.pi / 4)
    assert abs(to_l.amplitude((0, 1)) / to_l.amplitude((1, 0)) - 1j) < 1e-12
    with pytest.raises(ValueError):
        apply_wave_plate(h, (0, 1), "XWP", 0.0)


def test_pbs_routes_v_to_the_other_rail():
    s = encode_qubits(np.kron(POLARIZATIONS["V"], POLARIZATIONS["H"]))
    out = apply_pbs(s, ((0, 1), (2, 3)))
    assert out.amplitude((1, 0, 0, 1)) == 0
    assert out.probability((0, 0, 1, 1)) == pytest.approx(1.0)


def test_pauli_strings():
    psi = polarization_qubit(0.6, 0.8j)
    x = apply_pauli(psi, (0, 1), "X")
    assert x.amplitude((1, 0)) == pytest.approx(0.8j) and x.amplitude((0, 1)) == pytest.approx(0.6)
    z = apply_pauli(psi, (0, 1), "Z")
    assert z.amplitude((0, 1)) == pytest.approx(-0.8j)
    # "XZ" applies Z first
    xz = apply_pauli(psi, (0, 1), "XZ")
    assert xz.amplitude((1, 0)) == pytest.approx(-0.8j)
    with pytest.raises(ValueError):
        apply_pauli(psi, (0, 1), "Q")


def test_circuit_json_roundtrip():
    c = random_circuit(np.random.default_rng(3), 4, 10)
    assert Circuit.from_json(4, c.to_json()) == c


def test_circuit_rejects_bad_modes():
    with pytest.raises(ValueError):
        Circuit(2, (BeamSplitter((0, 2), 0.1),))
    with pytest.raises(ValueError):
        Circuit(2, (BeamSplitter((1, 1), 0.1),))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(2, 4), n=st.integers(0, 3))
def test_elements_conserve_photons_and_norm(seed, m, n):
    r = np.random.default_rng(seed)
    state = random_state(r, m, n)
    for el in random_circuit(r, m).elements:
        state = apply_element(state, el)
        assert state.photon_numbers() <= {n}
        assert state.norm_squared() == pytest.approx(1.0, abs=1e-12)


def test_oracle_equivalence_on_100_random_circuits():
    r = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        m = int(r.integers(2, 5))
        n = int(r.integers(1, 4))
        circuit = random_circuit(r, m, int(r.integers(1, 9)))
        state = random_state(r, m, n)
        sequential = circuit.apply(state)
        lifted = apply_unitary(state, circuit_to_unitary(circuit))
        for occ in enumerate_basis(m, n):
            worst = max(worst, abs(sequential.amplitude(occ) - lifted.amplitude(occ)))
    assert worst < 1e-10


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_reck_reconstructs_unitary(m):
    u = haar(m, np.random.default_rng(m))
    c = reck_decompose(u)
    assert np.allclose(circuit_to_unitary(c).matrix, u, atol=1e-10)


def test_reck_identity_has_no_beam_splitters():
    c = reck_decompose(np.eye(3))
    assert all(isinstance(el, PhaseShifter) for el in c.elements)


def test_linearity_obstruction_bell_state_from_product_input():
    """No 4-mode passive circuit maps |H>|H> (one photon per rail) onto Φ+."""
    r = np.random.default_rng(77)
    phi_plus = BELL_STATES["Phi+"]
    target = {(1, 0, 1, 0): phi_plus[0], (0, 1, 0, 1): phi_plus[3]}
    # two photons enter modes 0 and 2; amplitude to (i, j) is perm U[[i, j]][:, [0, 2]]
    count = 10_000
    us = np.stack([haar(4, r) for _ in range(count)])
    a = us[:, 0, 0] * us[:, 2, 2] + us[:, 0, 2] * us[:, 2, 0]
    b = us[:, 1, 0] * us[:, 3, 2] + us[:, 1, 2] * us[:, 3, 0]
    fid = np.abs(np.conj(target[(1, 0, 1, 0)]) * a + np.conj(target[(0, 1, 0, 1)]) * b) ** 2
    assert fid.max() < 1 - 1e-6
    # spot-check the closed form against the permanent lift
    for k in range(5):
        assert abs(lift_unitary_permanent(us[k], (1, 0, 1, 0), (1, 0, 1, 0)) - a[k]) < 1e-12
    # and the grid of product-state circuits: BS and wave plates on each rail
    best = 0.0
    grid = np.linspace(0, math.pi, 9)
    start = StateVector.basis((1, 0, 1, 0))
    ideal = encode_qubits(phi_plus)
    for t1 in grid:
        for t2 in grid:
            for t3 in grid:
                out = apply_beam_splitter(start, (0, 2), t1)
                out = apply_beam_splitter(out, (1, 3), t2)
                out = apply_wave_plate(out, (0, 1), "HWP", t3)
                num = sum(np.conj(ideal.amplitude(k)) * out.amplitude(k) for k in ideal.amplitudes)
                best = max(best, abs(num) ** 2)
    assert best < 1 - 1e-6


def test_mode_unitary_composition():
    r = np.random.default_rng(5)
    u, v = ModeUnitary(haar(3, r)), ModeUnitary(haar(3, r))
    s = random_state(r, 3, 2)
    assert apply_unitary(apply_unitary(s, u), v).is_close(apply_unitary(s, v @ u))
