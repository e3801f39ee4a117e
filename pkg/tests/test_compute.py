import json
import math

import numpy as np
import pytest

from conftest import random_qubit
from photonq.compute import (
    CZ_MATRIX,
    MAX_CLUSTER_VERTICES,
    TYPE1_OUTCOMES,
    TYPE2_BRAS,
    _ns_coefficients_fast,
    build_cluster,
    cz_first_stage,
    cz_gate,
    fusion_outcomes,
    fusion_type1,
    fusion_type1_interferometer,
    fusion_type2,
    mbqc_effective_unitary,
    mbqc_single_qubit,
    ns_coefficients,
    ns_gate,
    parse_graph,
    solve_ns_coefficients,
    stabilizer_expectation,
    target_unitary,
    unitary_distance,
)
from photonq.measurement import BELL_STATES, decode_qubits, encode_qubits

SQ = 1 / math.sqrt(2)


def two_bell_pairs():
    return np.kron(BELL_STATES["Phi+"], BELL_STATES["Phi+"])


def kraus_apply(psi, kraus, i, j, keep_one):
    """Dense oracle: build the full operator on the register and multiply."""
    n = int(round(math.log2(psi.size)))
    out_n = n - 1 if keep_one else n - 2
    op = np.zeros((2**out_n, 2**n), dtype=complex)
    for col in range(2**n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        for out_bits, coeff in kraus(bits[i], bits[j]):
            rest = [b for q, b in enumerate(bits) if q not in (i, j)]
            if keep_one:
                rest.insert(min(i, j), out_bits)
            row = int("".join(map(str, rest)) or "0", 2)
            op[row, col] += coeff
    return op @ psi


# NS gate

def test_ns_solution():
    sol = solve_ns_coefficients()
    assert sol.success_probability == pytest.approx(0.25, abs=1e-9)
    c = ns_coefficients(sol.angles)
    assert np.allclose(c, [0.5, 0.5, -0.5], atol=1e-9)
    assert np.allclose(_ns_coefficients_fast(sol.angles), c, atol=1e-12)


@pytest.mark.parametrize("amps", [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
def test_ns_basis_inputs(amps):
    res = ns_gate(amps)
    assert res.success_probability == pytest.approx(0.25, abs=1e-9)
    expected = np.array(amps) * np.array([1, 1, -1])
    out = np.array([res.output_state.amplitude((k,)) for k in range(3)])
    assert np.allclose(out, expected, atol=1e-9)


def test_ns_random_superpositions_against_permanent_oracle():
    r = np.random.default_rng(8)
    sol = solve_ns_coefficients()
    c = ns_coefficients(sol.angles)
    for _ in range(50):
        v = r.normal(size=3) + 1j * r.normal(size=3)
        v /= np.linalg.norm(v)
        res = ns_gate(v)
        assert res.success_probability == pytest.approx(0.25, abs=1e-9)
        out = np.array([res.output_state.amplitude((k,)) for k in range(3)])
        assert np.allclose(out, v * c / 0.5, atol=1e-9)
        assert np.allclose(out, v * [1, 1, -1], atol=1e-9)


def test_ns_seeded_herald():
    fired = [ns_gate([1, 1, 1], seed=k).success for k in range(400)]
    assert 0.15 < np.mean(fired) < 0.35
    failed = next(ns_gate([1, 1, 1], seed=k) for k in range(400) if not fired[k])
    assert failed.output_state is None
    with pytest.raises(ValueError):
        ns_gate([0, 0, 0, 1])


# CZ gate

def test_cz_truth_table():
    for idx in range(4):
        vec = np.zeros(4)
        vec[idx] = 1
        res = cz_gate(vec)
        assert res.success_probability == pytest.approx(1 / 16, abs=1e-9)
        assert np.allclose(decode_qubits(res.output_state), CZ_MATRIX @ vec, atol=1e-9)


def test_cz_on_superposition_and_self_inverse():
    r = np.random.default_rng(1)
    v = random_qubit(r, 2)
    out = decode_qubits(cz_gate(v).output_state)
    assert np.allclose(out, CZ_MATRIX @ v, atol=1e-9)
    twice = decode_qubits(cz_gate(out).output_state)
    assert np.allclose(twice, v, atol=1e-12)
    plus = np.array([SQ, SQ])
    product = decode_qubits(cz_gate(plus, plus).output_state)
    assert np.allclose(product, CZ_MATRIX @ np.kron(plus, plus), atol=1e-9)


def test_hom_inside_cz_bunches_vv():
    stage = cz_first_stage([0, 1], [0, 1])
    assert all(not (k[1] == 1 and k[3] == 1) for k in stage.amplitudes)
    assert stage.probability((0, 0, 0, 2, 1, 0, 1, 0)) == pytest.approx(0.5)


# fusion

def test_type1_fusion_yields_ghz():
    psi = two_bell_pairs()
    state = encode_qubits(psi)
    ghz = np.zeros(8)
    ghz[0] = ghz[7] = SQ

    def k_plus(a, b):
        return [(a, SQ)] if a == b else []

    oracle = kraus_apply(psi, k_plus, 1, 2, keep_one=True)
    rec = fusion_type1(state, 1, 2, "+")
    assert rec.probability == pytest.approx(0.25, abs=1e-12)
    assert np.allclose(decode_qubits(rec.post_state) * math.sqrt(rec.probability), oracle, atol=1e-12)
    assert abs(abs(np.vdot(ghz, decode_qubits(rec.post_state))) - 1) < 1e-12
    minus = decode_qubits(fusion_type1(state, 1, 2, "-").post_state)
    assert np.allclose(minus, [SQ, 0, 0, 0, 0, 0, 0, -SQ], atol=1e-12)


def test_type2_fusion_yields_bell_pair():
    state = encode_qubits(two_bell_pairs())
    same = fusion_type2(state, 1, 2, "same")
    diff = fusion_type2(state, 1, 2, "diff")
    assert same.probability == pytest.approx(0.25) and diff.probability == pytest.approx(0.25)
    for rec in (same, diff):
        out = decode_qubits(rec.post_state)
        assert max(abs(np.vdot(b, out)) for b in BELL_STATES.values()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["I", "II"])
def test_fusion_completeness(kind):
    r = np.random.default_rng(3)
    state = encode_qubits(random_qubit(r, 4))
    total = sum(rec.probability for rec in fusion_outcomes(state, 0, 3, kind))
    assert total == pytest.approx(1.0, abs=1e-10)
    assert len(fusion_outcomes(state, 0, 3, kind)) == len(TYPE1_OUTCOMES if kind == "I" else TYPE2_BRAS)


def test_fusion_interferometer_matches_operator_form():
    state = encode_qubits(two_bell_pairs())
    for rec in fusion_type1_interferometer(state, 1, 2):
        ref = fusion_type1(state, 1, 2, rec.outcome)
        assert rec.probability == pytest.approx(ref.probability, abs=1e-12)
        got = decode_qubits(rec.post_state)
        assert abs(abs(np.vdot(decode_qubits(ref.post_state), got)) - 1) < 1e-12


def test_fusion_validation():
    state = encode_qubits(two_bell_pairs())
    with pytest.raises(ValueError):
        fusion_type1(state, 1, 1)
    with pytest.raises(ValueError):
        fusion_type1(state, 0, 1, "HH")
    with pytest.raises(ValueError):
        fusion_outcomes(state, 0, 1, "III")


# cluster states

@pytest.mark.parametrize(
    "n,edges",
    [(4, [(0, 1), (1, 2), (2, 3)]), (4, [(0, 1), (1, 2), (2, 3), (3, 0)]), (5, [(0, 1), (0, 2), (0, 3), (0, 4)])],
)
def test_cluster_stabilizers(n, edges):
    g = build_cluster(n, edges)
    for v in range(n):
        assert stabilizer_expectation(g, v) == pytest.approx(1.0, abs=1e-12)


def test_heralded_cluster_equals_ideal():
    ideal = build_cluster(3, [(0, 1), (1, 2)])
    heralded = build_cluster(3, [(0, 1), (1, 2)], method="heralded")
    assert np.allclose(decode_qubits(ideal.realized), decode_qubits(heralded.realized), atol=1e-9)


def test_cluster_validation_and_parse():
    n, edges = parse_graph(json.dumps({"vertices": 3, "edges": [[0, 1], [2, 1]]}))
    assert build_cluster(n, edges).edges == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        build_cluster(MAX_CLUSTER_VERTICES + 1)
    with pytest.raises(ValueError):
        build_cluster(2, [(0, 0)])
    with pytest.raises(ValueError):
        build_cluster(2, [(0, 1)], method="magic")


# MBQC

def test_mbqc_zero_angles_give_hadamard():
    h = np.array([[1, 1], [1, -1]]) * SQ
    assert unitary_distance(mbqc_effective_unitary(0, 0, 0, seed=1), h) < 1e-10


def test_mbqc_random_angles():
    r = np.random.default_rng(21)
    worst = 0.0
    seen = set()
    for k in range(100):
        a, b, c = r.uniform(-math.pi, math.pi, 3)
        worst = max(worst, unitary_distance(mbqc_effective_unitary(a, b, c, seed=k), target_unitary(a, b, c)))
        seen.add(mbqc_single_qubit(a, b, c, seed=k).outcomes)
    assert worst < 1e-10
    assert len(seen) > 4


def test_mbqc_run_reports_byproduct():
    run = mbqc_single_qubit(0.3, 0.2, 0.1, seed=3)
    assert set(run.byproduct) <= {"X", "Z", "I"}
    assert abs(np.linalg.norm(run.output) - 1) < 1e-12
    assert json.dumps(run.to_dict())


def test_unitary_distance_ignores_global_phase():
    u = target_unitary(0.4, 0.5, 0.6)
    assert unitary_distance(u, np.exp(0.9j) * u) < 1e-15
    assert unitary_distance(u, np.eye(2)) > 0.1
