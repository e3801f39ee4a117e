"""Linear-optical computing: the heralded NS and CZ gates, fusion gates,
graph (cluster) states and single-qubit measurement-based computation."""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .fock import StateVector, lift_unitary_permanent, tensor
from .measurement import (
    MeasurementRecord,
    PolarizationRegister,
    decode_qubits,
    detect_pattern,
    encode_qubits,
    measure_polarization,
)
from .optics import (
    BeamSplitter,
    Circuit,
    apply_beam_splitter,
    apply_element,
    apply_pauli,
    apply_pbs,
    apply_wave_plate,
    circuit_to_unitary,
)
from .seeding import as_generator

SQRT1_2 = 1 / math.sqrt(2)


class ConvergenceError(RuntimeError):
    """The NS coefficient solve did not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# NS gate
# ---------------------------------------------------------------------------
# Modes: 0 = signal, 1 = ancilla prepared with one photon, 2 = empty ancilla.
# Splitters act on (1, 2), then (0, 1), then (1, 2). Success is heralded by
# one photon in mode 1 and none in mode 2.

NS_HERALD = {1: 1, 2: 0}


def ns_elements(angles, signal: int = 0, anc1: int = 1, anc2: int = 2) -> tuple[BeamSplitter, ...]:
    t1, t2, t3 = angles
    return (
        BeamSplitter((anc1, anc2), float(t1)),
        BeamSplitter((signal, anc1), float(t2)),
        BeamSplitter((anc1, anc2), float(t3)),
    )


def ns_circuit(angles) -> Circuit:
    return Circuit(3, ns_elements(angles))


def ns_coefficients(angles) -> np.ndarray:
    """Heralded amplitudes c_k = <k,1,0|U|k,1,0> for k = 0, 1, 2."""
    u = circuit_to_unitary(ns_circuit(angles))
    return np.array([lift_unitary_permanent(u, (k, 1, 0), (k, 1, 0)) for k in range(3)])


def _embed_bs(i: int, j: int, theta: float) -> np.ndarray:
    u = np.eye(3)
    c, s = math.cos(theta), math.sin(theta)
    u[i, i], u[i, j], u[j, i], u[j, j] = c, s, s, -c
    return u


def _ns_coefficients_fast(x) -> np.ndarray:
    """Real closed form of :func:`ns_coefficients`, used inside the optimizer."""
    u = _embed_bs(1, 2, x[2]) @ _embed_bs(0, 1, x[1]) @ _embed_bs(1, 2, x[0])
    c0 = u[1, 1]
    c1 = u[0, 0] * u[1, 1] + u[0, 1] * u[1, 0]
    # per of rows/cols (0, 0, 1) divided by sqrt(2! 2!)
    c2 = (2 * u[0, 0] ** 2 * u[1, 1] + 4 * u[0, 0] * u[0, 1] * u[1, 0]) / 2
    return np.array([c0, c1, c2])


@dataclass(frozen=True)
class NSSolution:
    angles: tuple[float, float, float]
    coefficient: float
    success_probability: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "angles": list(self.angles),
            "coefficient": self.coefficient,
            "success_probability": self.success_probability,
            "residual": self.residual,
        }


def _wrap(x: float) -> float:
    return float((x + math.pi) % (2 * math.pi) - math.pi)


@functools.lru_cache(maxsize=None)
def solve_ns_coefficients(tol: float = 1e-12) -> NSSolution:
    """Find splitter angles giving c·(α0, α1, -α2) with c² as large as possible.

    SLSQP maximizes c0² subject to c1 = c0 and c2 = -c0 from a fixed grid of
    starting points; the best feasible point is then polished on the two
    constraints with a least-squares solve. ``residual`` is the largest
    constraint violation; :class:`ConvergenceError` is raised above ``tol``.
    """

    coeffs = _ns_coefficients_fast

    constraints = [
        {"type": "eq", "fun": lambda x: coeffs(x)[1] - coeffs(x)[0]},
        {"type": "eq", "fun": lambda x: coeffs(x)[2] + coeffs(x)[0]},
    ]
    grid = np.linspace(-math.pi / 2, math.pi / 2, 3, endpoint=False) + math.pi / 8
    best = None
    for x0 in np.array(np.meshgrid(grid, grid, grid, indexing="ij")).reshape(3, -1).T:
        res = minimize(lambda x: -coeffs(x)[0] ** 2, x0, method="SLSQP", constraints=constraints,
                       options={"ftol": 1e-15, "maxiter": 500})
        c = coeffs(res.x)
        if max(abs(c[1] - c[0]), abs(c[2] + c[0])) > 1e-6:
            continue
        if best is None or c[0] ** 2 > best[1]:
            best = (res.x, c[0] ** 2)
    if best is None:
        raise ConvergenceError("no feasible NS configuration found")

    polish = least_squares(lambda x: [(c := coeffs(x))[1] - c[0], c[2] + c[0]], best[0],
                           xtol=1e-15, ftol=1e-15, gtol=1e-15)
    x = np.array([_wrap(v) for v in polish.x])
    c = ns_coefficients(x)
    residual = float(max(abs(c[1] - c[0]), abs(c[2] + c[0]), np.abs(c.imag).max()))
    if residual > tol:
        raise ConvergenceError(f"NS constraints violated by {residual:.3e}")
    c0 = float(c[0].real)
    return NSSolution(tuple(float(v) for v in x), c0, c0 * c0, residual)


@dataclass
class HeraldedGateResult:
    success: bool
    success_probability: float
    output_state: StateVector | None = None
    herald: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "success_probability": self.success_probability,
            "output_state": None if self.output_state is None else self.output_state.to_dict(),
        }


def _single_mode_input(state) -> StateVector:
    if isinstance(state, StateVector):
        if state.mode_count != 1:
            raise ValueError("NS gate acts on a single-mode state")
        amps = state.amplitudes
    else:
        amps = {(k,): complex(a) for k, a in enumerate(np.asarray(state, dtype=complex).ravel()) if a != 0}
    if any(k[0] > 2 for k in amps):
        raise ValueError("NS gate input must be supported on |0>, |1>, |2>")
    return StateVector(1, 2, amps).normalized()


def _herald(state: StateVector, herald: dict[int, int], seed) -> HeraldedGateResult:
    rec = detect_pattern(state, herald)
    if seed is None:
        return HeraldedGateResult(True, rec.probability, rec.post_state, dict(herald))
    fired = bool(as_generator(seed).random() < rec.probability)
    return HeraldedGateResult(fired, rec.probability, rec.post_state if fired else None, dict(herald))


def ns_gate(state, seed=None, solution: NSSolution | None = None) -> HeraldedGateResult:
    """Heralded nonlinear sign shift α0|0>+α1|1>+α2|2> -> α0|0>+α1|1>-α2|2>.

    Without a seed the success branch is returned. With a seed the herald is
    sampled and ``output_state`` is present only when it fires.
    """
    solution = solution or solve_ns_coefficients()
    joint = tensor(_single_mode_input(state), StateVector.basis((1, 0))).with_cutoff(3)
    out = ns_circuit(solution.angles).apply(joint)
    return _herald(out, NS_HERALD, seed)


# ---------------------------------------------------------------------------
# CZ gate
# ---------------------------------------------------------------------------
# Modes: (0, 1) qubit 1 H/V, (2, 3) qubit 2 H/V, (4, 5) and (6, 7) NS ancillas.

CZ_HERALD = {4: 1, 5: 0, 6: 1, 7: 0}


def _cz_input(q1, q2) -> StateVector:
    if q2 is None:
        joint = np.asarray(q1, dtype=complex).ravel()
        if joint.size != 4:
            raise ValueError("joint two-qubit input needs 4 amplitudes")
    else:
        joint = np.kron(np.asarray(q1, dtype=complex), np.asarray(q2, dtype=complex))
    joint = joint / np.linalg.norm(joint)
    return tensor(encode_qubits(joint), StateVector.basis((1, 0, 1, 0)))


def cz_first_stage(q1, q2=None) -> StateVector:
    """State after the first 50:50 splitter on the two V modes."""
    return apply_beam_splitter(_cz_input(q1, q2), (1, 3), math.pi / 4)


def cz_gate(q1, q2=None, seed=None, solution: NSSolution | None = None) -> HeraldedGateResult:
    """Post-selected CZ on two polarization qubits.

    The V modes meet on a 50:50 splitter, each output passes an NS gate and
    they recombine on a second 50:50 splitter. Pass two 2-vectors, or one
    4-vector as ``q1`` for an entangled input.
    """
    solution = solution or solve_ns_coefficients()
    state = cz_first_stage(q1, q2).with_cutoff(6)
    for el in ns_elements(solution.angles, 1, 4, 5) + ns_elements(solution.angles, 3, 6, 7):
        state = apply_element(state, el)
    state = apply_beam_splitter(state, (1, 3), math.pi / 4)
    return _herald(state, CZ_HERALD, seed)


CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)


# ---------------------------------------------------------------------------
# Fusion gates
# ---------------------------------------------------------------------------


def _qubit_tensor(state: StateVector) -> np.ndarray:
    vec = decode_qubits(state)
    n = int(round(math.log2(vec.size)))
    return vec.reshape((2,) * n)


def _record(label: str, tensor_out: np.ndarray) -> MeasurementRecord:
    flat = tensor_out.reshape(-1)
    p = float(np.vdot(flat, flat).real)
    if p <= 0 or flat.size == 0:
        return MeasurementRecord(label, p, None)
    if tensor_out.ndim == 0:
        return MeasurementRecord(label, p, None)
    return MeasurementRecord(label, p, encode_qubits(flat / math.sqrt(p)))


def _check_pair(n: int, i: int, j: int) -> None:
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid photon pair ({i}, {j}) for {n} photons")


def _pair_operator(psi: np.ndarray, i: int, j: int, bra: np.ndarray) -> np.ndarray:
    """Contract qubits i, j with a two-qubit bra (index [b_i, b_j]); both removed."""
    return np.tensordot(psi, bra.conj(), axes=([i, j], [0, 1]))


TYPE1_OUTCOMES = ("+", "-", "HV", "VH")


def _type1_tensor(psi: np.ndarray, i: int, j: int, outcome: str) -> np.ndarray:
    if outcome in ("+", "-"):
        sign = 1 if outcome == "+" else -1
        # keep qubit i; photon j is absorbed
        diag = np.diagonal(psi, axis1=i, axis2=j)  # last axis is the shared bit
        diag = diag * np.array([1, sign]) * SQRT1_2
        return np.moveaxis(diag, -1, min(i, j))
    bra = np.zeros((2, 2))
    bra[(0, 1) if outcome == "HV" else (1, 0)] = 1
    return _pair_operator(psi, i, j, bra)


def fusion_type1(state: StateVector, photon_i: int, photon_j: int, outcome: str = "+") -> MeasurementRecord:
    """Type-I fusion branch on photons i and j of a dual-rail register.

    Success outcomes "+" and "-" apply (|H><HH| ± |V><VV|)/√2 and keep one
    photon in the fused slot (the smaller of the two indices); "HV" and "VH"
    are the failure outcomes that remove both photons. The four branch
    probabilities sum to one.
    """
    psi = _qubit_tensor(state)
    _check_pair(psi.ndim, photon_i, photon_j)
    if outcome not in TYPE1_OUTCOMES:
        raise ValueError(f"type-I outcome must be one of {TYPE1_OUTCOMES}")
    return _record(outcome, _type1_tensor(psi, photon_i, photon_j, outcome))


TYPE2_BRAS = {
    "same": np.array([[0, 1], [1, 0]]) * SQRT1_2,   # detectors saw HH or VV
    "diff": np.array([[1, 0], [0, 1]]) * SQRT1_2,   # detectors saw HV or VH
    "fail-Phi-": np.array([[1, 0], [0, -1]]) * SQRT1_2,
    "fail-Psi-": np.array([[0, 1], [-1, 0]]) * SQRT1_2,
}


def fusion_type2(state: StateVector, photon_i: int, photon_j: int, outcome: str = "same") -> MeasurementRecord:
    """Type-II fusion branch: both photons are measured and removed.

    "same" applies (<HV| + <VH|)/√2, "diff" applies (<HH| + <VV|)/√2; the
    two failure classes project onto Φ- and Ψ-, completing the Bell basis.
    """
    psi = _qubit_tensor(state)
    _check_pair(psi.ndim, photon_i, photon_j)
    if outcome not in TYPE2_BRAS:
        raise ValueError(f"type-II outcome must be one of {tuple(TYPE2_BRAS)}")
    return _record(outcome, _pair_operator(psi, photon_i, photon_j, TYPE2_BRAS[outcome]))


def fusion_outcomes(state: StateVector, photon_i: int, photon_j: int, kind: str = "I") -> list[MeasurementRecord]:
    if kind.upper() in ("I", "1", "TYPE1"):
        return [fusion_type1(state, photon_i, photon_j, o) for o in TYPE1_OUTCOMES]
    if kind.upper() in ("II", "2", "TYPE2"):
        return [fusion_type2(state, photon_i, photon_j, o) for o in TYPE2_BRAS]
    raise ValueError(f"unknown fusion kind {kind!r}")


def fusion_type1_interferometer(state: StateVector, photon_i: int, photon_j: int) -> list[MeasurementRecord]:
    """Type-I fusion built from a PBS and a half-wave plate at 22.5°.

    The rails of photons i and j meet on a PBS; rail j then passes the wave
    plate and a polarization-resolving detector. Exactly one photon on rail
    j heralds success: H maps to "+", V to "-". The records hold the
    unnormalized-probability branches with rail j removed.
    """
    reg = PolarizationRegister.standard(state.mode_count // 2)
    _check_pair(reg.n_qubits, photon_i, photon_j)
    ri, rj = reg.rail(photon_i), reg.rail(photon_j)
    out = apply_pbs(state, (ri, rj))
    out = apply_wave_plate(out, rj, "HWP", math.pi / 8)
    records = []
    for label, pattern in (("+", {rj[0]: 1, rj[1]: 0}), ("-", {rj[0]: 0, rj[1]: 1})):
        rec = detect_pattern(out, pattern)
        records.append(MeasurementRecord(label, rec.probability, rec.post_state, pattern))
    return records


# ---------------------------------------------------------------------------
# Graph states
# ---------------------------------------------------------------------------

MAX_CLUSTER_VERTICES = 8
PLUS = np.array([1, 1], dtype=complex) * SQRT1_2


@dataclass(frozen=True)
class GraphState:
    vertices: int
    edges: tuple[tuple[int, int], ...]
    realized: StateVector

    def neighbours(self, v: int) -> list[int]:
        return sorted({b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v})

    def to_dict(self) -> dict:
        return {"vertices": self.vertices, "edges": [list(e) for e in self.edges]}


def parse_graph(text: str) -> tuple[int, list[tuple[int, int]]]:
    """Read the JSON form {"vertices": n, "edges": [[i, j], ...]}."""
    data = json.loads(text)
    return int(data["vertices"]), [tuple(map(int, e)) for e in data["edges"]]


def _normalize_edges(vertices: int, edges) -> tuple[tuple[int, int], ...]:
    out = set()
    for e in edges:
        a, b = (int(x) for x in e)
        if a == b or not (0 <= a < vertices and 0 <= b < vertices):
            raise ValueError(f"invalid edge {e!r} for {vertices} vertices")
        out.add((min(a, b), max(a, b)))
    return tuple(sorted(out))


def build_cluster(vertices: int, edges=(), inputs: dict[int, np.ndarray] | None = None,
                  method: str = "ideal") -> GraphState:
    """Apply CZ along every edge to |+> on each vertex.

    ``inputs`` replaces |+> on chosen vertices (used to feed an arbitrary
    qubit into a measurement pattern). ``method="ideal"`` applies the CZ
    phases directly; ``method="heralded"`` runs the photonic CZ gate for
    each edge and keeps its success branch.
    """
    if not 1 <= vertices <= MAX_CLUSTER_VERTICES:
        raise ValueError(f"cluster size must be 1..{MAX_CLUSTER_VERTICES}, got {vertices}")
    edges = _normalize_edges(vertices, edges)
    vec = np.ones(1, dtype=complex)
    for v in range(vertices):
        q = PLUS if inputs is None or v not in inputs else np.asarray(inputs[v], dtype=complex)
        vec = np.kron(vec, q / np.linalg.norm(q))
    if method == "ideal":
        bits = (np.arange(2**vertices)[:, None] >> (vertices - 1 - np.arange(vertices))) & 1
        for a, b in edges:
            vec = vec * np.where(bits[:, a] & bits[:, b], -1, 1)
        state = encode_qubits(vec)
    elif method == "heralded":
        state = encode_qubits(vec)
        for a, b in edges:
            state = _heralded_cz_on(state, a, b)
    else:
        raise ValueError(f"unknown cluster method {method!r}")
    return GraphState(vertices, edges, state)


def _heralded_cz_on(state: StateVector, a: int, b: int) -> StateVector:
    """Photonic CZ success branch between rails a and b of a larger register."""
    sol = solve_ns_coefficients()
    m = state.mode_count
    va, vb = 2 * a + 1, 2 * b + 1
    anc = StateVector.basis((1, 0, 1, 0))
    s = tensor(state, anc).with_cutoff(state.cutoff + 2)
    s = apply_beam_splitter(s, (va, vb), math.pi / 4)
    for el in ns_elements(sol.angles, va, m, m + 1) + ns_elements(sol.angles, vb, m + 2, m + 3):
        s = apply_element(s, el)
    s = apply_beam_splitter(s, (va, vb), math.pi / 4)
    rec = detect_pattern(s, {m: 1, m + 1: 0, m + 2: 1, m + 3: 0})
    return StateVector(m, state.cutoff, rec.post_state.amplitudes)


def stabilizer_expectation(graph: GraphState, v: int) -> float:
    """<X_v Π_{u∈N(v)} Z_u>, with the Paulis applied as wave plates."""
    state = graph.realized
    out = apply_pauli(state, (2 * v, 2 * v + 1), "X")
    for u in graph.neighbours(v):
        out = apply_pauli(out, (2 * u, 2 * u + 1), "Z")
    total = sum(np.conj(state.amplitude(k)) * a for k, a in out.amplitudes.items())
    return float(np.real(total))


# ---------------------------------------------------------------------------
# Measurement-based single-qubit gates
# ---------------------------------------------------------------------------


def u_z(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def u_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * SQRT1_2


def target_unitary(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """H U_Z(γ) U_X(β) U_Z(α)."""
    return HADAMARD @ u_z(gamma) @ u_x(beta) @ u_z(alpha)


@dataclass
class MBQCRun:
    outcomes: tuple[int, int, int]
    measured_angles: tuple[float, float, float]
    byproduct: str
    output: np.ndarray  # corrected qubit amplitudes of the last photon

    def to_dict(self) -> dict:
        return {
            "outcomes": list(self.outcomes),
            "measured_angles": list(self.measured_angles),
            "byproduct": self.byproduct,
            "output": [[float(z.real), float(z.imag)] for z in self.output],
        }


def _measure_first(state: StateVector, angle: float, rng) -> tuple[int, StateVector]:
    plus, minus = measure_polarization(state, (0, 1), angle)
    s = int(rng.random() >= plus.probability)
    return s, (plus, minus)[s].post_state


def mbqc_single_qubit(alpha: float, beta: float, gamma: float, seed=0, input_state=None) -> MBQCRun:
    """Run a 4-photon line cluster as the gate H U_Z(γ) U_X(β) U_Z(α).

    The input qubit (|+> by default) sits on photon 0. Photons 0, 1, 2 are
    measured in the |±θ> basis in order; the angles for photons 1 and 2 flip
    sign after a "-" result on the preceding photon. The outcomes leave the
    Pauli byproduct X^s3 Z^s2 X^s1 on photon 3, which is undone with wave
    plates at the end.
    """
    rng = as_generator(seed)
    inputs = None if input_state is None else {0: input_state}
    state = build_cluster(4, [(0, 1), (1, 2), (2, 3)], inputs=inputs).realized
    # the |+θ> outcome on a cluster photon applies H U_Z(-θ), hence the minus signs
    theta1 = -alpha
    s1, state = _measure_first(state, theta1, rng)
    theta2 = -((-1) ** s1) * beta
    s2, state = _measure_first(state, theta2, rng)
    theta3 = -((-1) ** s2) * gamma
    s3, state = _measure_first(state, theta3, rng)
    byproduct = "X" * s3 + "Z" * s2 + "X" * s1
    # undo B = X^s3 Z^s2 X^s1 by applying B^-1 = X^s1 Z^s2 X^s3 (X^s3 first)
    correction = "X" * s1 + "Z" * s2 + "X" * s3
    if correction:
        state = apply_pauli(state, (0, 1), correction)
    return MBQCRun((s1, s2, s3), (theta1, theta2, theta3), byproduct or "I", decode_qubits(state))


def mbqc_effective_unitary(alpha: float, beta: float, gamma: float, seed=0) -> np.ndarray:
    """Reconstruct the implemented 2x2 unitary (global phase fixed by U[0,0] real ≥ 0).

    Runs the pattern on |0>, |1> and |+>; the |+> run fixes the relative
    phase of the two columns. Each run uses its own derived generator, so
    the byproducts differ between runs.
    """
    rng = as_generator(seed)
    seeds = rng.integers(0, 2**63, size=3)
    col0 = mbqc_single_qubit(alpha, beta, gamma, int(seeds[0]), np.array([1, 0])).output
    col1 = mbqc_single_qubit(alpha, beta, gamma, int(seeds[1]), np.array([0, 1])).output
    w = mbqc_single_qubit(alpha, beta, gamma, int(seeds[2]), PLUS).output
    coef = np.linalg.lstsq(np.column_stack([col0, col1]), w, rcond=None)[0]
    u = np.column_stack([col0 * coef[0], col1 * coef[1]])
    u = u / math.sqrt(abs(np.linalg.det(u)))
    return _fix_phase(u)


def _fix_phase(u: np.ndarray) -> np.ndarray:
    k = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    return u * np.exp(-1j * np.angle(u[k]))


def unitary_distance(u: np.ndarray, v: np.ndarray) -> float:
    """Max-entry distance between two unitaries after the best global phase."""
    overlap = np.trace(np.conj(u).T @ v)
    phase = np.exp(1j * np.angle(overlap)) if abs(overlap) > 0 else 1.0
    return float(np.abs(u * phase - v).max())
