"""Linear-optical elements, circuits, and Reck-style decomposition.

Convention: an element with 2x2 block ``M`` on modes ``(i, j)`` maps creation
operators as ``a†_i -> M[0,0] a†_i + M[1,0] a†_j`` and
``a†_j -> M[0,1] a†_i + M[1,1] a†_j``, so a single photon's amplitude pair is
multiplied by ``M`` as a column vector.

Beam splitter block::

    [[cos θ,  sin θ],
     [sin θ, -cos θ]]

θ = π/4 is 50:50; the minus sign is the π phase on one reflection. This block
is real, symmetric and its own inverse.

Wave plates use Jones matrices ``R(θ) diag(1, exp(-iδ)) R(θ)^T`` with
retardance δ = π (half wave) or π/2 (quarter wave) and fast axis θ measured
from H. With this sign a quarter-wave plate at 45° turns H into
L = (H + iV)/√2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .fock import ModeUnitary, Occupation, StateVector

Rail = tuple[int, int]


def beam_splitter_block(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def retarder_block(axis: float, retardance: float) -> np.ndarray:
    r = _rotation(axis)
    return r @ np.diag([1.0, np.exp(-1j * retardance)]) @ r.T


def half_wave_block(axis: float) -> np.ndarray:
    return retarder_block(axis, math.pi)


def quarter_wave_block(axis: float) -> np.ndarray:
    return retarder_block(axis, math.pi / 2)


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BeamSplitter:
    modes: tuple[int, int]
    theta: float
    kind: str = field(default="BeamSplitter", init=False)

    def block(self) -> np.ndarray:
        return beam_splitter_block(self.theta)

    @property
    def params(self) -> list[float]:
        return [self.theta]


@dataclass(frozen=True)
class PhaseShifter:
    modes: tuple[int]
    phi: float
    kind: str = field(default="PhaseShifter", init=False)

    def block(self) -> np.ndarray:
        return np.array([[np.exp(1j * self.phi)]])

    @property
    def params(self) -> list[float]:
        return [self.phi]


@dataclass(frozen=True)
class HalfWavePlate:
    modes: tuple[int, int]  # (H, V) of one rail
    axis: float
    kind: str = field(default="HalfWavePlate", init=False)

    def block(self) -> np.ndarray:
        return half_wave_block(self.axis)

    @property
    def params(self) -> list[float]:
        return [self.axis]


@dataclass(frozen=True)
class QuarterWavePlate:
    modes: tuple[int, int]
    axis: float
    kind: str = field(default="QuarterWavePlate", init=False)

    def block(self) -> np.ndarray:
        return quarter_wave_block(self.axis)

    @property
    def params(self) -> list[float]:
        return [self.axis]


@dataclass(frozen=True)
class PolarizingBeamSplitter:
    """H passes straight through, V swaps rails.

    ``modes`` is ``(h1, v1, h2, v2)`` for the two rails.
    """

    modes: tuple[int, int, int, int]
    kind: str = field(default="PolarizingBeamSplitter", init=False)

    def block(self) -> np.ndarray:
        b = np.zeros((4, 4), dtype=complex)
        b[0, 0] = b[2, 2] = 1
        b[3, 1] = b[1, 3] = 1
        return b

    @property
    def params(self) -> list[float]:
        return []


Element = Union[BeamSplitter, PhaseShifter, HalfWavePlate, QuarterWavePlate, PolarizingBeamSplitter]

_KINDS = {
    "BeamSplitter": BeamSplitter,
    "PhaseShifter": PhaseShifter,
    "HalfWavePlate": HalfWavePlate,
    "QuarterWavePlate": QuarterWavePlate,
    "PolarizingBeamSplitter": PolarizingBeamSplitter,
}


def element_to_dict(el: Element) -> dict:
    return {"kind": el.kind, "params": [float(p) for p in el.params], "modes": list(el.modes)}


def element_from_dict(data: dict) -> Element:
    try:
        cls = _KINDS[data["kind"]]
    except KeyError:
        raise ValueError(f"unknown element kind {data.get('kind')!r}") from None
    return cls(tuple(int(m) for m in data["modes"]), *[float(p) for p in data["params"]])


# ---------------------------------------------------------------------------
# Fock-space action
# ---------------------------------------------------------------------------

def _binomial_poly(n: int, a: complex, b: complex) -> np.ndarray:
    """Coefficients of (a x + b y)^n indexed by the power of x."""
    return np.array([math.comb(n, k) * a**k * b ** (n - k) for k in range(n + 1)], dtype=complex)


def apply_two_mode(state: StateVector, modes: tuple[int, int], block: np.ndarray) -> StateVector:
    """Exact action of a 2x2 mode transformation on every Fock term.

    Expands the transformed creation-operator monomial binomially; photon
    number is conserved term by term.
    """
    i, j = modes
    if i == j:
        raise ValueError("two-mode element needs distinct modes")
    for k in modes:
        if not 0 <= k < state.mode_count:
            raise IndexError(f"mode {k} out of range for {state.mode_count} modes")
    m00, m01, m10, m11 = block[0, 0], block[0, 1], block[1, 0], block[1, 1]
    amps: dict[Occupation, complex] = {}
    for occ, amp in state.amplitudes.items():
        ni, nj = occ[i], occ[j]
        n = ni + nj
        if n == 0:
            amps[occ] = amps.get(occ, 0j) + amp
            continue
        coeffs = np.convolve(_binomial_poly(ni, m00, m10), _binomial_poly(nj, m01, m11))
        pre = amp / math.sqrt(math.factorial(ni) * math.factorial(nj))
        base = list(occ)
        for p, c in enumerate(coeffs):
            if c == 0:
                continue
            q = n - p
            base[i], base[j] = p, q
            key = tuple(base)
            amps[key] = amps.get(key, 0j) + pre * c * math.sqrt(math.factorial(p) * math.factorial(q))
    return StateVector(state.mode_count, state.cutoff, amps, state.truncation_loss)


def apply_beam_splitter(state: StateVector, modes: tuple[int, int], theta: float) -> StateVector:
    return apply_two_mode(state, modes, beam_splitter_block(theta))


def apply_phase_shifter(state: StateVector, mode: int, phi: float) -> StateVector:
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode {mode} out of range")
    return StateVector(
        state.mode_count,
        state.cutoff,
        {k: v * np.exp(1j * phi * k[mode]) for k, v in state.amplitudes.items()},
        state.truncation_loss,
    )


def _check_rail(state: StateVector, rail: Rail) -> tuple[int, int]:
    if len(rail) != 2:
        raise ValueError(f"rail must be an (H, V) mode pair, got {rail!r}")
    h, v = int(rail[0]), int(rail[1])
    if h == v or not (0 <= h < state.mode_count and 0 <= v < state.mode_count):
        raise ValueError(f"invalid rail {rail!r} for {state.mode_count} modes")
    return h, v


def apply_wave_plate(state: StateVector, rail: Rail, kind: str, axis: float) -> StateVector:
    """Apply a half ("HWP") or quarter ("QWP") wave plate to one polarization rail."""
    h, v = _check_rail(state, rail)
    kind = kind.upper()
    if kind == "HWP":
        block = half_wave_block(axis)
    elif kind == "QWP":
        block = quarter_wave_block(axis)
    else:
        raise ValueError(f"unknown wave plate kind {kind!r}")
    return apply_two_mode(state, (h, v), block)


def apply_jones(state: StateVector, rail: Rail, matrix) -> StateVector:
    """Apply an arbitrary 2x2 polarization unitary to a rail."""
    h, v = _check_rail(state, rail)
    return apply_two_mode(state, (h, v), np.asarray(matrix, dtype=complex))


def apply_pbs(state: StateVector, rails: tuple[Rail, Rail]) -> StateVector:
    """Polarizing beam splitter between two rails: H stays, V changes rail."""
    (h1, v1), (h2, v2) = (_check_rail(state, r) for r in rails)
    if len({h1, v1, h2, v2}) != 4:
        raise ValueError("PBS needs two distinct rails")

    def swap(occ):
        occ = list(occ)
        occ[v1], occ[v2] = occ[v2], occ[v1]
        return occ

    return state.map_basis(swap)


def apply_element(state: StateVector, el: Element) -> StateVector:
    if isinstance(el, PhaseShifter):
        return apply_phase_shifter(state, el.modes[0], el.phi)
    if isinstance(el, PolarizingBeamSplitter):
        h1, v1, h2, v2 = el.modes
        return apply_pbs(state, ((h1, v1), (h2, v2)))
    return apply_two_mode(state, el.modes, el.block())


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    mode_count: int
    elements: tuple[Element, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        for el in self.elements:
            if any(not 0 <= m < self.mode_count for m in el.modes):
                raise ValueError(f"{el} references a mode outside 0..{self.mode_count - 1}")
            if len(set(el.modes)) != len(el.modes):
                raise ValueError(f"{el} repeats a mode")

    def then(self, *elements: Element) -> "Circuit":
        return Circuit(self.mode_count, self.elements + tuple(elements))

    def apply(self, state: StateVector) -> StateVector:
        if state.mode_count != self.mode_count:
            raise ValueError(f"circuit has {self.mode_count} modes, state has {state.mode_count}")
        for el in self.elements:
            state = apply_element(state, el)
        return state

    def to_json(self) -> str:
        return json.dumps([element_to_dict(el) for el in self.elements])

    @classmethod
    def from_json(cls, mode_count: int, text: str) -> "Circuit":
        return cls(mode_count, tuple(element_from_dict(d) for d in json.loads(text)))


def circuit_to_unitary(circuit: Circuit) -> ModeUnitary:
    """Mode unitary of the whole circuit (later elements multiply on the left)."""
    u = np.eye(circuit.mode_count, dtype=complex)
    for el in circuit.elements:
        full = np.eye(circuit.mode_count, dtype=complex)
        idx = np.array(el.modes)
        full[np.ix_(idx, idx)] = el.block()
        u = full @ u
    return ModeUnitary(u)


def reck_decompose(u: ModeUnitary | np.ndarray, tol: float = 1e-13) -> Circuit:
    """Factor a mode unitary into beam splitters and phase shifters.

    Sub-diagonal entries are nulled column by column (bottom row first) with
    ``T = BS(θ) · PS_p(φ)`` on neighbouring rows ``(p, p+1)``, leaving a
    diagonal ``D``. Then ``U = T_1^-1 ... T_n^-1 D`` and the emitted circuit
    applies ``D`` first. Entries that are already zero are skipped, so the
    identity decomposes into zero-angle phase shifters only.
    """
    if not isinstance(u, ModeUnitary):
        u = ModeUnitary(u)
    m = u.dimension
    work = np.array(u.matrix, dtype=complex)
    nulling: list[tuple[int, float, float]] = []
    for col in range(m - 1):
        for row in range(m - 1, col, -1):
            p, q = row - 1, row
            if abs(work[q, col]) < tol:
                work[q, col] = 0
                continue
            phi = float(np.angle(work[q, col]) - np.angle(work[p, col]))
            theta = math.atan2(abs(work[q, col]), abs(work[p, col]))
            t = np.eye(m, dtype=complex)
            t[np.ix_([p, q], [p, q])] = beam_splitter_block(theta) @ np.diag([np.exp(1j * phi), 1])
            work = t @ work
            work[q, col] = 0
            nulling.append((p, theta, phi))

    elements: list[Element] = [PhaseShifter((k,), float(np.angle(work[k, k]))) for k in range(m)]
    for p, theta, phi in reversed(nulling):
        elements.append(BeamSplitter((p, p + 1), theta))
        if phi != 0:
            elements.append(PhaseShifter((p,), -phi))
    return Circuit(m, tuple(elements))


def apply_pauli(state: StateVector, rail: Rail, pauli: str) -> StateVector:
    """Pauli X or Z on a polarization qubit, realized as a half-wave plate.

    X is a half-wave plate at 45°, Z one at 0°. "XZ" means Z first, then X
    (the matrix product X·Z).
    """
    for p in reversed(pauli.upper()):
        if p == "X":
            state = apply_two_mode(state, _check_rail(state, rail), np.array([[0, 1], [1, 0]], dtype=complex))
        elif p == "Z":
            state = apply_wave_plate(state, rail, "HWP", 0.0)
        elif p == "I":
            continue
        else:
            raise ValueError(f"unknown Pauli {p!r}")
    return state
