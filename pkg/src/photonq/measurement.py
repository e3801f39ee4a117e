"""Photon detection, heralding, polarization and Bell measurements.

Measurements are destructive by default: measured modes are removed from the
returned post-measurement state. Pass ``destructive=False`` to keep the
modes, projected onto the observed outcome.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .fock import Occupation, StateVector, remove_modes
from .optics import Rail, apply_beam_splitter
from .seeding import as_generator

SQRT1_2 = 1 / math.sqrt(2)


class EncodingError(ValueError):
    """A rail does not hold exactly one photon where a qubit is expected."""


# ---------------------------------------------------------------------------
# Qubit encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolarizationRegister:
    """Logical qubit ``q`` lives on rail ``rails[q]`` = (H mode, V mode)."""

    rails: tuple[Rail, ...]

    def __post_init__(self):
        object.__setattr__(self, "rails", tuple((int(h), int(v)) for h, v in self.rails))
        modes = [m for r in self.rails for m in r]
        if len(set(modes)) != len(modes):
            raise ValueError(f"rails share modes: {self.rails}")

    @classmethod
    def standard(cls, n_qubits: int) -> "PolarizationRegister":
        return cls(tuple((2 * q, 2 * q + 1) for q in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.rails)

    @property
    def mode_count(self) -> int:
        return 1 + max(m for r in self.rails for m in r)

    def rail(self, qubit: int) -> Rail:
        return self.rails[qubit]


POLARIZATIONS = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "L": np.array([1, 1j]) * SQRT1_2,
    "R": np.array([1, -1j]) * SQRT1_2,
    "D": np.array([1, 1]) * SQRT1_2,
    "A": np.array([1, -1]) * SQRT1_2,
}


def encode_qubits(amplitudes, register: PolarizationRegister | None = None) -> StateVector:
    """Dual-rail Fock state for a qubit amplitude vector (qubit 0 most significant)."""
    amplitudes = np.asarray(amplitudes, dtype=complex).ravel()
    n = int(round(math.log2(amplitudes.size)))
    if 2**n != amplitudes.size:
        raise ValueError("amplitude vector length must be a power of two")
    register = register or PolarizationRegister.standard(n)
    if register.n_qubits != n:
        raise ValueError(f"register holds {register.n_qubits} qubits, amplitudes describe {n}")
    m = register.mode_count
    terms = {}
    for idx, a in enumerate(amplitudes):
        if a == 0:
            continue
        occ = [0] * m
        for q, (h, v) in enumerate(register.rails):
            bit = (idx >> (n - 1 - q)) & 1
            occ[v if bit else h] = 1
        terms[tuple(occ)] = a
    return StateVector(m, n, terms)


def polarization_qubit(alpha: complex, beta: complex) -> StateVector:
    """Single photon alpha|H> + beta|V> on modes (0, 1)."""
    return encode_qubits([alpha, beta])


def decode_qubits(state: StateVector, register: PolarizationRegister | None = None) -> np.ndarray:
    """Qubit amplitude vector of a dual-rail state (inverse of :func:`encode_qubits`)."""
    if register is None:
        if state.mode_count % 2:
            raise ValueError("odd mode count; pass an explicit register")
        register = PolarizationRegister.standard(state.mode_count // 2)
    n = register.n_qubits
    covered = {m for r in register.rails for m in r}
    out = np.zeros(2**n, dtype=complex)
    for occ, a in state.amplitudes.items():
        idx = 0
        for q, (h, v) in enumerate(register.rails):
            if (occ[h], occ[v]) == (1, 0):
                bit = 0
            elif (occ[h], occ[v]) == (0, 1):
                bit = 1
            else:
                raise EncodingError(f"rail {q} holds {occ[h]}H+{occ[v]}V photons in term {occ}")
            idx |= bit << (n - 1 - q)
        if any(occ[m] for m in range(state.mode_count) if m not in covered):
            raise EncodingError(f"photons outside the register in term {occ}")
        out[idx] += a
    return out


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass
class MeasurementRecord:
    outcome: str
    probability: float
    post_state: StateVector | None = None
    pattern: dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"outcome": self.outcome, "probability": float(self.probability)}
        if self.post_state is not None:
            d["post_state"] = self.post_state.to_dict()
        return d


def _record(outcome: str, projected: StateVector, pattern=None) -> MeasurementRecord:
    p = projected.norm_squared()
    post = projected.normalized() if p > 0 else None
    return MeasurementRecord(outcome, p, post, dict(pattern or {}))


# ---------------------------------------------------------------------------
# Photon counting
# ---------------------------------------------------------------------------

def project_pattern(state: StateVector, pattern: Mapping[int, int], destructive: bool = True) -> StateVector:
    """Unnormalized projection onto ``n`` photons in each listed mode."""
    kept = {k: v for k, v in state.amplitudes.items() if all(k[m] == n for m, n in pattern.items())}
    projected = StateVector(state.mode_count, state.cutoff, kept, state.truncation_loss)
    return remove_modes(projected, pattern) if destructive else projected


def detect_pattern(state: StateVector, pattern: Mapping[int, int], destructive: bool = True) -> MeasurementRecord:
    """Joint photon-number detection, e.g. ``{1: 1, 2: 0}`` for a herald."""
    label = ",".join(f"{m}:{n}" for m, n in sorted(pattern.items()))
    return _record(label, project_pattern(state, pattern, destructive), pattern)


def detect_number(state: StateVector, mode: int, n: int, destructive: bool = True) -> MeasurementRecord:
    if n < 0:
        raise ValueError("photon number must be >= 0")
    if not 0 <= mode < state.mode_count:
        raise IndexError(f"mode {mode} out of range")
    return _record(str(n), project_pattern(state, {mode: n}, destructive), {mode: n})


def number_distribution(state: StateVector, mode: int) -> dict[int, float]:
    """Photon-number probabilities in one mode (normalized over the state's norm)."""
    dist: dict[int, float] = {}
    for k, v in state.amplitudes.items():
        dist[k[mode]] = dist.get(k[mode], 0.0) + abs(v) ** 2
    total = sum(dist.values())
    return {n: p / total for n, p in sorted(dist.items())}


def click_probability(state: StateVector, mode: int, efficiency: float) -> float:
    """Probability that a detector of efficiency η sees at least one photon."""
    _check_efficiency(efficiency)
    return sum(p * (1 - (1 - efficiency) ** n) for n, p in number_distribution(state, mode).items())


def lossy_detect(state: StateVector, mode: int, efficiency: float, rng) -> int:
    """Sample the number of registered photons; each photon is seen with probability η."""
    _check_efficiency(efficiency)
    rng = as_generator(rng)
    dist = number_distribution(state, mode)
    ns = np.array(list(dist))
    n = int(rng.choice(ns, p=np.array(list(dist.values()))))
    return int(rng.binomial(n, efficiency))


def _check_efficiency(efficiency: float) -> None:
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError(f"detector efficiency must lie in [0, 1], got {efficiency}")


# ---------------------------------------------------------------------------
# Polarization measurements
# ---------------------------------------------------------------------------

def polarization_basis(basis) -> tuple[tuple[str, np.ndarray], tuple[str, np.ndarray]]:
    """The two (label, Jones vector) outcomes of a named basis or a ±α angle."""
    if isinstance(basis, str):
        key = basis.upper().replace("/", "")
        if key == "HV":
            return ("H", POLARIZATIONS["H"]), ("V", POLARIZATIONS["V"])
        if key == "LR":
            return ("L", POLARIZATIONS["L"]), ("R", POLARIZATIONS["R"])
        if key == "DA":
            return ("D", POLARIZATIONS["D"]), ("A", POLARIZATIONS["A"])
        raise ValueError(f"unknown polarization basis {basis!r}")
    alpha = float(basis)
    plus = np.array([1, np.exp(1j * alpha)]) * SQRT1_2
    minus = np.array([1, -np.exp(1j * alpha)]) * SQRT1_2
    return ("+a", plus), ("-a", minus)


def _check_single_photon(state: StateVector, rails: Sequence[Rail]) -> None:
    for occ in state.amplitudes:
        for h, v in rails:
            if (occ[h], occ[v]) not in ((1, 0), (0, 1)):
                raise EncodingError(
                    f"rail ({h}, {v}) holds {occ[h] + occ[v]} photons in term {occ}; expected exactly 1"
                )


def project_rails(
    state: StateVector, rails: Sequence[Rail], vector, destructive: bool = True
) -> StateVector:
    """Unnormalized projection of several rails onto a joint polarization state.

    ``vector`` has length 2**len(rails), indexed like :func:`encode_qubits`.
    """
    rails = [(int(h), int(v)) for h, v in rails]
    _check_single_photon(state, rails)
    vector = np.asarray(vector, dtype=complex)
    n = len(rails)
    amps: dict[Occupation, complex] = {}
    for occ, a in state.amplitudes.items():
        idx = 0
        for q, (h, v) in enumerate(rails):
            idx |= occ[v] << (n - 1 - q)
        c = np.conj(vector[idx])
        if c == 0:
            continue
        if destructive:
            amps[occ] = amps.get(occ, 0j) + c * a
        else:
            # re-prepare the measured rails in the outcome state
            base = list(occ)
            for h, v in rails:
                base[h] = base[v] = 0
            for j, e in enumerate(vector):
                if e == 0:
                    continue
                new = list(base)
                for q, (h, v) in enumerate(rails):
                    new[v if (j >> (n - 1 - q)) & 1 else h] = 1
                key = tuple(new)
                amps[key] = amps.get(key, 0j) + e * c * a
    projected = StateVector(state.mode_count, state.cutoff, amps, state.truncation_loss)
    if destructive:
        return remove_modes(projected, [m for r in rails for m in r])
    return projected


def measure_polarization(
    state: StateVector, rail: Rail, basis="HV", destructive: bool = True
) -> tuple[MeasurementRecord, MeasurementRecord]:
    """Project one single-photon rail onto a polarization basis.

    ``basis`` is "HV", "LR", "DA" or a float α selecting
    |±α> = (|H> ± e^{iα}|V>)/√2.
    """
    (l1, e1), (l2, e2) = polarization_basis(basis)
    return (
        _record(l1, project_rails(state, [rail], e1, destructive)),
        _record(l2, project_rails(state, [rail], e2, destructive)),
    )


BELL_STATES = {
    "Phi+": np.array([1, 0, 0, 1]) * SQRT1_2,
    "Phi-": np.array([1, 0, 0, -1]) * SQRT1_2,
    "Psi+": np.array([0, 1, 1, 0]) * SQRT1_2,
    "Psi-": np.array([0, 1, -1, 0]) * SQRT1_2,
}


def bell_projectors() -> dict[str, np.ndarray]:
    return {k: np.outer(v, v.conj()) for k, v in BELL_STATES.items()}


def _linear_optical_label(counts: tuple[int, int, int, int]) -> str:
    # counts = (h1, v1, h2, v2) after mixing the rails on a 50:50 splitter
    if counts in ((1, 1, 0, 0), (0, 0, 1, 1)):
        return "Psi+"
    if counts in ((1, 0, 0, 1), (0, 1, 1, 0)):
        return "Psi-"
    return "fail"


def bell_measure(
    state: StateVector,
    rail1: Rail,
    rail2: Rail,
    mode: str = "ideal",
    destructive: bool = True,
) -> list[MeasurementRecord]:
    """Bell-basis measurement of two single-photon rails.

    ``mode="ideal"`` projects onto Φ±, Ψ±. ``mode="linear-optical"`` mixes the
    rails on a 50:50 splitter (H with H, V with V) and counts photons in all
    four outputs; only Ψ+ and Ψ- are identified, every other pattern is a
    "fail". One record is returned per detection pattern in that case, and
    records with zero probability are omitted.
    """
    rails = [tuple(rail1), tuple(rail2)]
    _check_single_photon(state, rails)
    if mode == "ideal":
        return [
            _record(label, project_rails(state, rails, vec, destructive))
            for label, vec in BELL_STATES.items()
        ]
    if mode not in ("linear-optical", "linear_optical"):
        raise ValueError(f"unknown Bell measurement mode {mode!r}")
    (h1, v1), (h2, v2) = rails
    mixed = apply_beam_splitter(state, (h1, h2), math.pi / 4)
    mixed = apply_beam_splitter(mixed, (v1, v2), math.pi / 4)
    modes = (h1, v1, h2, v2)
    patterns = sorted({tuple(occ[m] for m in modes) for occ in mixed.amplitudes}, reverse=True)
    records = []
    for counts in patterns:
        pattern = dict(zip(modes, counts))
        projected = project_pattern(mixed, pattern, destructive)
        rec = _record(_linear_optical_label(counts), projected, pattern)
        if rec.probability > 0:
            records.append(rec)
    return records


def sample_outcome(records: Sequence[MeasurementRecord], rng) -> MeasurementRecord:
    """Draw one record according to its probability."""
    rng = as_generator(rng)
    p = np.array([r.probability for r in records])
    return records[int(rng.choice(len(records), p=p / p.sum()))]
