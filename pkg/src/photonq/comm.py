"""Communication protocols: no-cloning, BB84 key distribution, teleportation
and a slotted repeater-chain rate model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import StateVector, fidelity, tensor
from .measurement import (
    BELL_STATES,
    POLARIZATIONS,
    EncodingError,
    bell_measure,
    decode_qubits,
    encode_qubits,
    measure_polarization,
    polarization_qubit,
    sample_outcome,
)
from .optics import apply_pauli
from .seeding import as_generator

# ---------------------------------------------------------------------------
# No-cloning
# ---------------------------------------------------------------------------


def _as_polarization(state) -> StateVector:
    if isinstance(state, StateVector):
        decode_qubits(state)  # validates single-rail encoding
        if state.mode_count != 2:
            raise EncodingError("expected a single polarization rail")
        return state
    vec = np.asarray(state, dtype=complex)
    if vec.shape != (2,):
        raise ValueError("polarization state must be a 2-vector or a one-rail StateVector")
    return polarization_qubit(*vec)


def clone_attempt(state) -> tuple[StateVector, float]:
    """Run the H/V copier on ``state`` and a blank H photon.

    The copier is the linear map |H>|H> -> |H>|H>, |V>|H> -> |V>|V>. Returns
    the two-rail output and its fidelity with the ideal copy |ψ>|ψ>.
    """
    psi = _as_polarization(state).normalized()
    joint = tensor(psi, StateVector.basis((1, 0)))

    def copier(occ):
        h0, v0, h1, v1 = occ
        if (h1, v1) != (1, 0):
            raise EncodingError("blank photon must be H")
        return (h0, v0, 0, 1) if v0 else occ

    out = joint.map_basis(copier)
    ideal = tensor(psi, psi)
    return out, fidelity(ideal, out)


# ---------------------------------------------------------------------------
# Channel and BB84
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelModel:
    """Fibre of length L with attenuation length ℓ (both in km)."""

    length_km: float = 0.0
    attenuation_km: float = 1.0

    def __post_init__(self):
        if self.length_km < 0:
            raise ValueError("channel length must be >= 0")
        if self.attenuation_km <= 0:
            raise ValueError("attenuation length must be > 0")

    @property
    def transmission(self) -> float:
        return math.exp(-self.length_km / self.attenuation_km)


# prepared states in index order 2*basis + bit; basis 0 = H/V, 1 = L/R
BB84_STATES = ("H", "V", "L", "R")
BB84_BASES = ("HV", "LR")


def _bit0_table() -> np.ndarray:
    """P(result bit 0) for each prepared state (rows) and measurement basis (cols)."""
    table = np.zeros((4, 2))
    for s, name in enumerate(BB84_STATES):
        photon = polarization_qubit(*POLARIZATIONS[name])
        for b, basis in enumerate(BB84_BASES):
            table[s, b] = measure_polarization(photon, (0, 1), basis)[0].probability
    return table


@dataclass
class KeyStats:
    pulses_sent: int
    delivered: int
    sifted_bits: int
    sift_rate: float
    sampled_bits: int
    sampled_qber: float
    sifted_qber: float
    final_key: np.ndarray = field(repr=False)

    def to_dict(self, include_key: bool = False) -> dict:
        d = {
            "pulses_sent": self.pulses_sent,
            "delivered": self.delivered,
            "sifted_bits": self.sifted_bits,
            "sift_rate": self.sift_rate,
            "sampled_bits": self.sampled_bits,
            "sampled_qber": None if math.isnan(self.sampled_qber) else self.sampled_qber,
            "sifted_qber": None if math.isnan(self.sifted_qber) else self.sifted_qber,
            "final_key_length": int(self.final_key.size),
        }
        if include_key:
            d["final_key"] = "".join(map(str, self.final_key.tolist()))
        return d


def bb84_run(
    n_pulses: int,
    eve: str = "none",
    channel: ChannelModel | None = None,
    sample_fraction: float = 0.1,
    seed=0,
) -> KeyStats:
    """Simulate BB84 with single photons, an optional intercept-resend attacker and loss.

    Eve (if present) measures every pulse in a uniformly random basis and
    resends her result. Lost photons are erasures. After sifting a random
    ``sample_fraction`` of the sifted bits is disclosed to estimate the QBER
    and removed from the key.
    """
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    if not 0 <= sample_fraction < 1:
        raise ValueError("sample_fraction must lie in [0, 1)")
    eve = eve.replace("-", "_")
    if eve not in ("none", "intercept_resend"):
        raise ValueError(f"unknown eavesdropper {eve!r}")
    channel = channel or ChannelModel()
    rng = as_generator(seed)
    table = _bit0_table()

    a_basis = rng.integers(0, 2, n_pulses)
    a_bit = rng.integers(0, 2, n_pulses)
    arriving = 2 * a_basis + a_bit
    if eve == "intercept_resend":
        e_basis = rng.integers(0, 2, n_pulses)
        e_bit = (rng.random(n_pulses) >= table[arriving, e_basis]).astype(int)
        arriving = 2 * e_basis + e_bit
    delivered = rng.random(n_pulses) < channel.transmission
    b_basis = rng.integers(0, 2, n_pulses)
    b_bit = (rng.random(n_pulses) >= table[arriving, b_basis]).astype(int)

    sifted = np.flatnonzero(delivered & (a_basis == b_basis))
    errors = a_bit[sifted] != b_bit[sifted]
    n_sample = int(round(sample_fraction * sifted.size))
    chosen = np.zeros(sifted.size, dtype=bool)
    chosen[rng.permutation(sifted.size)[:n_sample]] = True
    return KeyStats(
        pulses_sent=n_pulses,
        delivered=int(delivered.sum()),
        sifted_bits=int(sifted.size),
        sift_rate=sifted.size / n_pulses,
        sampled_bits=n_sample,
        sampled_qber=float(errors[chosen].mean()) if n_sample else math.nan,
        sifted_qber=float(errors.mean()) if sifted.size else math.nan,
        final_key=a_bit[sifted][~chosen].astype(np.uint8),
    )


# ---------------------------------------------------------------------------
# Teleportation
# ---------------------------------------------------------------------------

CORRECTIONS = {"Phi+": "I", "Phi-": "Z", "Psi+": "X", "Psi-": "XZ"}
# resource (I ⊗ P)|Φ+> for each Bell label; P^-1 as a Pauli string
_FRAME_INVERSE = {"Phi+": "I", "Phi-": "Z", "Psi+": "X", "Psi-": "ZX"}


@dataclass
class TeleportOutcome:
    bell_label: str
    correction: str | None
    probability: float
    pre_correction_state: StateVector | None
    corrected_state: StateVector | None
    resource: str = "Phi+"

    @property
    def success(self) -> bool:
        return self.corrected_state is not None

    def to_dict(self) -> dict:
        return {
            "bell_label": self.bell_label,
            "correction": self.correction,
            "probability": self.probability,
            "resource": self.resource,
            "corrected_state": None if self.corrected_state is None else self.corrected_state.to_dict(),
        }


def _teleport_records(state, resource: str, bell_mode: str):
    if resource not in BELL_STATES:
        raise ValueError(f"resource must be one of {sorted(BELL_STATES)}")
    psi = _as_polarization(state).normalized()
    joint = tensor(psi, encode_qubits(BELL_STATES[resource]))
    return bell_measure(joint, (0, 1), (2, 3), mode=bell_mode)


def _finish(record, records, resource: str) -> TeleportOutcome:
    label = record.outcome
    # probability of the Bell label, summed over detection patterns
    p_label = sum(r.probability for r in records if r.outcome == label)
    if label == "fail":
        return TeleportOutcome("fail", None, p_label, None, None, resource)
    pre = record.post_state
    correction = CORRECTIONS[label]
    paulis = correction.replace("I", "") + _FRAME_INVERSE[resource].replace("I", "")
    corrected = apply_pauli(pre, (0, 1), paulis) if paulis else pre
    return TeleportOutcome(label, correction, p_label, pre, corrected, resource)


def teleport(state, resource: str = "Phi+", bell_mode: str = "ideal", seed=0) -> TeleportOutcome:
    """Teleport a polarization qubit through a Bell pair.

    Alice's input is rail 0, the resource occupies rails 1 and 2, and Bob
    holds rail 2. After the Bell measurement Bob's photon sits on modes
    (0, 1) of the returned states. A non-Φ+ resource gets an extra Pauli
    frame correction on top of the table correction.
    """
    records = _teleport_records(state, resource, bell_mode)
    return _finish(sample_outcome(records, seed), records, resource)


def teleport_histogram(state, shots: int, resource: str = "Phi+", bell_mode: str = "ideal", seed=0) -> dict[str, int]:
    """Outcome counts over ``shots`` runs; probabilities are computed once."""
    records = _teleport_records(state, resource, bell_mode)
    probs: dict[str, float] = {}
    for r in records:
        probs[r.outcome] = probs.get(r.outcome, 0.0) + r.probability
    labels = sorted(probs)
    p = np.array([probs[k] for k in labels])
    counts = as_generator(seed).multinomial(shots, p / p.sum())
    return {k: int(c) for k, c in zip(labels, counts)}


# ---------------------------------------------------------------------------
# Repeater chain
# ---------------------------------------------------------------------------


@dataclass
class RepeaterRates:
    direct_rate: float
    repeater_rate: float
    expected_rate: float
    successes: int
    slots: int
    segments: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def expected_repeater_rate(total_length: float, segments: int, attenuation_length: float,
                           swap_success: float = 1.0) -> float:
    """Renewal-reward rate p_s^(k-1) / E[max of k geometric waits].

    E[max] follows from inclusion-exclusion over the k segments.
    """
    _check_repeater(total_length, segments, attenuation_length, swap_success)
    t = math.exp(-total_length / (segments * attenuation_length))
    q = 1.0 - t
    if q == 0.0:
        e_max = 1.0
    else:
        e_max = sum((-1) ** (j + 1) * math.comb(segments, j) / (1 - q**j) for j in range(1, segments + 1))
    return swap_success ** (segments - 1) / e_max


def _check_repeater(total_length, segments, attenuation_length, swap_success):
    if segments < 1:
        raise ValueError("segments must be >= 1")
    if total_length < 0 or attenuation_length <= 0:
        raise ValueError("need L >= 0 and attenuation length > 0")
    if not 0 < swap_success <= 1:
        raise ValueError("swap success must lie in (0, 1]")


def repeater_rate(
    total_length: float,
    segments: int,
    attenuation_length: float,
    swap_success: float = 1.0,
    slots: int = 100_000,
    seed=0,
) -> RepeaterRates:
    """Monte Carlo entanglement-distribution rate over a slotted repeater chain.

    Each of the k segments retries once per slot until a photon survives
    exp(-L/(kℓ)); memories are perfect, so a cycle lasts as long as the
    slowest segment. Then k-1 swaps each succeed with p_s. Any swap failure
    discards the whole cycle and every segment restarts. The rate is the
    number of end-to-end pairs per slot. Segment waits are drawn by inverse
    transform from one uniform per segment, so with a fixed seed the rate is
    non-increasing in L.
    """
    _check_repeater(total_length, segments, attenuation_length, swap_success)
    if slots < 1:
        raise ValueError("slots must be >= 1")
    rng = as_generator(seed)
    t = math.exp(-total_length / (segments * attenuation_length))
    q = 1.0 - t
    u = 1.0 - rng.random((slots, segments))
    swaps = rng.random((slots, segments - 1))
    if q == 0.0:
        waits = np.ones_like(u)
    else:
        waits = np.maximum(1.0, np.ceil(np.log(u) / math.log(q)))
    cycle = waits.max(axis=1)
    ok = (swaps < swap_success).all(axis=1)
    done = np.cumsum(cycle) <= slots
    successes = int((ok & done).sum())
    return RepeaterRates(
        direct_rate=math.exp(-total_length / attenuation_length),
        repeater_rate=successes / slots,
        expected_rate=expected_repeater_rate(total_length, segments, attenuation_length, swap_success),
        successes=successes,
        slots=slots,
        segments=segments,
    )
