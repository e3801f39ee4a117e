"""Truncated Fock-space simulation of linear-optical quantum information protocols."""

from .fock import (
    ModeUnitary,
    StateVector,
    apply_annihilation,
    apply_creation,
    apply_unitary,
    coherent_state,
    enumerate_basis,
    inner_product,
    lift_unitary_permanent,
    tensor,
)
from .optics import (
    BeamSplitter,
    Circuit,
    HalfWavePlate,
    PhaseShifter,
    PolarizingBeamSplitter,
    QuarterWavePlate,
    apply_beam_splitter,
    apply_pbs,
    apply_phase_shifter,
    apply_wave_plate,
    circuit_to_unitary,
    reck_decompose,
)
from .permanent import permanent

__version__ = "0.1.0"

__all__ = [
    "BeamSplitter",
    "Circuit",
    "HalfWavePlate",
    "ModeUnitary",
    "PhaseShifter",
    "PolarizingBeamSplitter",
    "QuarterWavePlate",
    "StateVector",
    "apply_annihilation",
    "apply_beam_splitter",
    "apply_creation",
    "apply_pbs",
    "apply_phase_shifter",
    "apply_unitary",
    "apply_wave_plate",
    "circuit_to_unitary",
    "coherent_state",
    "enumerate_basis",
    "inner_product",
    "lift_unitary_permanent",
    "permanent",
    "reck_decompose",
    "tensor",
]
