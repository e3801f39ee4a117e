"""Photon-number statistics, second-order correlation and the HOM dip.

Partial distinguishability in the HOM model is handled by splitting the
second input into a component that shares the first photon's temporal mode
(weight ``overlap``) and an orthogonal one; the overlap of two Gaussian
packets delayed by τ is ``exp(-τ² / (2 τ_c²))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import StateVector, coherent_state, tensor
from .optics import apply_beam_splitter
from .seeding import as_generator

TAIL_TOL = 1e-17


def poisson_pmf(lam: float, n: int) -> float:
    """λ^n e^{-λ} / n!, evaluated in log space."""
    if lam < 0:
        raise ValueError(f"Poisson mean must be >= 0, got {lam}")
    if n < 0:
        return 0.0
    if lam == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(lam) - lam - math.lgamma(n + 1))


def thermal_pmf(nbar: float, n: int) -> float:
    """Single-mode Bose-Einstein (geometric) distribution n̄^n / (1+n̄)^(n+1)."""
    if nbar < 0:
        raise ValueError(f"thermal mean must be >= 0, got {nbar}")
    if n < 0:
        return 0.0
    if nbar == 0:
        return 1.0 if n == 0 else 0.0
    return math.exp(n * math.log(nbar) - (n + 1) * math.log1p(nbar))


@dataclass(frozen=True)
class CountDistribution:
    """Photon-count probabilities on the support 0..len(probabilities)-1."""

    probabilities: np.ndarray
    label: str

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @property
    def pmf(self) -> dict[int, float]:
        return {n: float(p) for n, p in enumerate(self.probabilities)}

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.probabilities.size)

    @property
    def mean(self) -> float:
        return float(self.support @ self.probabilities)

    def factorial_moment(self, order: int) -> float:
        n = self.support.astype(float)
        falling = np.ones_like(n)
        for k in range(order):
            falling *= n - k
        return float(falling @ self.probabilities)

    def sample(self, rng, size: int) -> np.ndarray:
        rng = as_generator(rng)
        return rng.choice(self.support, size=size, p=self.probabilities / self.probabilities.sum())


def _support_limit(tail_ratio: float, floor: int) -> int:
    if tail_ratio <= 0:
        return floor
    return max(floor, int(math.ceil(math.log(TAIL_TOL) / math.log(tail_ratio))) + 1)


def poisson_distribution(lam: float) -> CountDistribution:
    nmax = int(math.ceil(lam + 12 * math.sqrt(lam) + 40))
    return CountDistribution(np.array([poisson_pmf(lam, n) for n in range(nmax + 1)]), "poisson")


def thermal_distribution(nbar: float) -> CountDistribution:
    nmax = _support_limit(nbar / (1 + nbar) if nbar > 0 else 0.0, 1)
    return CountDistribution(np.array([thermal_pmf(nbar, n) for n in range(nmax + 1)]), "thermal")


def fock_distribution(n: int) -> CountDistribution:
    p = np.zeros(n + 1)
    p[n] = 1.0
    return CountDistribution(p, "fock")


def distribution_of(state: StateVector) -> CountDistribution:
    """Photon-count distribution of a single-mode state."""
    if state.mode_count != 1:
        raise ValueError("expected a single-mode state")
    top = max(k[0] for k in state.amplitudes)
    p = np.zeros(top + 1)
    for (n,), a in state.amplitudes.items():
        p[n] += abs(a) ** 2
    return CountDistribution(p / p.sum(), "state")


def g2_zero(source: CountDistribution | StateVector) -> float:
    """<n(n-1)> / <n>^2."""
    dist = distribution_of(source) if isinstance(source, StateVector) else source
    mean = dist.mean
    if mean <= 0:
        raise ValueError("g2 is undefined for a zero-mean source")
    return dist.factorial_moment(2) / mean**2


def g2_curve(g2_at_zero: float, tau_c: float, taus) -> np.ndarray:
    """1 + (g2(0) - 1) exp(-2|τ|/τ_c)."""
    if tau_c <= 0:
        raise ValueError("coherence time must be positive")
    taus = np.asarray(taus, dtype=float)
    return 1 + (g2_at_zero - 1) * np.exp(-2 * np.abs(taus) / tau_c)


# ---------------------------------------------------------------------------
# Hong-Ou-Mandel
# ---------------------------------------------------------------------------

def gaussian_overlap(tau: float, tau_c: float) -> float:
    if tau_c <= 0:
        raise ValueError("coherence time must be positive")
    return math.exp(-(tau**2) / (2 * tau_c**2))


# mode layout: 0 = port 1 / packet A, 1 = port 2 / packet A,
#              2 = port 1 / packet B, 3 = port 2 / packet B
_PORT1 = (0, 2)
_PORT2 = (1, 3)


def hom_input_state(tau: float, tau_c: float, kind: str = "single_photon_pair",
                    mean_photons: float = 0.1, cutoff: int = 8) -> StateVector:
    """Four-mode input: a photon in port 1, a photon or coherent pulse in port 2."""
    o = gaussian_overlap(tau, tau_c)
    rest = math.sqrt(max(0.0, 1 - o * o))
    if kind == "single_photon_pair":
        return StateVector(4, 2, {(1, 1, 0, 0): o, (1, 0, 0, 1): rest})
    if kind == "photon_coherent":
        alpha = math.sqrt(mean_photons)
        state = tensor(
            StateVector.basis((1,)),
            coherent_state(o * alpha, cutoff - 1),
            StateVector.vacuum(1),
            coherent_state(rest * alpha, cutoff - 1),
        ).with_cutoff(cutoff)
        return StateVector(4, cutoff, state.normalized().amplitudes, state.truncation_loss)
    raise ValueError(f"unknown HOM input kind {kind!r}")


def hom_coincidence(tau: float, tau_c: float, kind: str = "single_photon_pair",
                    mean_photons: float = 0.1, cutoff: int = 8) -> float:
    """Probability that both output ports of a 50:50 splitter register light."""
    state = hom_input_state(tau, tau_c, kind, mean_photons, cutoff)
    out = apply_beam_splitter(state, (0, 1), math.pi / 4)
    out = apply_beam_splitter(out, (2, 3), math.pi / 4)
    total = out.norm_squared()
    p = sum(
        abs(a) ** 2
        for k, a in out.amplitudes.items()
        if sum(k[m] for m in _PORT1) > 0 and sum(k[m] for m in _PORT2) > 0
    )
    return p / total


def hom_dip(taus, tau_c: float, kind: str = "single_photon_pair", mean_photons: float = 0.1,
            cutoff: int = 8, normalized: bool = False) -> np.ndarray:
    """Coincidence probability over a delay grid.

    With ``normalized=True`` values are divided by the fully distinguishable
    baseline (τ → ∞), which is 1/2 for two single photons.
    """
    values = np.array([hom_coincidence(t, tau_c, kind, mean_photons, cutoff) for t in np.asarray(taus, float)])
    if normalized:
        values = values / hom_coincidence(math.inf, tau_c, kind, mean_photons, cutoff)
    return values
