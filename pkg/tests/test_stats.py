import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photonq.fock import StateVector, coherent_state
from photonq.stats import (
    CountDistribution,
    distribution_of,
    fock_distribution,
    g2_curve,
    g2_zero,
    hom_coincidence,
    hom_dip,
    poisson_distribution,
    poisson_pmf,
    thermal_distribution,
    thermal_pmf,
)


@pytest.mark.parametrize("lam", [0.01, 1.0, 4.0, 30.0])
def test_poisson_pmf_normalized_and_matches_scipy(lam):
    from scipy.stats import poisson

    d = poisson_distribution(lam)
    assert d.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
    assert poisson_pmf(lam, 3) == pytest.approx(poisson.pmf(3, lam), rel=1e-12)


@pytest.mark.parametrize("nbar", [0.1, 1.0, 5.0])
def test_thermal_pmf_normalized(nbar):
    d = thermal_distribution(nbar)
    assert d.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
    assert d.mean == pytest.approx(nbar, rel=1e-9)
    assert thermal_pmf(nbar, 2) == pytest.approx(nbar**2 / (1 + nbar) ** 3)


def test_rejects_bad_distributions():
    with pytest.raises(ValueError):
        CountDistribution(np.array([0.5, 0.4]), "x")
    with pytest.raises(ValueError):
        poisson_pmf(-1, 0)


@settings(max_examples=20, deadline=None)
@given(lam=st.floats(1e-3, 10.0))
def test_poisson_g2_is_one(lam):
    assert g2_zero(poisson_distribution(lam)) == pytest.approx(1.0, abs=1e-9)


def test_g2_reference_values():
    for nbar in (0.5, 1.0, 4.0):
        assert abs(g2_zero(coherent_state(math.sqrt(nbar), 60)) - 1) < 1e-6
        assert abs(g2_zero(thermal_distribution(nbar)) - 2) < 1e-6
    assert g2_zero(fock_distribution(1)) == 0.0
    assert g2_zero(fock_distribution(3)) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        g2_zero(fock_distribution(0))


def test_g2_curve_relaxes_to_one():
    c = g2_curve(0.0, 1.0, [0.0, 50.0])
    assert c[0] == 0.0 and c[1] == pytest.approx(1.0)


def test_distribution_of_single_mode_state():
    d = distribution_of(StateVector.superposition({(0,): 1, (2,): 1}))
    assert d.pmf == {0: pytest.approx(0.5), 1: 0.0, 2: pytest.approx(0.5)}


def test_sampling_within_three_sigma():
    d = thermal_distribution(1.0)
    n = 100_000
    counts = np.bincount(d.sample(np.random.default_rng(4), n), minlength=d.probabilities.size)
    for k in range(6):
        p = d.probabilities[k]
        assert abs(counts[k] / n - p) <= 3 * math.sqrt(p * (1 - p) / n) + 1e-12


def test_hom_dip_values():
    assert abs(hom_coincidence(0.0, 1.0)) < 1e-12
    assert hom_coincidence(10.0, 1.0) == pytest.approx(0.5, abs=1e-3)
    assert hom_coincidence(math.inf, 1.0) == pytest.approx(0.5, abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(tau=st.floats(0, 8), tau_c=st.floats(0.1, 5))
def test_hom_symmetric_and_bounded(tau, tau_c):
    a, b = hom_coincidence(tau, tau_c), hom_coincidence(-tau, tau_c)
    assert a == pytest.approx(b, abs=1e-15)
    assert -1e-15 <= a <= 0.5 + 1e-15


def test_hom_normalized_and_photon_coherent():
    d = hom_dip([0.0, 100.0], 1.0, normalized=True)
    assert d[1] == pytest.approx(1.0)
    with_coherent = hom_coincidence(0.0, 1.0, "photon_coherent", 0.1, 8)
    assert 0 < with_coherent < hom_coincidence(100.0, 1.0, "photon_coherent", 0.1, 8)
    with pytest.raises(ValueError):
        hom_coincidence(0.0, 1.0, "laser")


def test_hom_runtime():
    start = time.perf_counter()
    hom_dip(np.linspace(-3, 3, 61), 1.0)
    assert time.perf_counter() - start < 1.0
