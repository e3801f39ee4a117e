"""Phase and length estimation at and beyond the shot-noise limit.

Quadratures are X = (a + a†)/√2 and Y = -i(a - a†)/√2, so [X, Y] = i and
the vacuum has (ΔX)² = (ΔY)² = 1/2. The two-outcome observable for the
|0> + |N> and NOON probes is A = |N><0| + |0><N| (eigenvalues ±1 on the
{|0>, |N>} subspace), whose mean after a phase φ is cos(Nφ).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .fock import StateVector, coherent_state, inner_product, tensor
from .optics import BeamSplitter, Circuit, PhaseShifter, apply_phase_shifter, circuit_to_unitary
from .seeding import as_generator, run_generator
from .stats import distribution_of

SINGULAR_COS = 0.99


# ---------------------------------------------------------------------------
# Probe states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeState:
    """A phase probe; the phase is imprinted on mode ``phase_mode``."""

    kind: str
    parameter: float
    realized: StateVector
    phase_mode: int = 0
    truncation_residual: float = 0.0

    def with_phase(self, phi: float) -> StateVector:
        return apply_phase_shifter(self.realized, self.phase_mode, phi)

    @property
    def mean_photons(self) -> float:
        return float(sum(sum(k) * abs(a) ** 2 for k, a in self.realized.amplitudes.items()))


def zero_n_probe(n: int) -> ProbeState:
    """(|0> + |N>)/√2 in one mode."""
    if n < 1:
        raise ValueError("N must be >= 1")
    s = math.sqrt(0.5)
    return ProbeState("zero_n", n, StateVector(1, n, {(0,): s, (n,): s}))


def noon_state(n: int, cutoff: int | None = None) -> ProbeState:
    """(|N,0> + |0,N>)/√2; the phase acts on mode 1."""
    if n < 1:
        raise ValueError("N must be >= 1")
    cutoff = 2 * n if cutoff is None else cutoff
    if 2 * n > cutoff:
        raise ValueError(f"NOON state with N={n} needs cutoff >= {2 * n}, got {cutoff}")
    s = math.sqrt(0.5)
    return ProbeState("noon", n, StateVector(2, cutoff, {(n, 0): s, (0, n): s}), phase_mode=1)


def _default_cutoff(nbar: float) -> int:
    return int(math.ceil(nbar + 10 * math.sqrt(nbar) + 20))


def coherent_probe(nbar: float, cutoff: int | None = None) -> ProbeState:
    """Coherent light after the first 50:50 splitter of a Mach-Zehnder; phase on arm 1."""
    if nbar <= 0:
        raise ValueError("mean photon number must be > 0")
    cutoff = cutoff or _default_cutoff(nbar / 2)
    arm = math.sqrt(nbar / 2)
    a, b = coherent_state(arm, cutoff), coherent_state(arm, cutoff)
    state = tensor(a, b)
    return ProbeState("coherent", nbar, state, 1, a.truncation_loss + b.truncation_loss)


def squeezed_vacuum(r: float, cutoff: int = 50) -> ProbeState:
    """Single-mode squeezed vacuum squeezed along X, truncated at ``cutoff`` photons.

    Amplitudes c_2n = (-tanh r)^n √((2n)!) / (2^n n! √cosh r); the weight lost
    to truncation is reported as ``truncation_residual``.
    """
    if r < 0:
        raise ValueError("squeezing parameter must be >= 0")
    t = math.tanh(r)
    amps = {}
    for n in range(cutoff // 2 + 1):
        log_mag = 0.5 * math.lgamma(2 * n + 1) - n * math.log(2) - math.lgamma(n + 1) - 0.5 * math.log(math.cosh(r))
        if t == 0:
            if n:
                break
            amps[(0,)] = 1.0
            continue
        amps[(2 * n,)] = (-1) ** n * math.exp(n * math.log(t) + log_mag)
    kept = sum(abs(a) ** 2 for a in amps.values())
    raw = StateVector(1, cutoff, amps)
    residual = max(0.0, 1.0 - kept)
    return ProbeState("squeezed_vacuum", r, StateVector(1, cutoff, raw.normalized().amplitudes, residual), 0, residual)


def generator_std(probe: ProbeState) -> float:
    """ΔK with K the photon number on the phase-carrying mode."""
    m = probe.phase_mode
    p = np.array([abs(a) ** 2 for a in probe.realized.amplitudes.values()])
    n = np.array([k[m] for k in probe.realized.amplitudes], dtype=float)
    p = p / p.sum()
    return float(math.sqrt(max(0.0, p @ n**2 - (p @ n) ** 2)))


def heisenberg_bound(probe: ProbeState, shots: int) -> float:
    """Lower bound 1/(2 ΔK √M) on the phase error after M repetitions."""
    return 1.0 / (2 * generator_std(probe) * math.sqrt(shots))


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------


@dataclass
class PrecisionEstimate:
    parameter: str
    estimate: float
    standard_error: float
    shots: int
    resource: float
    true_value: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "shots": self.shots,
            "resource": self.resource,
            "true_value": self.true_value,
            "flags": list(self.flags),
        }


def _parity_eigenstate(probe: ProbeState) -> StateVector:
    """+1 eigenstate of A on the probe's two-level subspace (the φ = 0 probe)."""
    if probe.kind not in ("zero_n", "noon"):
        raise ValueError("the two-outcome observable is defined for zero_n and noon probes")
    return probe.realized


def observable_mean(probe: ProbeState, phi: float) -> float:
    """<A> after imprinting φ; equals cos(Nφ)."""
    p_plus = abs(inner_product(_parity_eigenstate(probe), probe.with_phase(phi))) ** 2
    return 2 * p_plus - 1


def _check_shots(shots: int, minimum: int = 1) -> None:
    if shots < minimum:
        raise ValueError(f"need at least {minimum} shots, got {shots}")


def _invert_cos(mean_a: float, n: float, shots: int) -> tuple[float, float, tuple[str, ...]]:
    flags = ("near_singularity",) if abs(mean_a) > SINGULAR_COS else ()
    est = math.acos(min(1.0, max(-1.0, mean_a))) / n
    # binomial variance (1 - <A>²)/M propagated through arccos gives 1/(N √M)
    return est, 1.0 / (n * math.sqrt(shots)), flags


def phase_estimate_zero_n(n: int, phi_true: float, shots: int, seed=0, probe: str = "zero_n") -> PrecisionEstimate:
    """Estimate φ from M two-outcome measurements of A on a |0>+|N> or NOON probe.

    The estimator φ̂ = arccos(Ā)/N is unambiguous on [0, π/N].
    """
    _check_shots(shots, 100)
    state = zero_n_probe(n) if probe == "zero_n" else noon_state(n)
    p_plus = (1 + observable_mean(state, phi_true)) / 2
    k = as_generator(seed).binomial(shots, min(1.0, max(0.0, p_plus)))
    est, se, flags = _invert_cos(2 * k / shots - 1, n, shots)
    return PrecisionEstimate("phi", est, se, shots, n, phi_true, flags)


def _mz_fractions(phi: float) -> np.ndarray:
    """Output intensity fractions of a balanced Mach-Zehnder fed in port 0."""
    mz = Circuit(2, (BeamSplitter((0, 1), math.pi / 4), PhaseShifter((1,), phi), BeamSplitter((0, 1), math.pi / 4)))
    out = circuit_to_unitary(mz).matrix @ np.array([1.0, 0.0])
    return np.abs(out) ** 2


def shot_noise_baseline(nbar: float, phi_true: float, shots: int, seed=0) -> PrecisionEstimate:
    """Coherent-light Mach-Zehnder estimate from Poissonian port counts.

    cos φ̂ = (N1 - N2)/(N1 + N2) with N1, N2 the counts summed over M shots;
    the propagated error is 1/√(M n̄).
    """
    if nbar <= 0:
        raise ValueError("mean photon number must be > 0")
    _check_shots(shots)
    f = _mz_fractions(phi_true)
    rng = as_generator(seed)
    n1, n2 = rng.poisson(shots * nbar * f)
    total = n1 + n2
    if total == 0:
        return PrecisionEstimate("phi", math.nan, math.inf, shots, nbar, phi_true, ("no_counts",))
    d = (n1 - n2) / total
    flags = ("near_singularity",) if abs(d) > SINGULAR_COS else ()
    return PrecisionEstimate("phi", math.acos(min(1.0, max(-1.0, d))), 1 / math.sqrt(total), shots, nbar, phi_true, flags)


def intensity_snr(nbar: float, shots: int, seed=0, cutoff: int | None = None) -> float:
    """Sampled mean/σ of photon counts of a coherent state (tends to √n̄)."""
    dist = distribution_of(coherent_state(math.sqrt(nbar), cutoff or _default_cutoff(nbar)))
    counts = dist.sample(as_generator(seed), shots)
    return float(counts.mean() / counts.std(ddof=1))


# ---------------------------------------------------------------------------
# Scaling sweeps
# ---------------------------------------------------------------------------


def fit_loglog(resources, errors) -> dict[str, float]:
    """Least-squares line through (log x, log y): {slope, intercept, r2}."""
    x, y = np.log(np.asarray(resources, float)), np.log(np.asarray(errors, float))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


@dataclass
class ScalingPoint:
    resource: float
    delta_phi: float  # empirical RMS error over repetitions
    stderr: float  # mean propagated standard error

    def to_dict(self) -> dict:
        return {"resource": self.resource, "delta_phi": self.delta_phi, "stderr": self.stderr}


def scaling_sweep(kind: str, resources, shots: int = 1000, repetitions: int = 1000, seed=0) -> list[ScalingPoint]:
    """Empirical phase error versus resource for "zero_n", "noon" or "coherent".

    Point i uses the generator derived from (seed, i). The phase sits at the
    middle of the estimator's range: π/(2N) for the N-photon probes and π/2
    for coherent light.
    """
    points = []
    for i, res in enumerate(resources):
        rng = run_generator(int(seed), i)
        if kind in ("zero_n", "noon"):
            n = int(res)
            phi = math.pi / (2 * n)
            p_plus = (1 + observable_mean(zero_n_probe(n) if kind == "zero_n" else noon_state(n), phi)) / 2
            k = rng.binomial(shots, min(1.0, max(0.0, p_plus)), size=repetitions)
            est = np.arccos(np.clip(2 * k / shots - 1, -1, 1)) / n
            se = 1 / (n * math.sqrt(shots))
        elif kind == "coherent":
            phi = math.pi / 2
            lam = shots * float(res) * _mz_fractions(phi)
            n1 = rng.poisson(lam[0], size=repetitions)
            n2 = rng.poisson(lam[1], size=repetitions)
            est = np.arccos(np.clip((n1 - n2) / (n1 + n2), -1, 1))
            se = float(np.mean(1 / np.sqrt(n1 + n2)))
        else:
            raise ValueError(f"unknown probe kind {kind!r}")
        points.append(ScalingPoint(float(res), float(np.sqrt(np.mean((est - phi) ** 2))), se))
    return points


# ---------------------------------------------------------------------------
# Quadratures and squeezing
# ---------------------------------------------------------------------------


def _dense_single_mode(state: StateVector, pad: int = 2) -> np.ndarray:
    if state.mode_count != 1:
        raise ValueError("quadratures are defined for single-mode states")
    top = max(k[0] for k in state.amplitudes)
    vec = np.zeros(top + 1 + pad, dtype=complex)
    for (n,), a in state.amplitudes.items():
        vec[n] = a
    return vec / np.linalg.norm(vec)


def _quadrature_matrix(dim: int, which: str) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    if which.upper() == "X":
        return (a + a.conj().T) / math.sqrt(2)
    if which.upper() == "Y":
        return -1j * (a - a.conj().T) / math.sqrt(2)
    raise ValueError(f"quadrature must be 'X' or 'Y', got {which!r}")


def quadrature_moments(state: StateVector, which: str = "X") -> tuple[float, float, float]:
    """(mean, variance, truncation residual) of a quadrature.

    The state is padded so that Q|ψ> is represented exactly; the residual is
    the norm the state lost when it was truncated.
    """
    vec = _dense_single_mode(state)
    q = _quadrature_matrix(vec.size, which)
    qv = q @ vec
    mean = float(np.vdot(vec, qv).real)
    second = float(np.vdot(qv, qv).real)
    return mean, second - mean**2, state.truncation_loss


def quadrature_variance(state: StateVector, which: str = "X") -> float:
    return quadrature_moments(state, which)[1]


def squeezed_precision_bound(r: float, nbar: float, shots: int) -> float:
    """e^{-r} / √(M n̄)."""
    if r < 0 or nbar <= 0 or shots < 1:
        raise ValueError("need r >= 0, n̄ > 0 and M >= 1")
    return math.exp(-r) / math.sqrt(shots * nbar)


def _hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """Oscillator eigenfunctions ψ_n(x) for X = (a + a†)/√2, via the stable recurrence."""
    psi = np.zeros((n_max + 1, x.size))
    psi[0] = math.pi**-0.25 * np.exp(-(x**2) / 2)
    if n_max >= 1:
        psi[1] = math.sqrt(2) * x * psi[0]
    for n in range(2, n_max + 1):
        psi[n] = math.sqrt(2 / n) * x * psi[n - 1] - math.sqrt((n - 1) / n) * psi[n - 2]
    return psi


def homodyne_samples(state: StateVector, size: int, rng, grid_points: int = 8001) -> np.ndarray:
    """Draw X-quadrature outcomes of a single-mode state by inverse-CDF sampling."""
    vec = _dense_single_mode(state, pad=0)
    width = 6 + 2 * math.sqrt(vec.size)
    x = np.linspace(-width, width, grid_points)
    density = np.abs(vec @ _hermite_functions(vec.size - 1, x)) ** 2
    cdf = np.concatenate([[0.0], np.cumsum((density[1:] + density[:-1]) / 2 * np.diff(x))])
    cdf /= cdf[-1]
    return np.interp(as_generator(rng).random(size), cdf, x)


def squeezed_phase_estimate(r: float, phi_true: float, shots: int, seed=0, cutoff: int = 50) -> PrecisionEstimate:
    """Phase estimate from homodyne X samples of a rotated squeezed vacuum.

    After a phase φ the X variance is (e^{-2r} cos²φ + e^{2r} sin²φ)/2; the
    sample second moment is inverted for φ ∈ [0, π/2].
    """
    if r <= 0:
        raise ValueError("squeezing parameter must be > 0")
    _check_shots(shots, 100)
    probe = squeezed_vacuum(r, cutoff)
    samples = homodyne_samples(probe.with_phase(phi_true), shots, seed)
    s2 = float(np.mean(samples**2))
    lo, hi = math.exp(-2 * r) / 2, math.exp(2 * r) / 2
    frac = (s2 - lo) / (hi - lo)
    flags = ("near_singularity",) if not 0.01 < frac < 0.99 else ()
    est = math.asin(math.sqrt(min(1.0, max(0.0, frac))))
    # Var(s²) = 2 σ⁴ / M for a Gaussian; dσ²/dφ = sin 2φ sinh 2r
    sigma2 = lo * math.cos(est) ** 2 + hi * math.sin(est) ** 2
    slope = abs(math.sin(2 * est)) * math.sinh(2 * r)
    se = math.sqrt(2 / shots) * sigma2 / slope if slope > 0 else math.inf
    return PrecisionEstimate("phi", est, se, shots, probe.mean_photons, phi_true, flags)


# ---------------------------------------------------------------------------
# Interferometric micrometer
# ---------------------------------------------------------------------------


def micrometer_intensity(x, wavelength: float, length: float, thickness: float) -> np.ndarray:
    """Relative fringe intensity sin²(2π x d / (λ L)); dark at the pivot, period λL/(2d)."""
    return np.sin(2 * math.pi * np.asarray(x, float) * thickness / (wavelength * length)) ** 2


def _fit_fringe_frequency(x: np.ndarray, counts: np.ndarray, lo: float) -> tuple[float, float]:
    """Least-squares (σ, A) for counts ≈ A sin²(π σ x).

    sin²(πσx) = (1 - cos 2πσx)/2, so a zero-padded FFT peak gives σ to a
    fraction of a fringe; a joint least-squares polish refines it.
    """
    dx = x[1] - x[0]
    pad = 16 * x.size
    spectrum = np.abs(np.fft.rfft(counts - counts.mean(), n=pad))
    freqs = np.fft.rfftfreq(pad, d=dx)
    spectrum[freqs < lo] = 0
    sigma0 = float(freqs[int(np.argmax(spectrum))])
    amp0 = 2 * float(counts.mean())

    def resid(p):
        return p[1] * np.sin(math.pi * p[0] * x) ** 2 - counts

    res = optimize.least_squares(resid, [sigma0, amp0], x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(res.x[0]), float(res.x[1])


def micrometer_estimate(
    wavelength: float,
    length: float,
    thickness: float,
    photons: float,
    seed=0,
    pixels: int = 4000,
    method: str = "fit",
    noiseless: bool = False,
) -> PrecisionEstimate:
    """Estimate foil thickness d from a simulated fringe image.

    ``photons`` are spread over ``pixels`` along the length L with Poisson
    noise per pixel. ``method="fit"`` fits the fringe frequency σ by least
    squares and reports its Poisson sandwich error; ``method="count"`` rounds σL to
    a whole number of fringes, with error λ/2 from Δσ ~ 1/L. In both cases
    d = λLσ/2.
    """
    if min(wavelength, length, thickness, photons) <= 0:
        raise ValueError("wavelength, length, thickness and photons must be > 0")
    x = (np.arange(pixels) + 0.5) * (length / pixels)
    profile = micrometer_intensity(x, wavelength, length, thickness)
    expected = photons * profile / profile.sum()
    counts = expected if noiseless else as_generator(seed).poisson(expected).astype(float)
    sigma_true = 2 * thickness / (wavelength * length)
    flags = []
    if sigma_true * length < 1:
        flags.append("fewer_than_one_fringe")
    sigma, amp = _fit_fringe_frequency(x, counts, 0.5 / length)
    to_d = wavelength * length / 2
    if method == "fit":
        # sandwich variance of the unweighted fit under Poisson noise (var = mean)
        jac = np.column_stack([amp * math.pi * x * np.sin(2 * math.pi * sigma * x), np.sin(math.pi * sigma * x) ** 2])
        mu = amp * jac[:, 1]
        bread = np.linalg.inv(jac.T @ jac)
        cov = bread @ (jac.T * mu) @ jac @ bread
        se = to_d * math.sqrt(cov[0, 0]) if cov[0, 0] > 0 else math.inf
        est = to_d * sigma
    elif method == "count":
        fringes = round(sigma * length)
        est = to_d * fringes / length
        se = wavelength / 2
    else:
        raise ValueError(f"unknown method {method!r}")
    return PrecisionEstimate("d", est, se, pixels, photons, thickness, tuple(flags))


# ---------------------------------------------------------------------------
# Double slit
# ---------------------------------------------------------------------------


def double_slit_intensity(x, slit_width: float, separation: float, distance: float, wavelength: float,
                          i0: float = 1.0) -> np.ndarray:
    """I0 cos²(π x d / (L λ)) sinc²(π x a / (L λ))."""
    if min(slit_width, separation, distance, wavelength) <= 0:
        raise ValueError("a, d, L and λ must be > 0")
    x = np.asarray(x, float)
    scale = distance * wavelength
    # np.sinc(u) = sin(πu)/(πu)
    return i0 * np.cos(math.pi * x * separation / scale) ** 2 * np.sinc(x * slit_width / scale) ** 2


def double_slit_window(slit_width: float, distance: float, wavelength: float, lobes: int = 3) -> float:
    """Half-width covering ``lobes`` sinc zeros on each side."""
    return lobes * distance * wavelength / slit_width


def sample_double_slit(n: int, slit_width: float, separation: float, distance: float, wavelength: float,
                       seed=0, half_width: float | None = None) -> np.ndarray:
    """Photon hit positions drawn from the normalized pattern by rejection sampling."""
    rng = as_generator(seed)
    w = half_width or double_slit_window(slit_width, distance, wavelength)
    out = np.empty(0)
    while out.size < n:
        batch = max(1024, 4 * (n - out.size))
        x = rng.uniform(-w, w, batch)
        keep = rng.random(batch) < double_slit_intensity(x, slit_width, separation, distance, wavelength)
        out = np.concatenate([out, x[keep]])
    return out[:n]


def double_slit_chi2(samples, bins: int, slit_width: float, separation: float, distance: float,
                     wavelength: float, half_width: float | None = None, min_expected: float = 5.0) -> dict:
    """Pearson χ² of a position histogram against the analytic pattern.

    Expected bin counts come from integrating the curve on a fine grid; bins
    with fewer than ``min_expected`` expected counts are pooled into one.
    """
    w = half_width or double_slit_window(slit_width, distance, wavelength)
    edges = np.linspace(-w, w, bins + 1)
    observed, _ = np.histogram(samples, edges)
    fine = np.linspace(-w, w, 200 * bins + 1)
    f = double_slit_intensity(fine, slit_width, separation, distance, wavelength)
    cum = np.concatenate([[0.0], np.cumsum((f[1:] + f[:-1]) / 2)])
    mass = np.diff(np.interp(edges, fine, cum))
    expected = observed.sum() * mass / mass.sum()
    big = expected >= min_expected
    obs = np.append(observed[big], observed[~big].sum())
    exp = np.append(expected[big], expected[~big].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    result = stats.chisquare(obs, exp)
    return {"chi2": float(result.statistic), "dof": int(obs.size - 1), "p_value": float(result.pvalue)}
