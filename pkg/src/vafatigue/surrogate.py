"""Iterative amplitude-adjusted Fourier transform (IAAFT) surrogates.

A surrogate keeps the sample multiset of the source exactly and matches its
one-sided spectral magnitudes to a tolerance, while the phase structure is
randomized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .loadgen import LoadHistory


@dataclass(frozen=True)
class SurrogateConfig:
    max_iterations: int = 200
    psd_tolerance: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class SurrogateResult:
    amplitude_matched: LoadHistory
    frequency_matched: LoadHistory
    iterations: int
    psd_error: float
    initial_psd_error: float
    converged: bool


def random_permutation(x, seed) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(np.asarray(x, dtype=float))


def _unit_phases(spectrum: np.ndarray, n: int) -> np.ndarray:
    mag = np.abs(spectrum)
    phase = np.ones_like(spectrum)
    nz = mag > 0
    phase[nz] = spectrum[nz] / mag[nz]
    # DC (and Nyquist for even n) must stay real for a real inverse transform
    phase[0] = 1.0 if spectrum[0].real >= 0 else -1.0
    if n % 2 == 0:
        phase[-1] = 1.0 if spectrum[-1].real >= 0 else -1.0
    return phase


def spectral_match(candidate, reference_magnitude) -> np.ndarray:
    """Replace the spectral magnitudes of ``candidate`` while keeping its phases."""
    x = np.asarray(candidate, dtype=float)
    spectrum = np.fft.rfft(x)
    return np.fft.irfft(np.asarray(reference_magnitude) * _unit_phases(spectrum, x.size), x.size)


def amplitude_match(candidate, reference) -> np.ndarray:
    """Give ``candidate``'s rank order to the sorted values of ``reference``."""
    c = np.asarray(candidate, dtype=float)
    out = np.empty_like(c)
    out[np.argsort(c, kind="stable")] = np.sort(np.asarray(reference, dtype=float))
    return out


def psd_error(x, reference_magnitude) -> float:
    """Relative L2 distance of one-sided magnitude spectra, DC excluded."""
    mag = np.abs(np.fft.rfft(np.asarray(x, dtype=float)))[1:]
    ref = np.asarray(reference_magnitude)[1:]
    denom = np.linalg.norm(ref)
    return float(np.linalg.norm(mag - ref) / denom) if denom > 0 else 0.0


def generate_surrogate(load: LoadHistory, config: SurrogateConfig = SurrogateConfig()) -> SurrogateResult:
    x = load.samples
    if x.size < 4:
        raise ValueError("surrogate generation needs at least 4 samples")
    label = load.label + "s"

    def wrap(samples):
        return LoadHistory(samples, load.dt, label, "surrogate", config.seed)

    if np.all(x == x[0]):
        return SurrogateResult(wrap(x.copy()), wrap(x.copy()), 1, 0.0, 0.0, True)

    reference_magnitude = np.abs(np.fft.rfft(x))
    current = random_permutation(x, config.seed)
    initial = error = psd_error(current, reference_magnitude)
    shaped = current
    best = (error, current, shaped)
    iterations = 0
    while iterations < config.max_iterations and error >= config.psd_tolerance:
        shaped = spectral_match(current, reference_magnitude)
        current = amplitude_match(shaped, x)
        error = psd_error(current, reference_magnitude)
        iterations += 1
        if error < best[0]:
            best = (error, current, shaped)
    error, current, shaped = best
    return SurrogateResult(
        wrap(current), wrap(shaped), iterations, error, initial, error < config.psd_tolerance
    )
