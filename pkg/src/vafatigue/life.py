"""Cumulative-damage life estimates.

Damage per block is ``rate * E[s**k] / C`` where the expectation is taken
over a stress-amplitude distribution (discrete cycles, a histogram or a
kernel density). Cycles to failure are the number of blocks to unit damage
times the number of rainflow cycles in one block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal, stats
from scipy.special import gamma as gamma_fn

from .loadgen import LoadHistory
from .rainflow import find_reversals


@dataclass(frozen=True)
class SnCurve:
    """Basquin law ``N = C * s**-k``."""

    k: float
    C: float

    def __post_init__(self):
        if not (self.k > 0 and self.C > 0):
            raise ValueError("S-N parameters must be positive")

    def cycles(self, amplitude):
        return self.C * np.asarray(amplitude, dtype=float) ** -self.k


@dataclass(frozen=True, eq=False)
class AmplitudePdf:
    bin_edges: np.ndarray
    density: np.ndarray
    estimator: str

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def moment(self, k: float) -> float:
        return float(np.sum(self.density * self.widths * self.centers**k))


@dataclass(frozen=True)
class RateEstimates:
    nu_peak: float
    nu_upcross: float


@dataclass(frozen=True)
class LifeEstimate:
    method: str
    damage_per_block: float
    blocks: float
    ctf: float
    rate: float
    lambda_ol: float = 1.0

    @property
    def infinite(self) -> bool:
        return math.isinf(self.ctf)


def _estimate(method, damage, cycles_per_block, rate, lambda_ol=1.0) -> LifeEstimate:
    if damage > 0:
        blocks = 1.0 / damage
        return LifeEstimate(method, damage, blocks, blocks * cycles_per_block, rate, lambda_ol)
    return LifeEstimate(method, 0.0, math.inf, math.inf, rate, lambda_ol)


def estimate_pdf(
    amplitudes,
    bins: int = 64,
    estimator: str = "histogram",
    weights=None,
    min_samples: int = 100,
) -> AmplitudePdf:
    """Amplitude density on ``[0, max]``, normalized to unit area."""
    a = np.asarray(amplitudes, dtype=float)
    if a.size < min_samples:
        raise ValueError(f"need at least {min_samples} amplitudes, got {a.size}")
    if np.any(a < 0):
        raise ValueError("amplitudes must be non-negative")
    top = a.max() if a.max() > 0 else 1.0
    edges = np.linspace(0.0, top, bins + 1)
    if estimator == "histogram":
        mass, _ = np.histogram(a, bins=edges, weights=weights)
    elif estimator == "kde":
        if np.all(a == a[0]):
            raise ValueError("kernel density of a constant sample is undefined")
        kde = stats.gaussian_kde(a, bw_method="silverman", weights=weights)
        mass = np.array([kde.integrate_box_1d(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    mass = np.asarray(mass, dtype=float)
    return AmplitudePdf(edges, mass / (mass.sum() * np.diff(edges)), estimator)


def tv_distance(a, b, bins: int = 64) -> float:
    """Total-variation distance between histograms on a shared grid."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    edges = np.linspace(lo, hi if hi > lo else lo + 1.0, bins + 1)
    p, _ = np.histogram(a, edges)
    q, _ = np.histogram(b, edges)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def count_rates(load) -> RateEstimates:
    """Peaks and mean up-crossings in one block."""
    x = load.samples if isinstance(load, LoadHistory) else np.asarray(load, dtype=float)
    rev = find_reversals(x, start_with_minimum=False)
    if len(rev):
        prev = x[np.maximum(rev.source_indices - 1, 0)]
        peaks = int(np.count_nonzero(rev.values > prev))
    else:
        peaks = 0
    m = x.mean()
    upcross = int(np.count_nonzero((x[:-1] < m) & (x[1:] >= m)))
    return RateEstimates(float(peaks), float(upcross))


def miner_life(pdf: AmplitudePdf, sn: SnCurve, rate: float, cycles_per_block: float) -> LifeEstimate:
    return _estimate("miner", rate * pdf.moment(sn.k) / sn.C, cycles_per_block, rate)


def miner_life_cycles(amplitudes, counts, sn: SnCurve, rate: float | None = None) -> LifeEstimate:
    """Discrete damage sum; ``rate`` defaults to the counted cycles per block."""
    a = np.asarray(amplitudes, dtype=float)
    n = np.asarray(counts, dtype=float)
    total = n.sum()
    rate = total if rate is None else rate
    mean_power = float(np.sum(n * a**sn.k) / total)
    return _estimate("miner", rate * mean_power / sn.C, total, rate)


def corrected_life(
    pdf: AmplitudePdf, sn: SnCurve, nu_peak: float, lambda_ol: float, cycles_per_block: float
) -> LifeEstimate:
    damage = lambda_ol * nu_peak * pdf.moment(sn.k) / sn.C
    return _estimate("retarded", damage, cycles_per_block, nu_peak, lambda_ol)


def corrected_life_cycles(sigma_rar, counts, sn: SnCurve, nu_peak: float, lambda_ol: float = 1.0) -> LifeEstimate:
    a = np.asarray(sigma_rar, dtype=float)
    n = np.asarray(counts, dtype=float)
    total = n.sum()
    mean_power = float(np.sum(n * a**sn.k) / total)
    return _estimate("retarded", lambda_ol * nu_peak * mean_power / sn.C, total, nu_peak, lambda_ol)


@dataclass(frozen=True)
class SpectralMoments:
    m0: float
    m2: float
    m4: float

    @property
    def upcross_rate(self) -> float:
        return math.sqrt(self.m2 / self.m0)

    @property
    def peak_rate(self) -> float:
        return math.sqrt(self.m4 / self.m2)


def spectral_moments(load: LoadHistory, nperseg: int = 4096) -> SpectralMoments:
    """Moments of the one-sided Welch PSD with frequency in cycles per unit time."""
    x = load.samples - load.samples.mean()
    f, g = signal.welch(x, fs=1.0 / load.dt, nperseg=min(nperseg, x.size))
    m0, m2, m4 = (float(np.trapezoid(f**j * g, f)) for j in (0, 2, 4))
    if not (m0 > 0 and m2 > 0):
        raise ValueError("degenerate spectrum")
    return SpectralMoments(m0, m2, m4)


def spectral_baseline_life(
    load: LoadHistory, sn: SnCurve, cycles_per_block: float | None = None, nperseg: int = 4096
) -> LifeEstimate:
    """Narrow-band estimate: Rayleigh amplitudes at the mean up-crossing rate."""
    mom = spectral_moments(load, nperseg)
    duration = len(load) * load.dt
    cycles = mom.upcross_rate * duration
    mean_power = math.sqrt(2.0 * mom.m0) ** sn.k * gamma_fn(1.0 + sn.k / 2.0)
    damage = cycles * mean_power / sn.C
    return _estimate("spectral_baseline", damage, cycles if cycles_per_block is None else cycles_per_block, cycles)
