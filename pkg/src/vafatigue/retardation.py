"""Overload identification and the dynamic residual-stress retardation model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rainflow import RainflowSet

CLASSES = ("A", "B", "C", "D")


@dataclass(frozen=True)
class RetardationParams:
    rho: float = 0.2
    n_c: float = 50.0
    r: float = 0.1

    def __post_init__(self):
        if not self.rho >= 0:
            raise ValueError("rho must be non-negative")
        if not self.n_c > 0:
            raise ValueError("n_c must be positive")
        if not 0 < self.r < 1:
            raise ValueError("r must lie in (0, 1)")


@dataclass(frozen=True, eq=False)
class OverloadSet:
    """Overload reversals sorted by index.

    ``sigma_ol`` is the drop from the overload peak to the next peak (floored
    at zero) and ``alpha`` the ratio of the two peaks.
    """

    index: np.ndarray
    kind: np.ndarray
    sigma_ol: np.ndarray
    alpha: np.ndarray

    def __len__(self):
        return self.index.size

    def counts(self) -> dict[str, int]:
        return {c: int(np.count_nonzero(self.kind == c)) for c in CLASSES}


@dataclass(frozen=True, eq=False)
class RetardedAmplitudes:
    sigma_ar: np.ndarray
    sigma_rar: np.ndarray
    active_overload: np.ndarray  # index into the OverloadSet, -1 when none


def identify_overloads(cycles: RainflowSet, sigma_ar: np.ndarray, alpha_cap: float = 10.0) -> OverloadSet:
    """Classify overload reversals from the rainflow decomposition.

    A: end of a loading half cycle.
    B: onset of an unloading half cycle.
    C: end of a loading full cycle whose amplitude exceeds the next cycle's.
    D: onset of an unloading full cycle whose amplitude exceeds the previous one's.
    """
    sigma_ar = np.asarray(sigma_ar, dtype=float)
    if sigma_ar.shape != cycles.onset.shape:
        raise ValueError("sigma_ar must align with the cycle list")
    half = cycles.half
    loading = cycles.loading
    nxt = np.append(sigma_ar[1:], np.inf)
    prv = np.insert(sigma_ar[:-1], 0, np.inf)
    picks = (
        cycles.end[half & loading],
        cycles.onset[half & ~loading],
        cycles.end[~half & loading & (sigma_ar > nxt)],
        cycles.onset[~half & ~loading & (sigma_ar > prv)],
    )
    index = np.concatenate(picks)
    kind = np.concatenate([np.full(p.size, c) for p, c in zip(picks, CLASSES)])
    # np.unique keeps the first occurrence, so class priority follows A..D
    index, first = np.unique(index, return_index=True)
    kind = kind[first].astype("<U1")

    v = cycles.values
    has_next = index + 2 < v.size
    peak = v[index]
    next_peak = np.where(has_next, v[np.minimum(index + 2, v.size - 1)], peak)
    sigma_ol = np.where(has_next, np.maximum(peak - next_peak, 0.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(has_next & (peak > 0) & (next_peak > 0), peak / next_peak, 1.0)
    alpha = np.minimum(alpha, alpha_cap)
    return OverloadSet(index.astype(np.int64), kind, sigma_ol, alpha)


def equilibrium_period(alpha, params: RetardationParams = RetardationParams()):
    return params.n_c * np.exp(alpha)


def dynamic_residual_stress(n, sigma_ol, alpha, params: RetardationParams = RetardationParams()):
    """Residual stress ``n`` cycles after an overload, decaying to ``r`` of its
    initial value over one equilibrium period."""
    return params.rho * np.asarray(sigma_ol) * np.exp(
        np.asarray(n) / equilibrium_period(alpha, params) * math.log(params.r)
    )


def apply_retardation(
    cycles: RainflowSet,
    sigma_ar: np.ndarray,
    overloads: OverloadSet,
    params: RetardationParams = RetardationParams(),
) -> RetardedAmplitudes:
    """Subtract the residual stress of the most recent overload from each cycle.

    The overload active for a cycle is the last one whose reversal index is at
    or before the cycle onset; the elapsed count is the number of cycles since
    the first cycle starting at or after the overload.
    """
    sigma_ar = np.asarray(sigma_ar, dtype=float)
    onsets = cycles.onset
    active = np.searchsorted(overloads.index, onsets, side="right") - 1
    hit = active >= 0
    sigma_rar = sigma_ar.copy()
    if np.any(hit):
        j = active[hit]
        start = np.searchsorted(onsets, overloads.index, side="left")
        elapsed = np.flatnonzero(hit) - start[j]
        rd = dynamic_residual_stress(elapsed, overloads.sigma_ol[j], overloads.alpha[j], params)
        sigma_rar[hit] = np.maximum(sigma_ar[hit] - rd, 0.0)
    return RetardedAmplitudes(sigma_ar, sigma_rar, np.where(hit, active, -1))
