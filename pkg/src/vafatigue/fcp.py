"""Cycle-by-cycle fatigue crack growth with a crack-closure correction.

Each reversal pair (minimum, maximum) is one cycle. The crack-opening stress
is tracked through the closure factor, converted into an equivalent stress
ratio, and the resulting stress-intensity range drives the growth law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rainflow import ReversalSequence

SQRT_PI = math.sqrt(math.pi)
TERMINATIONS = ("reached_final_a", "fracture_toughness_exceeded", "spectrum_exhausted", "arrested")


@dataclass(frozen=True)
class CrackGeometry:
    """Single-edge-notch bend specimen in three-point bending (span = 4 W).

    Lengths in metres; stress in MPa, so stress intensity is in MPa*sqrt(m).
    """

    width: float = 0.0127
    initial_crack: float = 1.27e-3
    final_crack: float = 6.0e-3

    def __post_init__(self):
        if not 0 < self.initial_crack < self.final_crack <= 0.6 * self.width:
            raise ValueError("require 0 < a0 < af <= 0.6 W")


@dataclass(frozen=True)
class ClosureParams:
    """Closure model settings.

    ``cf0`` is the closure factor at zero stress ratio and ``r_high`` the
    ratio above which the crack is taken to be fully open. The opening stress
    of a large cycle is held until the crack has grown through that cycle's
    plastic zone, whose radius is ``zone_factor * (K_max / yield_strength)**2``.
    """

    cf0: float = 0.3
    r_high: float = 0.7
    yield_strength: float = 345.0
    zone_factor: float = 1.0 / (2.0 * math.pi)
    memory: bool = True

    def __post_init__(self):
        if not 0 <= self.cf0 < 1:
            raise ValueError("cf0 must lie in [0, 1)")
        if not 0 < self.r_high <= 1:
            raise ValueError("r_high must lie in (0, 1]")


@dataclass(frozen=True)
class ParisLaw:
    C: float = 1.0e-11
    m: float = 3.2

    def rate(self, delta_k: float, stress_ratio: float = 0.0) -> float:
        return self.C * delta_k**self.m


@dataclass(frozen=True, eq=False)
class TabularLaw:
    """Growth rate tables per stress ratio, interpolated log-log in ΔK and
    linearly in R on the log rate; clamped at the table ends."""

    delta_k: np.ndarray
    rates: np.ndarray  # shape (len(stress_ratios), len(delta_k))
    stress_ratios: np.ndarray = field(default_factory=lambda: np.array([0.0]))

    def __post_init__(self):
        dk = np.asarray(self.delta_k, dtype=float)
        rates = np.atleast_2d(np.asarray(self.rates, dtype=float))
        ratios = np.atleast_1d(np.asarray(self.stress_ratios, dtype=float))
        if rates.shape != (ratios.size, dk.size):
            raise ValueError("rates must have shape (n_ratios, n_delta_k)")
        if np.any(np.diff(dk) <= 0) or np.any(dk <= 0):
            raise ValueError("delta_k must be positive and strictly increasing")
        if np.any(np.diff(ratios) <= 0):
            raise ValueError("stress ratios must be strictly increasing")
        if np.any(rates <= 0) or np.any(np.diff(rates, axis=1) < 0):
            raise ValueError("rates must be positive and non-decreasing in delta_k")
        object.__setattr__(self, "delta_k", dk)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "stress_ratios", ratios)
        object.__setattr__(self, "_log_dk", np.log(dk))
        object.__setattr__(self, "_log_rates", np.log(rates))

    def rate(self, delta_k: float, stress_ratio: float = 0.0) -> float:
        if delta_k <= 0:
            return 0.0
        x = math.log(delta_k)
        per_ratio = [np.interp(x, self._log_dk, row) for row in self._log_rates]
        if len(per_ratio) == 1:
            return math.exp(per_ratio[0])
        return math.exp(np.interp(stress_ratio, self.stress_ratios, per_ratio))


@dataclass(frozen=True, eq=False)
class SimResult:
    ctf: float
    termination: str
    crack_history: np.ndarray  # rows of (cycle, crack length) at block ends
    blocks: int
    final_crack: float


def geometry_factor(a_over_w: float) -> float:
    """Dimensionless SIF factor F with ``K = s * sqrt(pi a) * F(a/W)``."""
    x = a_over_w
    return (1.99 - x * (1 - x) * (2.15 - 3.93 * x + 2.7 * x * x)) / (SQRT_PI * (1 + 2 * x) * (1 - x) ** 1.5)


def stress_intensity(stress, crack: float, geometry: CrackGeometry = CrackGeometry()):
    if not 0 <= crack / geometry.width <= 0.6:
        raise ValueError("a/W outside the validity range [0, 0.6]")
    return np.asarray(stress) * math.sqrt(math.pi * crack) * geometry_factor(crack / geometry.width)


def closure_factor(stress_ratio, cf0: float):
    """Crack-opening to maximum stress ratio as a function of stress ratio.

    ``1 - (1 - cf0)(1 + 0.6 R)(1 - R)``, expanded so that the end points
    ``R = 0`` and ``R = 1`` evaluate to ``cf0`` and 1 exactly.
    """
    R = np.asarray(stress_ratio, dtype=float)
    return cf0 + (1.0 - cf0) * R * (0.4 + 0.6 * R)


def equivalent_stress_ratio(cf: float, cf0: float) -> float:
    """Non-negative root of ``closure_factor(R) == cf``, discriminant floored at 0."""
    disc = (0.4 * (1.0 - cf0)) ** 2 - 4.0 * 0.6 * (1.0 - cf0) * (cf0 - cf)
    return (0.4 * (cf0 - 1.0) + math.sqrt(max(disc, 0.0))) / (1.2 * (1.0 - cf0))


def _cycle_pairs(reversals) -> tuple[list[float], list[float]]:
    v = np.asarray(reversals.values if isinstance(reversals, ReversalSequence) else reversals, dtype=float)
    if v.size >= 2 and v[0] > v[1]:
        v = v[1:]
    n = v.size // 2
    return v[0 : 2 * n : 2].tolist(), v[1 : 2 * n : 2].tolist()


def simulate(
    reversals,
    geometry: CrackGeometry = CrackGeometry(),
    growth: ParisLaw | TabularLaw = ParisLaw(),
    closure: ClosureParams | None = ClosureParams(),
    fracture_toughness: float = 60.0,
    max_blocks: int = 100_000,
) -> SimResult:
    """Grow the crack by repeating the reversal block until a terminal event.

    With ``closure=None`` each cycle uses the nominal positive range
    ``K_max - max(K_min, 0)``.
    """
    lows, highs = _cycle_pairs(reversals)
    n = len(lows)
    width = geometry.width
    a = geometry.initial_crack
    a_final = geometry.final_crack
    paris = isinstance(growth, ParisLaw)
    C, m = (growth.C, growth.m) if paris else (0.0, 0.0)
    rate = growth.rate

    use_closure = closure is not None
    if use_closure:
        cf0 = closure.cf0
        r_high = closure.r_high
        memory = closure.memory
        one_minus = 1.0 - cf0
        disc0 = (0.4 * one_minus) ** 2
        disc_k = 2.4 * one_minus
        root_off = 0.4 * (cf0 - 1.0)
        root_den = 1.2 * one_minus
        zone_k = closure.zone_factor / closure.yield_strength**2
    s_open = None
    zone_front = -math.inf

    history = [(0, a)]
    cycles = 0
    for block in range(1, max_blocks + 1):
        a_start = a
        for i in range(n):
            cycles += 1
            s_max = highs[i]
            if s_max <= 0.0:
                continue
            s_min = lows[i]
            x = a / width
            g = math.sqrt(math.pi * a) * (1.99 - x * (1 - x) * (2.15 - 3.93 * x + 2.7 * x * x)) / (
                SQRT_PI * (1 + 2 * x) * (1 - x) ** 1.5
            )
            k_max = s_max * g
            k_min = s_min * g
            if use_closure:
                r_nom = s_min / s_max
                s_steady = (cf0 + one_minus * r_nom * (0.4 + 0.6 * r_nom)) * s_max
                zone = zone_k * k_max * k_max
                if s_open is None or not memory or s_steady >= s_open or a + zone >= zone_front:
                    s_open = s_steady if s_open is not None else cf0 * s_max
                    zone_front = a + zone
                k_low = max(k_min, s_open * g)
                cf = k_low / k_max
                if cf >= 1.0:
                    continue
                disc = disc0 - disc_k * (cf0 - cf)
                R = (root_off + math.sqrt(disc if disc > 0.0 else 0.0)) / root_den
                if R > r_high or R > cf:
                    R = cf
                elif r_nom < 0.0 and r_nom <= R:
                    R = r_nom
                delta_k = k_max * (1.0 - R) if R >= 0.0 else k_max
            else:
                R = s_min / s_max
                delta_k = k_max - (k_min if k_min > 0.0 else 0.0)
            if delta_k > fracture_toughness:
                history.append((cycles, a))
                return SimResult(float(cycles), "fracture_toughness_exceeded", np.array(history), block, a)
            a += C * delta_k**m if paris else rate(delta_k, R)
            if a >= a_final:
                history.append((cycles, a))
                return SimResult(float(cycles), "reached_final_a", np.array(history), block, a)
        history.append((cycles, a))
        if a <= a_start:
            return SimResult(math.inf, "arrested", np.array(history), block, a)
    return SimResult(float(cycles), "spectrum_exhausted", np.array(history), max_blocks, a)
