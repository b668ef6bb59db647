"""Chaotic load synthesis.

Duffing and Lorenz trajectories are integrated with a fixed-step RK4 scheme,
one coordinate is sampled, and the result is rescaled affinely into a stress
history with a prescribed mean and standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class IntegrationDiverged(RuntimeError):
    """Raised when a trajectory leaves the admissible state bound."""


class DegenerateInput(ValueError):
    """Raised when a series cannot be rescaled (zero variance)."""


class CapacityError(ValueError):
    """Raised when more segments are requested than the series can supply."""


Rhs = Callable[[float, Sequence[float]], tuple]


@dataclass(frozen=True)
class OdeSystem:
    name: str
    state_dim: int
    rhs: Rhs
    dt_internal: float
    initial_state: tuple


def duffing(damping=0.25, linear=0.6, cubic=1.0, forcing=0.2, omega=1.0) -> OdeSystem:
    """Forced double-well oscillator x'' + d x' - a x + b x^3 = f cos(w t)."""

    def rhs(t, s):
        x, v = s
        return (v, -damping * v + linear * x - cubic * x * x * x + forcing * math.cos(omega * t))

    return OdeSystem("duffing", 2, rhs, 0.01, (1.0, 0.0))


def lorenz(sigma=10.0, rho=28.0, beta=8.0 / 3.0) -> OdeSystem:
    def rhs(t, s):
        x, y, z = s
        return (sigma * (y - x), x * (rho - z) - y, x * y - beta * z)

    return OdeSystem("lorenz", 3, rhs, 0.005, (1.0, 1.0, 1.0))


SYSTEMS = {"duffing": duffing, "lorenz": lorenz}


@dataclass(frozen=True)
class LoadCase:
    """A named choice of system, observed coordinate and sampling stride."""

    name: str
    system: str
    coordinate: int
    stride: int


CASES = {
    "D1": LoadCase("D1", "duffing", 0, 40),
    "D2": LoadCase("D2", "duffing", 1, 40),
    "L1": LoadCase("L1", "lorenz", 0, 10),
    "L3": LoadCase("L3", "lorenz", 2, 10),
}


@dataclass(frozen=True, eq=False)
class LoadHistory:
    samples: np.ndarray
    dt: float
    label: str
    source: str = "external"
    seed: int | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("load history must be a non-empty 1-D series")
        if not np.all(np.isfinite(samples)):
            raise ValueError("load history contains non-finite samples")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, LoadHistory):
            return NotImplemented
        return (
            np.array_equal(self.samples, other.samples)
            and self.dt == other.dt
            and self.label == other.label
            and self.source == other.source
            and self.seed == other.seed
        )


@dataclass(frozen=True)
class LoadStatistics:
    mean: float
    std: float
    rms: float
    skewness: float
    kurtosis: float

    @property
    def degenerate(self) -> bool:
        return math.isnan(self.skewness)


def integrate(
    system: OdeSystem,
    initial_state: Sequence[float] | None = None,
    t_span: float = 1000.0,
    dt: float | None = None,
    transient: float = 100.0,
    record_every: int = 1,
    bound: float = 1e6,
) -> np.ndarray:
    """Integrate with classical RK4 and return the retained states.

    States at steps ``transient/dt + j*record_every`` (j >= 1) up to
    ``t_span/dt`` are returned as an array of shape (n, state_dim).
    Divergence is checked at every recorded state.
    """
    dt = system.dt_internal if dt is None else dt
    if dt <= 0 or t_span < transient or transient < 0:
        raise ValueError("require dt > 0 and t_span >= transient >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    y = [float(v) for v in (system.initial_state if initial_state is None else initial_state)]
    if len(y) != system.state_dim:
        raise ValueError(f"{system.name} expects {system.state_dim} state components")

    n_total = int(round(t_span / dt))
    n_skip = int(round(transient / dt))
    n_out = (n_total - n_skip) // record_every
    out = np.empty((n_out, system.state_dim))
    f = system.rhs
    h2 = dt / 2.0
    h6 = dt / 6.0
    row = 0
    next_record = n_skip + record_every
    t = 0.0
    try:
        for step in range(1, n_skip + n_out * record_every + 1):
            k1 = f(t, y)
            k2 = f(t + h2, [u + h2 * k for u, k in zip(y, k1)])
            k3 = f(t + h2, [u + h2 * k for u, k in zip(y, k2)])
            k4 = f(t + dt, [u + dt * k for u, k in zip(y, k3)])
            y = [u + h6 * (p + 2.0 * (q + r) + w) for u, p, q, r, w in zip(y, k1, k2, k3, k4)]
            t = step * dt
            if step == next_record:
                if not all(abs(v) <= bound for v in y):
                    raise IntegrationDiverged(f"{system.name} state {y} exceeded {bound:g} at t={t:g}")
                out[row] = y
                row += 1
                next_record += record_every
    except (OverflowError, ValueError) as exc:
        raise IntegrationDiverged(f"{system.name} integration failed at t={t:g}: {exc}") from exc
    return out


def sample_coordinate(trajectory: np.ndarray, coordinate: int, stride: int = 1) -> np.ndarray:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    return np.ascontiguousarray(np.asarray(trajectory)[::stride, coordinate])


def normalize_to_stress(
    raw,
    target_mean: float = 25.0,
    target_std: float = 70.0,
    dt: float = 1.0,
    label: str = "",
    source: str = "chaotic",
    seed: int | None = None,
) -> LoadHistory:
    x = np.asarray(raw, dtype=float)
    std = x.std()
    if not std > 0:
        raise DegenerateInput("cannot rescale a constant series")
    return LoadHistory((x - x.mean()) * (target_std / std) + target_mean, dt, label, source, seed)


def compute_statistics(load: LoadHistory | np.ndarray) -> LoadStatistics:
    x = load.samples if isinstance(load, LoadHistory) else np.asarray(load, dtype=float)
    mean = x.mean()
    dev = x - mean
    m2 = np.mean(dev**2)
    rms = math.sqrt(np.mean(x**2))
    if m2 == 0:
        return LoadStatistics(float(mean), 0.0, rms, math.nan, math.nan)
    skew = np.mean(dev**3) / m2**1.5
    kurt = np.mean(dev**4) / m2**2
    return LoadStatistics(float(mean), math.sqrt(m2), rms, float(skew), float(kurt))


def select_segments(load: LoadHistory, n_segments: int, segment_len: int, seed: int) -> list[LoadHistory]:
    """Draw distinct start offsets and cut equal-length segments."""
    n_offsets = len(load) - segment_len + 1
    if segment_len < 1 or n_offsets < 1:
        raise CapacityError("segment longer than the series")
    if n_segments > n_offsets:
        raise CapacityError(f"{n_segments} segments requested but only {n_offsets} offsets exist")
    rng = np.random.default_rng(seed)
    offsets = rng.choice(n_offsets, size=n_segments, replace=False)
    return [
        LoadHistory(load.samples[o : o + segment_len].copy(), load.dt, f"{load.label}-{i:02d}", load.source, seed)
        for i, o in enumerate(offsets)
    ]


def add_noise(load: LoadHistory, snr_db: float, seed: int, label: str | None = None) -> LoadHistory:
    """Add white Gaussian noise at the given signal-to-noise ratio and
    renormalize to the original mean and std."""
    x = load.samples
    std = x.std()
    rng = np.random.default_rng(seed)
    noisy = x + rng.normal(0.0, std * 10.0 ** (-snr_db / 20.0), x.size)
    return normalize_to_stress(noisy, x.mean(), std, load.dt, label or load.label, load.source, seed)


def count_turning_points(x: np.ndarray) -> int:
    d = np.diff(np.asarray(x, dtype=float))
    d = d[d != 0]
    return int(np.count_nonzero(np.sign(d[1:]) != np.sign(d[:-1])))


def generate_cases(
    cases=("D1", "D2", "L1", "L3"),
    n_segments: int = 20,
    turning_points: int = 10_000,
    seed: int = 0,
    extra_fraction: float = 0.5,
    target_mean: float = 25.0,
    target_std: float = 70.0,
) -> dict[str, list[LoadHistory]]:
    """Generate normalized load segments for the named chaotic cases.

    Cases sharing a system and stride share one trajectory, long enough to
    hold ``1 + extra_fraction`` blocks of the sparsest coordinate. The block
    length is chosen so that a block carries about ``turning_points``
    reversals; each segment is normalized to the target mean and std.
    """
    specs = [CASES[c] if isinstance(c, str) else c for c in cases]
    transient = 100.0
    out: dict[str, list[LoadHistory]] = {}
    groups: dict[tuple[str, int], list[LoadCase]] = {}
    for spec in specs:
        groups.setdefault((spec.system, spec.stride), []).append(spec)

    for (name, stride), members in groups.items():
        system = SYSTEMS[name]()
        sample_dt = system.dt_internal * stride
        pilot = integrate(system, t_span=transient + 2000.0, transient=transient, record_every=stride)
        density = min(
            count_turning_points(pilot[:, spec.coordinate]) / (len(pilot) * sample_dt) for spec in members
        )
        span = 1.05 * turning_points * (1.0 + extra_fraction) / density
        traj = integrate(system, t_span=transient + span, transient=transient, record_every=stride)
        for spec in members:
            series = sample_coordinate(traj, spec.coordinate)
            segment_len = int(round(len(series) * turning_points / count_turning_points(series)))
            whole = LoadHistory(series, sample_dt, spec.name, "chaotic", seed)
            out[spec.name] = [
                normalize_to_stress(s.samples, target_mean, target_std, s.dt, s.label, "chaotic", seed)
                for s in select_segments(whole, n_segments, segment_len, seed)
            ]
    return {spec.name: out[spec.name] for spec in specs}
