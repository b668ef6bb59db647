"""Turning-point extraction, rainflow counting and mean-stress correction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .loadgen import LoadHistory


@dataclass(frozen=True, eq=False)
class ReversalSequence:
    values: np.ndarray
    source_indices: np.ndarray
    starts_with_minimum: bool

    def __len__(self):
        return self.values.size


class CycleRecord(NamedTuple):
    onset: int
    end: int
    range: float
    mean: float
    count: float


@dataclass(frozen=True, eq=False)
class RainflowSet:
    """Cycles sorted by onset reversal index.

    ``onset``/``end`` index into ``values`` (the counted reversal sequence).
    Full cycles carry count 1, residual excursions count 0.5, so that twice
    the summed count equals the number of excursions (``len(values) - 1``).
    """

    onset: np.ndarray
    end: np.ndarray
    range: np.ndarray
    mean: np.ndarray
    count: np.ndarray
    values: np.ndarray

    def __len__(self):
        return self.onset.size

    @property
    def n_excursions(self) -> int:
        return max(self.values.size - 1, 0)

    @property
    def amplitude(self) -> np.ndarray:
        return self.range / 2.0

    @property
    def loading(self) -> np.ndarray:
        """True where the cycle starts at a minimum and rises to its end."""
        return self.values[self.end] > self.values[self.onset]

    @property
    def half(self) -> np.ndarray:
        return self.count == 0.5

    def records(self) -> Iterator[CycleRecord]:
        for row in zip(self.onset, self.end, self.range, self.mean, self.count):
            yield CycleRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]), float(row[4]))


def find_reversals(load, start_with_minimum: bool = True) -> ReversalSequence:
    """Interior local extrema with plateaus collapsed to their first sample.

    Samples before the first minimum are dropped when ``start_with_minimum``
    is set and at least one later reversal exists.
    """
    x = load.samples if isinstance(load, LoadHistory) else np.asarray(load, dtype=float)
    if x.size < 3:
        raise ValueError("at least 3 samples are needed to find reversals")
    keep = np.concatenate(([True], x[1:] != x[:-1]))
    idx = np.flatnonzero(keep)
    v = x[idx]
    d = np.sign(np.diff(v))
    turn = np.flatnonzero(d[1:] != d[:-1]) + 1
    values, indices = v[turn], idx[turn]
    if values.size and start_with_minimum and values.size > 1 and values[0] > values[1]:
        values, indices = values[1:], indices[1:]
    starts_min = bool(values.size > 1 and values[0] < values[1]) or (
        values.size == 1 and d[turn[0] - 1] < 0
    )
    return ReversalSequence(values, indices, starts_min)


def rainflow_count(reversals) -> RainflowSet:
    """Four-point rainflow counting with residual excursions as half cycles."""
    v = np.asarray(reversals.values if isinstance(reversals, ReversalSequence) else reversals, dtype=float)
    if v.size < 2:
        raise ValueError("at least 2 reversals are needed to count cycles")
    vals = v.tolist()
    stack: list[int] = []
    full_onset: list[int] = []
    full_end: list[int] = []
    for j in range(len(vals)):
        stack.append(j)
        while len(stack) >= 4:
            a, b, c, d = stack[-4:]
            inner = abs(vals[c] - vals[b])
            if inner <= abs(vals[d] - vals[c]) and inner <= abs(vals[b] - vals[a]):
                full_onset.append(b)
                full_end.append(c)
                del stack[-3:-1]
            else:
                break

    onset = np.array(full_onset + stack[:-1], dtype=np.int64)
    end = np.array(full_end + stack[1:], dtype=np.int64)
    count = np.concatenate((np.ones(len(full_onset)), np.full(len(stack) - 1, 0.5)))
    order = np.argsort(onset, kind="stable")
    onset, end, count = onset[order], end[order], count[order]
    lo, hi = v[onset], v[end]
    return RainflowSet(onset, end, np.abs(hi - lo), (hi + lo) / 2.0, count, v)


def mean_stress_correct(cycles: RainflowSet, gamma: float = 0.5, operand: str = "mean") -> np.ndarray:
    """Walker-type equivalent amplitude ``(s_max * s_second) ** gamma``.

    ``operand`` selects the second factor: the cycle mean or its amplitude.
    Cycles where either factor is non-positive get zero.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    amplitude = cycles.range / 2.0
    s_max = cycles.mean + amplitude
    if operand == "mean":
        second = cycles.mean
    elif operand == "amplitude":
        second = amplitude
    else:
        raise ValueError(f"unknown operand {operand!r}")
    ok = (s_max > 0) & (second > 0)
    out = np.zeros_like(s_max)
    out[ok] = (s_max[ok] * second[ok]) ** gamma
    return out
