"""Overload statistics and the quadratic-interaction regression for the
overload rate correction factor."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

FEATURE_SPEC = "1,m1,m2,m3,m4,m1m2,m1m3,m1m4,m2m3,m2m4,m3m4"

# Fixed coefficients in FEATURE_SPEC order.
FIXED_BETA = (-27.4, 2.83, 5.82, -11.5, -1.13, -0.468, -1.45, 0.224, 0.907, -0.745, 9.69)

LAMBDA_CLAMP = (0.05, 20.0)

_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


class SingularFitError(np.linalg.LinAlgError):
    def __init__(self, rank: int, condition: float):
        super().__init__(f"design matrix rank {rank} < 11 (condition number {condition:.3g})")
        self.rank = rank
        self.condition = condition


@dataclass(frozen=True)
class OverloadStatistics:
    levels: tuple[float, ...]
    rates: tuple[float, ...]
    moments: tuple[float, float, float, float]


@dataclass(frozen=True)
class CorrectionModel:
    beta: tuple[float, ...]
    feature_spec: str = FEATURE_SPEC
    training_hash: str = ""

    def __post_init__(self):
        if len(self.beta) != 11:
            raise ValueError("a correction model has 11 coefficients")

    def raw(self, moments) -> float:
        return float(polynomial_features(moments) @ np.asarray(self.beta))

    def predict(self, moments) -> float:
        return float(np.clip(self.raw(moments), *LAMBDA_CLAMP))


def overload_rate_curve(sigma_ol, index, n_levels: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Occurrence rate per reversal for each overload level.

    Levels are equal-width bins over ``[0, max sigma_ol]``. The rate is the
    reciprocal mean gap between successive occurrences; levels seen fewer
    than twice are NaN.
    """
    s = np.asarray(sigma_ol, dtype=float)
    idx = np.asarray(index)
    top = s.max() if s.size and s.max() > 0 else 1.0
    edges = np.linspace(0.0, top, n_levels + 1)
    level = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, n_levels - 1)
    rates = np.full(n_levels, np.nan)
    for b in range(n_levels):
        hits = np.sort(idx[level == b])
        if hits.size >= 2:
            rates[b] = 1.0 / np.diff(hits).mean()
    return 0.5 * (edges[1:] + edges[:-1]), rates


def overload_moments(sigma_ol, scale: float = 1.0) -> tuple[float, float, float, float]:
    """First four raw moments of ``sigma_ol / scale``."""
    s = np.asarray(sigma_ol, dtype=float) / scale
    if s.size == 0:
        raise ValueError("no overloads")
    return tuple(float(np.mean(s**j)) for j in (1, 2, 3, 4))


def overload_statistics(sigma_ol, index, scale: float = 1.0, n_levels: int = 20) -> OverloadStatistics:
    levels, rates = overload_rate_curve(sigma_ol, index, n_levels)
    return OverloadStatistics(tuple(levels), tuple(rates), overload_moments(sigma_ol, scale))


def polynomial_features(moments) -> np.ndarray:
    """Design row(s) ``[1, m1..m4, pairwise products]`` for 4 moments."""
    m = np.asarray(moments, dtype=float)
    if m.shape[-1] != 4:
        raise ValueError("expected four moments")
    cols = [np.ones(m.shape[:-1])] + [m[..., i] for i in range(4)]
    cols += [m[..., i] * m[..., j] for i, j in _PAIRS]
    return np.stack(cols, axis=-1)


def fixed_lambda(moments) -> float:
    """Correction factor from the fixed coefficients, written out term by term."""
    m1, m2, m3, m4 = (float(v) for v in moments)
    b = FIXED_BETA
    return (
        b[0]
        + b[1] * m1
        + b[2] * m2
        + b[3] * m3
        + b[4] * m4
        + b[5] * m1 * m2
        + b[6] * m1 * m3
        + b[7] * m1 * m4
        + b[8] * m2 * m3
        + b[9] * m2 * m4
        + b[10] * m3 * m4
    )


def training_hash(moments, targets) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(moments, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(targets, dtype="<f8").tobytes())
    return h.hexdigest()


def fit_correction(moments, targets) -> CorrectionModel:
    """Ordinary least squares on the interaction features."""
    m = np.asarray(moments, dtype=float)
    y = np.asarray(targets, dtype=float)
    if m.ndim != 2 or m.shape[0] != y.size:
        raise ValueError("moments must be (n, 4) aligned with targets")
    if y.size < 11:
        raise ValueError(f"at least 11 training rows are needed, got {y.size}")
    X = polynomial_features(m)
    beta, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        cond = math.inf if sv[-1] == 0 else float(sv[0] / sv[-1])
        raise SingularFitError(int(rank), cond)
    return CorrectionModel(tuple(float(b) for b in beta), FEATURE_SPEC, training_hash(m, y))
