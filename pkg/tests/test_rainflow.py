import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import rainflow_four_point, turning_points_scan
from vafatigue.rainflow import find_reversals, mean_stress_correct, rainflow_count


def alternating(draws, start):
    """Reversal sequence starting at ``start`` and alternating up/down."""
    v = [start]
    for i, step in enumerate(draws):
        v.append(v[-1] + (step if i % 2 == 0 else -step))
    return np.array(v)


steps = st.lists(st.floats(0.01, 100.0), min_size=1, max_size=49)


def test_sine_first_reversal_is_a_trough():
    t = np.linspace(0, 4 * np.pi, 4001)
    rev = find_reversals(np.sin(t))
    assert rev.starts_with_minimum
    assert rev.values[0] == pytest.approx(-1.0, abs=1e-6)
    assert len(rev) == 3


def test_plateau_collapses_to_one_reversal():
    rev = find_reversals([0.0, 1.0, 1.0, 0.0])
    assert rev.values.tolist() == [1.0]
    assert rev.source_indices.tolist() == [1]
    assert not rev.starts_with_minimum


def test_monotone_series_has_no_reversals():
    assert len(find_reversals(np.arange(10.0))) == 0


def test_short_series_is_rejected():
    with pytest.raises(ValueError):
        find_reversals([1.0, 2.0])


@given(st.lists(st.integers(-5, 5), min_size=3, max_size=200))
@settings(max_examples=200, deadline=None)
def test_reversals_match_plain_scan(values):
    x = np.array(values, dtype=float)
    rev = find_reversals(x, start_with_minimum=False)
    assert rev.source_indices.tolist() == turning_points_scan(values)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=200))
@settings(max_examples=200, deadline=None)
def test_reversals_alternate(values):
    rev = find_reversals(np.array(values))
    d = np.diff(rev.values)
    assert np.all(d != 0)
    assert np.all(np.sign(d[1:]) == -np.sign(d[:-1]))
    if len(rev) > 1:
        assert rev.starts_with_minimum


def test_d1_reversal_count_matches_scan(chaotic_loads):
    x = chaotic_loads["D1"][0].samples
    found = len(find_reversals(x, start_with_minimum=False))
    assert abs(found - len(turning_points_scan(x.tolist()))) <= 0.01 * found


def test_cal_counts_full_cycles():
    cycles = rainflow_count(np.tile([-1.0, 1.0], 50))
    full = cycles.count == 1.0
    assert np.count_nonzero(full) == 49
    assert np.allclose(cycles.range, 2.0) and np.allclose(cycles.mean, 0.0)
    assert 2 * cycles.count.sum() == cycles.n_excursions


def test_nested_small_cycle():
    cycles = rainflow_count([0.0, 10.0, 4.0, 6.0, 0.0])
    records = sorted((r.range, r.count) for r in cycles.records())
    assert records == [(2.0, 1.0), (10.0, 0.5), (10.0, 0.5)]


def test_two_reversals_make_one_half_cycle():
    cycles = rainflow_count([1.0, 3.0])
    assert cycles.count.tolist() == [0.5] and cycles.range.tolist() == [2.0]


def test_counting_needs_two_reversals():
    with pytest.raises(ValueError):
        rainflow_count([1.0])


@given(steps, st.floats(-50, 50))
@settings(max_examples=300, deadline=None)
def test_counting_matches_four_point_oracle(draws, start):
    v = alternating(draws, start)
    cycles = rainflow_count(v)
    ours = sorted(zip(cycles.onset.tolist(), cycles.end.tolist(), cycles.range.tolist(), cycles.count.tolist()))
    assert ours == rainflow_four_point(v.tolist())


@given(steps, st.floats(-50, 50))
@settings(max_examples=300, deadline=None)
def test_counting_invariants(draws, start):
    v = alternating(draws, start)
    cycles = rainflow_count(v)
    assert 2 * cycles.count.sum() == cycles.n_excursions
    assert np.all(np.diff(cycles.onset) > 0)
    assert np.all(cycles.range >= 0)
    assert np.all(cycles.range <= v.max() - v.min())
    assert np.array_equal(cycles.loading, v[cycles.end] > v[cycles.onset])


def _closed_damage(values, k=3):
    """Damage of one repetition of a periodic sequence: rotate to the global
    minimum, close the loop, and count."""
    i = int(np.argmin(values))
    loop = np.concatenate((values[i:], values[:i], values[i : i + 1]))
    rev = find_reversals(np.concatenate(([loop[0] + 1.0], loop)), start_with_minimum=True)
    cycles = rainflow_count(rev)
    return float(np.sum(cycles.count * cycles.range**k))


@given(st.lists(st.floats(-100, 100), min_size=4, max_size=40, unique=True), st.integers(0, 39))
@settings(max_examples=200, deadline=None)
def test_closed_loop_damage_is_rotation_invariant(values, shift):
    x = np.array(values)
    shifted = np.roll(x, shift % x.size)
    assert _closed_damage(shifted) == pytest.approx(_closed_damage(x), rel=1e-9)


@pytest.mark.parametrize(
    "s_max, s_mean, gamma, expected",
    [(100.0, 25.0, 0.5, 50.0), (7.0, 7.0, 0.5, 7.0), (4.0, 2.0, 1.0, 8.0)],
)
def test_walker_examples(s_max, s_mean, gamma, expected):
    amp = s_max - s_mean
    cycles = rainflow_count([s_mean - amp, s_max])
    assert mean_stress_correct(cycles, gamma)[0] == pytest.approx(expected)


def test_walker_compressive_cycles_contribute_nothing():
    cycles = rainflow_count([-50.0, -10.0, -60.0, 20.0])
    assert np.all(mean_stress_correct(cycles)[cycles.mean <= 0] == 0.0)


def test_walker_amplitude_operand():
    cycles = rainflow_count([0.0, 100.0])
    assert mean_stress_correct(cycles, 0.5, "amplitude")[0] == pytest.approx(np.sqrt(100.0 * 50.0))


def test_walker_rejects_bad_gamma():
    with pytest.raises(ValueError):
        mean_stress_correct(rainflow_count([0.0, 1.0]), 1.5)
