"""End-to-end acceptance criteria. Each test records a PASS/FAIL line that is
printed in the terminal summary."""

import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, SYNTHETIC, VALIDATE
from oracles import paris_cycles, rainflow_four_point
from vafatigue import loadgen, pipeline
from vafatigue.correction import fit_correction, fixed_lambda, polynomial_features
from vafatigue.fcp import ClosureParams, CrackGeometry, ParisLaw, closure_factor, simulate
from vafatigue.loadgen import compute_statistics
from vafatigue.rainflow import rainflow_count
from vafatigue.retardation import RetardationParams, dynamic_residual_stress, equilibrium_period
from vafatigue.surrogate import SurrogateConfig, generate_surrogate, psd_error


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


def long_series(case: str, n: int = 2**18) -> loadgen.LoadHistory:
    """A normalized series of ``n`` samples; strides are shortened from the
    study defaults to keep the integration cheap."""
    spec = loadgen.CASES[case]
    stride = 8 if spec.system == "duffing" else 2
    system = loadgen.SYSTEMS[spec.system]()
    dt = system.dt_internal * stride
    traj = loadgen.integrate(system, t_span=100.0 + n * dt, record_every=stride)
    return loadgen.normalize_to_stress(traj[:n, spec.coordinate], dt=dt, label=f"{case}-long")


def test_criterion_1_statistical_similarity():
    failures, worst_err, worst_time = [], 0.0, 0.0
    for i, case in enumerate(SYNTHETIC):
        load = long_series(case)
        t0 = time.perf_counter()
        res = generate_surrogate(load, SurrogateConfig(seed=100 + i))
        elapsed = time.perf_counter() - t0
        s = res.amplitude_matched.samples
        same_multiset = np.array_equal(np.sort(s), np.sort(load.samples))
        # statistics of the sorted samples share the summation order
        a = compute_statistics(np.sort(load.samples))
        b = compute_statistics(np.sort(s))
        same_stats = (a.mean, a.std, a.skewness, a.kurtosis) == (b.mean, b.std, b.skewness, b.kurtosis)
        err = psd_error(s, np.abs(np.fft.rfft(load.samples)))
        worst_err, worst_time = max(worst_err, err), max(worst_time, elapsed)
        if not (same_multiset and same_stats and err < 1e-3 and elapsed < 30.0):
            failures.append(f"{case}: multiset={same_multiset} stats={same_stats} psd={err:.2e} t={elapsed:.1f}s")
    record(
        1,
        not failures,
        "; ".join(failures) or f"4 pairs at 2^18 samples, worst PSD error {worst_err:.2e}, slowest {worst_time:.1f} s",
    )


def test_criterion_2_rainflow_oracle_and_conservation(study):
    rng = np.random.default_rng(1049)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 51))
        steps = rng.uniform(0.01, 100.0, n - 1)
        v = np.concatenate(([rng.uniform(-50, 50)], steps * np.where(np.arange(n - 1) % 2 == 0, 1.0, -1.0)))
        v = np.cumsum(v) if rng.random() < 0.5 else -np.cumsum(v)
        c = rainflow_count(v)
        ours = sorted(zip(c.onset.tolist(), c.end.tolist(), c.range.tolist(), c.count.tolist()))
        mismatches += ours != rainflow_four_point(v.tolist())
    broken = [s.label for s in study.segments if 2 * s.cycles.count.sum() != len(s.reversals) - 1]
    record(
        2,
        mismatches == 0 and not broken,
        f"{mismatches}/1000 oracle mismatches; conservation violated on {len(broken)}/{len(study.segments)} inputs",
    )


def test_criterion_3_retardation_analytics(study):
    p = RetardationParams()
    rng = np.random.default_rng(9)
    onset_err = period_err = 0.0
    for sigma_ol, alpha in zip(rng.uniform(1, 400, 200), rng.uniform(0, 10, 200)):
        ref = p.rho * sigma_ol
        onset_err = max(onset_err, abs(dynamic_residual_stress(0, sigma_ol, alpha, p) - ref) / ref)
        at_period = dynamic_residual_stress(equilibrium_period(alpha, p), sigma_ol, alpha, p)
        period_err = max(period_err, abs(at_period - p.r * ref) / (p.r * ref))
    machine = 4 * np.finfo(float).eps
    n_eq_ok = equilibrium_period(0.0, p) == p.n_c
    bounded = all(np.all(s.sigma_rar <= s.sigma_ar) for s in study.segments)

    n = np.arange(0, 201)
    levels = [0.1, 0.2, 0.4, 0.8]
    family = [1.0 - dynamic_residual_stress(n, s, 1.0, RetardationParams(1.0, 10.0, 0.1)) for s in levels]
    in_level = all(np.all(f[1:] < g[1:]) for g, f in zip(family, family[1:]))
    in_time = all(np.all(np.diff(f) > 0) for f in family)
    slower = 1.0 - dynamic_residual_stress(n, 0.4, 1.0, RetardationParams(1.0, 40.0, 0.1))
    in_period = np.all(slower[1:] < family[2][1:])
    ok = onset_err <= machine and period_err <= machine and n_eq_ok and bounded and in_level and in_time and in_period
    record(
        3,
        bool(ok),
        f"onset rel err {onset_err:.1e}, one-period rel err {period_err:.1e}, N_eq(0)=N_c {n_eq_ok}, "
        f"sigma_rar<=sigma_ar {bounded}, decay family monotone {bool(in_level and in_time and in_period)}",
    )


def test_criterion_4_simulator_closed_form():
    geom, law = CrackGeometry(), ParisLaw()
    worst = 0.0
    for closure in (None, ClosureParams()):
        for s_min, s_max in ((0.0, 120.0), (0.0, 200.0), (25.0, 175.0), (50.0, 250.0)):
            expected = paris_cycles(s_max - s_min, geom.initial_crack, geom.final_crack, geom.width, law.C, law.m)
            got = simulate(np.tile([s_min, s_max], 100), geom, law, closure).ctf
            worst = max(worst, abs(got / expected - 1.0))
    cf0s = np.linspace(0.0, 0.95, 96)
    exact = all(closure_factor(0.0, c) == c and closure_factor(1.0, c) == 1.0 for c in cf0s)
    record(4, worst < 0.02 and exact, f"worst CAL deviation {100 * worst:.3f}%; closure end points exact {exact}")


def test_criterion_5_chaotic_to_surrogate_life_ratio(chaotic_loads, surrogate_loads, base_config):
    loads = [l for c in SYNTHETIC for l in chaotic_loads[c]] + [l for c in SYNTHETIC for l in surrogate_loads[c + "s"]]
    config = base_config.replace(jobs=os.cpu_count() or 1)
    t0 = time.perf_counter()
    cf0, table = pipeline.calibrate_closure(loads, config)
    ratios = pipeline.pair_ratios(loads, pipeline.with_closure_factor(config, cf0))
    elapsed = time.perf_counter() - t0
    all_above = all(r >= 1.0 for r in ratios.values())
    strong = sum(r >= 1.5 for r in ratios.values())
    sweep = ", ".join(f"{c}:{min(t.values()):.2f}" for c, t in table.items())
    detail = (
        f"cf0={cf0} ratios " + " ".join(f"{k}={v:.2f}" for k, v in ratios.items())
        + f"; {strong} pairs >= 1.5; min ratio over cf0 sweep [{sweep}]; {elapsed:.0f} s"
    )
    record(5, all_above and strong >= 2 and elapsed < 300.0, detail)


def test_criterion_6_framework_beats_miner(study):
    synthetic = [s for s in study.segments if s.case in SYNTHETIC or s.case[:-1] in SYNTHETIC]
    miner = pipeline.case_log_error(synthetic, "miner")
    corrected = pipeline.case_log_error(synthetic, "retarded_corrected")
    over = {c: study.case_ctf(c, "miner") < study.case_ctf(c, "simulated") for c in SYNTHETIC}
    record(
        6,
        corrected < miner and all(over.values()),
        f"mean |log error| miner {miner:.3f} vs retarded+corrected {corrected:.3f}; "
        f"miner CTF < simulated for {[c for c, v in over.items() if v]}",
    )


def test_criterion_7_fixed_coefficients_and_refit():
    reference = [-27.4, 2.83, 5.82, -11.5, -1.13, -0.468, -1.45, 0.224, 0.907, -0.745, 9.69]
    rng = np.random.default_rng(7)
    term_ok = True
    for _ in range(50):
        m = rng.uniform(-3, 3, 4)
        terms = polynomial_features(m) * np.array(reference)
        term_ok &= fixed_lambda(m) == pytest.approx(math.fsum(terms), rel=1e-12, abs=1e-12)
    zero = fixed_lambda([0.0, 0.0, 0.0, 0.0]) == -27.4
    moments = rng.uniform(0.1, 3.0, (60, 4))
    beta = rng.normal(size=11)
    fitted = np.array(fit_correction(moments, polynomial_features(moments) @ beta).beta)
    rel = float(np.max(np.abs(fitted - beta) / np.abs(beta)))
    record(7, bool(term_ok and zero and rel < 1e-8), f"term-by-term {term_ok}, zero moments exact {zero}, refit rel err {rel:.1e}")


def test_criterion_8_regression_generalizes(study):
    validation = [s for s in study.segments if s.case in VALIDATE]
    assert {s.case for s in validation} == set(VALIDATE)
    fitted = pipeline.case_log_error(validation, "retarded_corrected")
    unit = pipeline.case_log_error(validation, "retarded")
    record(8, fitted <= unit, f"validation mean |log error| fitted {fitted:.3f} vs lambda=1 {unit:.3f}")
