"""End-to-end study: count, identify, retard, correct, estimate and simulate.

Every load segment is analysed and simulated independently (optionally in
worker processes); calibration, regression and reporting then run on the
collected results.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import correction as corr
from .config import PipelineConfig
from .fcp import ClosureParams, SimResult, simulate
from .io import SCHEMA_VERSION, DataError, read_model, write_json, write_load, write_model, write_table
from .life import (
    LifeEstimate,
    SnCurve,
    corrected_life_cycles,
    count_rates,
    miner_life_cycles,
    spectral_baseline_life,
)
from .loadgen import CapacityError, DegenerateInput, LoadHistory, compute_statistics, generate_cases
from .rainflow import RainflowSet, ReversalSequence, find_reversals, mean_stress_correct, rainflow_count
from .retardation import OverloadSet, RetardationParams, apply_retardation, identify_overloads
from .surrogate import SurrogateConfig, generate_surrogate

METHODS = ("miner", "retarded", "retarded_corrected", "spectral_baseline", "simulated")


class StageError(RuntimeError):
    """A pipeline stage failed; ``exit_code`` is 3 for data and 4 for numeric faults."""

    def __init__(self, stage: str, cause: Exception):
        data = isinstance(cause, (DataError, DegenerateInput, CapacityError))
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.exit_code = 3 if data else 4


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def case_name(load: LoadHistory) -> str:
    base = load.label.split("-")[0]
    if load.source == "surrogate" and not base.endswith("s"):
        base += "s"
    return base


@dataclass(eq=False)
class Segment:
    """Per-segment analysis and its results."""

    load: LoadHistory
    reversals: ReversalSequence
    cycles: RainflowSet
    sigma_ar: np.ndarray
    overloads: OverloadSet
    nu_peak: float
    nu_upcross: float
    simulated: SimResult | None = None
    estimates: dict[str, LifeEstimate] = field(default_factory=dict)
    sigma_rar: np.ndarray | None = None
    moments: tuple[float, float, float, float] | None = None
    lambda_raw: float = 1.0
    lambda_ol: float = 1.0

    @property
    def label(self) -> str:
        return self.load.label

    @property
    def case(self) -> str:
        return case_name(self.load)

    def ctf(self, method: str) -> float:
        if method == "simulated":
            return self.simulated.ctf
        return self.estimates[method].ctf


def analyse(load: LoadHistory, config: PipelineConfig) -> Segment:
    with stage("count"):
        reversals = find_reversals(load)
        cycles = rainflow_count(reversals)
        sigma_ar = mean_stress_correct(cycles, config.walker_gamma, config.walker_operand)
    with stage("identify"):
        overloads = identify_overloads(cycles, sigma_ar, config.alpha_cap)
        rates = count_rates(load)
    return Segment(load, reversals, cycles, sigma_ar, overloads, rates.nu_peak, rates.nu_upcross)


def run_simulator(reversals, config: PipelineConfig) -> SimResult:
    sim = config.simulator
    with stage("simulate"):
        return simulate(reversals, sim.geometry, sim.growth, sim.closure, sim.fracture_toughness, sim.max_blocks)


def _analyse_and_simulate(args) -> Segment:
    load, config = args
    seg = analyse(load, config)
    seg.simulated = run_simulator(seg.reversals, config)
    return seg


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def surrogate_seed(seed: int, index: int) -> int:
    return seed * 100_003 + index


def _surrogate(args) -> LoadHistory:
    load, cfg = args
    with stage("surrogate"):
        return generate_surrogate(load, cfg).amplitude_matched


def make_surrogates(loads: list[LoadHistory], config: PipelineConfig) -> list[LoadHistory]:
    base = config.surrogate
    jobs = [
        (load, SurrogateConfig(base.max_iterations, base.psd_tolerance, surrogate_seed(config.seed, i)))
        for i, load in enumerate(loads)
    ]
    return _map(_surrogate, jobs, config.jobs)


def calibrate_sn(config: PipelineConfig) -> SnCurve:
    """Fit ``N = C s**-k`` to constant-amplitude simulator lives.

    ``s`` is the mean-stress-corrected amplitude of each constant-amplitude
    cycle, so the curve is consistent with the simulator by construction.
    """
    settings = config.sn
    if settings.k is not None:
        return SnCurve(settings.k, settings.C)
    with stage("calibrate-sn"):
        mean = settings.cal_mean
        s_eq, lives = [], []
        for amp in settings.cal_amplitudes:
            block = np.tile([mean - amp, mean + amp], 1000)
            cycles = rainflow_count(block[:5])
            s = float(mean_stress_correct(cycles, config.walker_gamma, config.walker_operand)[0])
            life = run_simulator(block, config).ctf
            if not (s > 0 and math.isfinite(life)):
                raise ValueError(f"constant-amplitude calibration point {amp} MPa is not usable")
            s_eq.append(s)
            lives.append(life)
        slope, intercept = np.polyfit(np.log(s_eq), np.log(lives), 1)
        return SnCurve(float(-slope), float(math.exp(intercept)))


CF0_GRID = (0.05, 0.15, 0.3, 0.45, 0.6, 0.75, 0.85)


def _simulate_load(args) -> float:
    load, config = args
    return run_simulator(find_reversals(load), config).ctf


def with_closure_factor(config: PipelineConfig, cf0: float) -> PipelineConfig:
    closure = config.simulator.closure or ClosureParams()
    sim = dataclasses.replace(config.simulator, closure=dataclasses.replace(closure, cf0=cf0))
    return config.replace(simulator=sim)


def pair_ratios(loads: list[LoadHistory], config: PipelineConfig, per_case: int | None = None) -> dict[str, float]:
    """Mean simulated CTF of each chaotic case over that of its surrogates.

    A surrogate is paired with the chaotic segment whose label it extends;
    ``per_case`` limits the number of pairs used per case.
    """
    by_label = {l.label: l for l in loads}
    pairs: dict[str, list[tuple[LoadHistory, LoadHistory]]] = {}
    for load in loads:
        partner = by_label.get(load.label + "s")
        if load.source != "surrogate" and partner is not None and partner.source == "surrogate":
            group = pairs.setdefault(case_name(load), [])
            if per_case is None or len(group) < per_case:
                group.append((load, partner))
    flat = [p for case in sorted(pairs) for pair in pairs[case] for p in pair]
    lives = iter(_map(_simulate_load, [(l, config) for l in flat], config.jobs))
    ratios = {}
    for case in sorted(pairs):
        ctf = np.array([(next(lives), next(lives)) for _ in pairs[case]])
        ratios[case] = float(ctf[:, 0].mean() / ctf[:, 1].mean())
    return ratios


def calibrate_closure(
    loads: list[LoadHistory], config: PipelineConfig, grid=CF0_GRID, per_case: int = 3
) -> tuple[float, dict[float, dict[str, float]]]:
    """Closure factor maximizing the smallest chaotic/surrogate life ratio.

    Ties are broken by the number of pairs with a ratio of at least 1.5.
    Returns the chosen value and the ratios found at every grid point.
    """
    table = {cf0: pair_ratios(loads, with_closure_factor(config, cf0), per_case) for cf0 in grid}
    if not any(table.values()):
        raise CapacityError("closure calibration needs chaotic/surrogate pairs")

    def score(cf0):
        r = list(table[cf0].values())
        return (min(r), sum(x >= 1.5 for x in r))

    return max(grid, key=score), table


def _retarded_ctf(seg: Segment, sn: SnCurve, params: RetardationParams) -> float:
    sigma_rar = apply_retardation(seg.cycles, seg.sigma_ar, seg.overloads, params).sigma_rar
    return corrected_life_cycles(sigma_rar, seg.cycles.count, sn, seg.nu_peak).ctf


def case_log_error(segments: list[Segment], method: str, reference: str = "simulated") -> float:
    """Mean over cases of |log(mean predicted CTF / mean reference CTF)|."""
    errors = []
    for _, group in itertools.groupby(sorted(segments, key=lambda s: s.case), key=lambda s: s.case):
        group = list(group)
        pred = np.mean([s.ctf(method) for s in group])
        ref = np.mean([s.ctf(reference) for s in group])
        errors.append(abs(math.log(pred / ref)))
    return float(np.mean(errors))


def calibrate_retardation(
    segments: list[Segment],
    sn: SnCurve,
    rho_grid=(0.0, 0.1, 0.2, 0.5, 1.0, 2.0),
    n_c_grid=(10.0, 50.0, 200.0, 1000.0),
    r: float = 0.1,
) -> RetardationParams:
    """Grid search minimizing the case-mean log error against simulated CTF."""
    by_case: dict[str, list[Segment]] = {}
    for s in segments:
        by_case.setdefault(s.case, []).append(s)
    best = None
    for rho, n_c in itertools.product(rho_grid, n_c_grid):
        params = RetardationParams(rho, n_c, r)
        err = 0.0
        for group in by_case.values():
            pred = np.mean([_retarded_ctf(s, sn, params) for s in group])
            ref = np.mean([s.simulated.ctf for s in group])
            err += abs(math.log(pred / ref))
        if best is None or err < best[0]:
            best = (err, params)
    return best[1]


def estimate(seg: Segment, sn: SnCurve, params: RetardationParams, config: PipelineConfig) -> None:
    counts = seg.cycles.count
    with stage("retard"):
        seg.sigma_rar = apply_retardation(seg.cycles, seg.sigma_ar, seg.overloads, params).sigma_rar
    with stage("estimate"):
        seg.estimates["miner"] = miner_life_cycles(seg.sigma_ar, counts, sn)
        seg.estimates["retarded"] = corrected_life_cycles(seg.sigma_rar, counts, sn, seg.nu_peak)
        seg.estimates["spectral_baseline"] = spectral_baseline_life(seg.load, sn, float(counts.sum()))
        if len(seg.overloads):
            seg.moments = corr.overload_moments(seg.overloads.sigma_ol, config.correction.moment_scale)


def lambda_target(seg: Segment) -> float:
    return seg.estimates["retarded"].ctf / seg.simulated.ctf


def fit_model(segments: list[Segment], train: tuple[str, ...] | None) -> corr.CorrectionModel:
    rows = [s for s in segments if s.moments is not None and (train is None or s.case in train)]
    if len(rows) < 11:
        raise CapacityError(f"at least 11 training segments with overloads are needed, got {len(rows)}")
    return corr.fit_correction([s.moments for s in rows], [lambda_target(s) for s in rows])


def apply_correction(seg: Segment, model: corr.CorrectionModel | None, sn: SnCurve) -> None:
    if model is None or seg.moments is None:
        seg.lambda_raw = seg.lambda_ol = 1.0
    else:
        seg.lambda_raw = model.raw(seg.moments)
        seg.lambda_ol = model.predict(seg.moments)
    est = corrected_life_cycles(seg.sigma_rar, seg.cycles.count, sn, seg.nu_peak, seg.lambda_ol)
    seg.estimates["retarded_corrected"] = dataclasses.replace(est, method="retarded_corrected")


@dataclass(eq=False)
class Study:
    segments: list[Segment]
    sn: SnCurve
    retardation: RetardationParams
    model: corr.CorrectionModel | None
    config: PipelineConfig

    def cases(self) -> dict[str, list[Segment]]:
        out: dict[str, list[Segment]] = {}
        for s in self.segments:
            out.setdefault(s.case, []).append(s)
        return out

    def case_ctf(self, case: str, method: str) -> float:
        return float(np.mean([s.ctf(method) for s in self.cases()[case]]))


def load_inputs(config: PipelineConfig) -> list[LoadHistory]:
    from .io import read_load

    settings = config.load
    if settings.source == "generate":
        with stage("generate"):
            groups = generate_cases(
                settings.cases,
                settings.n_segments,
                settings.turning_points,
                config.seed,
                target_mean=settings.target_mean,
                target_std=settings.target_std,
            )
        loads = [load for case in settings.cases for load in groups[case]]
    else:
        with stage("read"):
            loads = [read_load(p) for p in settings.csv]
    if settings.surrogates:
        chaotic = [l for l in loads if l.source != "surrogate"]
        loads = loads + make_surrogates(chaotic, config)
    return loads


def run_study(loads: list[LoadHistory], config: PipelineConfig) -> Study:
    if config.calibrate_closure:
        with stage("calibrate-closure"):
            cf0, _ = calibrate_closure(loads, config)
        config = with_closure_factor(config, cf0)
    segments = _map(_analyse_and_simulate, [(l, config) for l in loads], config.jobs)
    sn = calibrate_sn(config)
    params = config.retardation
    if config.calibrate_retardation:
        with stage("calibrate-retardation"):
            params = calibrate_retardation(segments, sn)
    for seg in segments:
        estimate(seg, sn, params, config)

    mode = config.correction.mode
    with stage("correct"):
        if mode == "refit":
            model = fit_model(segments, config.correction.train)
        elif mode == "fixed":
            model = corr.CorrectionModel(corr.FIXED_BETA)
        elif mode == "file":
            model = read_model(config.correction.model_path)
        else:
            model = None
        for seg in segments:
            apply_correction(seg, model, sn)
    return Study(segments, sn, params, model, config)


def _stats_dict(stats) -> dict:
    return {k: getattr(stats, k) for k in ("mean", "std", "rms", "skewness", "kurtosis")}


def segment_report(seg: Segment) -> dict:
    counts = seg.cycles.count
    return {
        "label": seg.label,
        "statistics": _stats_dict(compute_statistics(seg.load)),
        "reversals": len(seg.reversals),
        "full_cycles": int(np.count_nonzero(counts == 1.0)),
        "half_cycles": int(np.count_nonzero(counts == 0.5)),
        "overloads": seg.overloads.counts(),
        "moments": list(seg.moments) if seg.moments is not None else None,
        "nu_peak": seg.nu_peak,
        "nu_upcross": seg.nu_upcross,
        "lambda_ol": seg.lambda_ol,
        "lambda_ol_raw": seg.lambda_raw,
        "termination": seg.simulated.termination,
        "ctf": {m: seg.ctf(m) for m in METHODS},
    }


def case_reports(study: Study) -> dict[str, dict]:
    reports = {}
    cases = study.cases()
    for case, group in cases.items():
        rows = [segment_report(s) for s in group]
        mean_stats = {k: float(np.mean([r["statistics"][k] for r in rows])) for k in rows[0]["statistics"]}
        report = {
            "schema_version": SCHEMA_VERSION,
            "case": case,
            "source": group[0].load.source,
            "n_segments": len(group),
            "statistics": mean_stats,
            "cycles": {
                "reversals": float(np.mean([r["reversals"] for r in rows])),
                "full": float(np.mean([r["full_cycles"] for r in rows])),
                "half": float(np.mean([r["half_cycles"] for r in rows])),
            },
            "overloads": {k: float(np.mean([r["overloads"][k] for r in rows])) for k in "ABCD"},
            "lambda_ol": float(np.mean([s.lambda_ol for s in group])),
            "lambda_ol_raw": float(np.mean([s.lambda_raw for s in group])),
            "ctf": {m: study.case_ctf(case, m) for m in METHODS},
            "segments": rows,
        }
        if case + "s" in cases:
            report["ratio_to_surrogate"] = report["ctf"]["simulated"] / study.case_ctf(case + "s", "simulated")
        reports[case] = report
    return reports


def study_summary(study: Study) -> dict:
    model = study.model
    return {
        "schema_version": SCHEMA_VERSION,
        "sn_curve": {"k": study.sn.k, "C": study.sn.C},
        "closure_cf0": None if study.config.simulator.closure is None else study.config.simulator.closure.cf0,
        "retardation": {"rho": study.retardation.rho, "n_c": study.retardation.n_c, "r": study.retardation.r},
        "correction": None if model is None else {"beta": list(model.beta), "training_hash": model.training_hash},
        "log_error": {m: case_log_error(study.segments, m) for m in METHODS if m != "simulated"},
    }


def pdf_table(group: list[Segment], bins: int) -> list[tuple]:
    """Cycle-weighted densities of corrected and retarded amplitudes on shared bins."""
    ar = np.concatenate([s.sigma_ar for s in group])
    rar = np.concatenate([s.sigma_rar for s in group])
    w = np.concatenate([s.cycles.count for s in group])
    top = ar.max() if ar.max() > 0 else 1.0
    edges = np.linspace(0.0, top, bins + 1)
    width = np.diff(edges)
    h_ar, _ = np.histogram(ar, edges, weights=w)
    h_rar, _ = np.histogram(rar, edges, weights=w)
    d_ar = h_ar / (h_ar.sum() * width)
    d_rar = h_rar / (h_rar.sum() * width)
    return [
        (repr(float(lo)), repr(float(hi)), repr(float(a)), repr(float(b)))
        for lo, hi, a, b in zip(edges[:-1], edges[1:], d_ar, d_rar)
    ]


def write_study(study: Study, out) -> None:
    out = Path(out)
    reports = case_reports(study)
    for case, report in reports.items():
        write_json(out / "reports" / f"{case}.json", report)
        write_table(
            out / "plots" / f"{case}_pdf.csv",
            ("bin_lo_mpa", "bin_hi_mpa", "density_sigma_ar", "density_sigma_rar"),
            pdf_table(study.cases()[case], study.config.pdf_bins),
        )
    write_json(out / "summary.json", study_summary(study))
    if study.model is not None:
        write_model(out / "correction_model.json", study.model)


def run_pipeline(config: PipelineConfig, write_loads: bool = False) -> Study:
    loads = load_inputs(config)
    if write_loads:
        for load in loads:
            write_load(Path(config.out) / "loads" / f"{load.label}.csv", load)
    study = run_study(loads, config)
    write_study(study, config.out)
    return study
