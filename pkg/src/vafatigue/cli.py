"""Command-line driver.

Exit codes: 0 success, 2 configuration or usage error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import correction as corr
from . import io
from . import pipeline as pl
from .config import ConfigError, PipelineConfig, load_config
from .fcp import SimResult
from .loadgen import CapacityError, DegenerateInput

log = logging.getLogger("vafatigue")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    return config.replace(**changes) if changes else config


def _inputs(args) -> list:
    with pl.stage("read"):
        return [io.read_load(p) for p in args.inputs]


def cmd_generate(args, config: PipelineConfig) -> None:
    loads = pl.load_inputs(config.replace(load=dataclasses.replace(config.load, surrogates=False)))
    for load in loads:
        io.write_load(Path(config.out) / f"{load.label}.csv", load)
    log.info("wrote %d load segments to %s", len(loads), config.out)


def cmd_surrogate(args, config: PipelineConfig) -> None:
    for load in pl.make_surrogates(_inputs(args), config):
        io.write_load(Path(config.out) / f"{load.label}.csv", load)


def cmd_count(args, config: PipelineConfig) -> None:
    for load in _inputs(args):
        seg = pl.analyse(load, config)
        io.write_rainflow(Path(config.out) / f"{load.label}_rainflow.csv", seg.cycles)


def cmd_retard(args, config: PipelineConfig) -> None:
    for load in _inputs(args):
        seg = pl.analyse(load, config)
        with pl.stage("retard"):
            retarded = pl.apply_retardation(seg.cycles, seg.sigma_ar, seg.overloads, config.retardation)
        out = Path(config.out)
        io.write_overloads(out / f"{load.label}_overloads.csv", seg.overloads)
        io.write_retarded(out / f"{load.label}_retarded.csv", seg.cycles, retarded)


def _life_dict(label: str, est) -> dict:
    return {
        "label": label,
        "method": est.method,
        "nu_peak": est.rate,
        "lambda_ol": est.lambda_ol,
        "damage_per_block": est.damage_per_block,
        "ctf_cycles": est.ctf,
    }


def cmd_estimate(args, config: PipelineConfig) -> None:
    sn = pl.calibrate_sn(config)
    for load in _inputs(args):
        seg = pl.analyse(load, config)
        pl.estimate(seg, sn, config.retardation, config)
        model = corr.CorrectionModel(corr.FIXED_BETA) if config.correction.mode == "fixed" else None
        if config.correction.mode == "file":
            model = io.read_model(config.correction.model_path)
        pl.apply_correction(seg, model, sn)
        rows = [_life_dict(load.label, seg.estimates[m]) for m in pl.METHODS if m != "simulated"]
        io.write_json(Path(config.out) / f"{load.label}_life.json", {"schema_version": io.SCHEMA_VERSION, "estimates": rows})


def cmd_simulate(args, config: PipelineConfig) -> None:
    for load in _inputs(args):
        seg = pl.analyse(load, config)
        result: SimResult = pl.run_simulator(seg.reversals, config)
        out = Path(config.out)
        io.write_json(out / f"{load.label}_sim.json", io.sim_result_dict(load.label, result))
        io.write_crack_history(out / f"{load.label}_crack.csv", result)


def cmd_fit(args, config: PipelineConfig) -> None:
    """Refit the correction model from case reports written by ``pipeline``."""
    train = set(args.train) if args.train else None
    moments, targets = [], []
    for path in args.inputs:
        report = io.read_json(path)
        if "segments" not in report:
            raise pl.StageError("fit", io.DataError(f"{path} is not a case report"))
        if train is not None and report["case"] not in train:
            continue
        for seg in report["segments"]:
            if seg["moments"] is not None:
                moments.append(seg["moments"])
                targets.append(seg["ctf"]["retarded"] / seg["ctf"]["simulated"])
    with pl.stage("fit"):
        if len(targets) < 11:
            raise CapacityError(f"at least 11 training rows are needed, got {len(targets)}")
        model = corr.fit_correction(moments, targets)
    io.write_model(Path(config.out) / "correction_model.json", model)


def cmd_pipeline(args, config: PipelineConfig) -> None:
    study = pl.run_pipeline(config, write_loads=args.write_loads)
    summary = pl.study_summary(study)
    for method, err in summary["log_error"].items():
        log.info("mean |log(CTF/CTF_sim)| %-20s %.4f", method, err)


COMMANDS = {
    "generate": (cmd_generate, "generate chaotic load segments"),
    "surrogate": (cmd_surrogate, "make IAAFT surrogates of load CSVs"),
    "count": (cmd_count, "rainflow-count load CSVs"),
    "retard": (cmd_retard, "identify overloads and retarded amplitudes"),
    "estimate": (cmd_estimate, "life estimates for load CSVs"),
    "simulate": (cmd_simulate, "crack-growth simulation for load CSVs"),
    "fit": (cmd_fit, "refit the correction model from case reports"),
    "pipeline": (cmd_pipeline, "run the full study"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes for case-level parallelism")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vafatigue", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name in ("surrogate", "count", "retard", "estimate", "simulate"):
            p.add_argument("inputs", nargs="+", help="load CSV files")
        elif name == "fit":
            p.add_argument("inputs", nargs="+", help="case report JSON files")
            p.add_argument("--train", nargs="+", help="case names to train on (default: all)")
        elif name == "pipeline":
            p.add_argument("--write-loads", action="store_true", help="also write the input load CSVs")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = _config(args)
        COMMANDS[args.command][0](args, config)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except pl.StageError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (io.DataError, DegenerateInput, CapacityError) as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
