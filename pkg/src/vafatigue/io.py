"""CSV/JSON readers and writers for the interchange formats."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .correction import CorrectionModel
from .fcp import SimResult
from .loadgen import LoadHistory
from .rainflow import RainflowSet
from .retardation import OverloadSet, RetardedAmplitudes

SCHEMA_VERSION = 1


class DataError(ValueError):
    """Malformed or inconsistent input file."""


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path: Path, header) -> list[list[str]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != list(header):
        raise DataError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def write_json(path: Path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def read_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


LOAD_HEADER = ("index", "stress_mpa")


def write_load(path, load: LoadHistory) -> None:
    path = Path(path)
    _write_rows(path, LOAD_HEADER, ((i, repr(float(s))) for i, s in enumerate(load.samples)))
    write_json(
        path.with_suffix(".json"),
        {"label": load.label, "dt": load.dt, "source": load.source, "seed": load.seed},
    )


def read_load(path) -> LoadHistory:
    """Read a load CSV; the JSON sidecar is optional (dt defaults to 1)."""
    path = Path(path)
    rows = _read_rows(path, LOAD_HEADER)
    try:
        samples = np.array([float(r[1]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: bad stress value: {exc}") from exc
    meta = read_json(path.with_suffix(".json")) if path.with_suffix(".json").exists() else {}
    try:
        return LoadHistory(
            samples,
            float(meta.get("dt", 1.0)),
            meta.get("label", path.stem),
            meta.get("source", "external"),
            meta.get("seed"),
        )
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


RAINFLOW_HEADER = ("onset_idx", "end_idx", "range_mpa", "mean_mpa", "count")


def write_rainflow(path, cycles: RainflowSet) -> None:
    """Cycle table plus a sidecar holding the reversal values it indexes."""
    path = Path(path)
    rows = (
        (int(o), int(e), repr(float(r)), repr(float(m)), repr(float(c)))
        for o, e, r, m, c in zip(cycles.onset, cycles.end, cycles.range, cycles.mean, cycles.count)
    )
    _write_rows(path, RAINFLOW_HEADER, rows)
    write_json(path.with_suffix(".json"), {"reversals": [float(v) for v in cycles.values]})


def read_rainflow(path) -> RainflowSet:
    path = Path(path)
    rows = _read_rows(path, RAINFLOW_HEADER)
    cols = list(zip(*rows)) if rows else [()] * 5
    values = np.array(read_json(path.with_suffix(".json"))["reversals"], dtype=float)
    return RainflowSet(
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype=np.int64),
        np.array(cols[2], dtype=float),
        np.array(cols[3], dtype=float),
        np.array(cols[4], dtype=float),
        values,
    )


OVERLOAD_HEADER = ("reversal_idx", "class", "sigma_ol_mpa", "alpha")


def write_overloads(path, overloads: OverloadSet) -> None:
    rows = (
        (int(i), k, repr(float(s)), repr(float(a)))
        for i, k, s, a in zip(overloads.index, overloads.kind, overloads.sigma_ol, overloads.alpha)
    )
    _write_rows(Path(path), OVERLOAD_HEADER, rows)


def read_overloads(path) -> OverloadSet:
    rows = _read_rows(Path(path), OVERLOAD_HEADER)
    cols = list(zip(*rows)) if rows else [()] * 4
    return OverloadSet(
        np.array(cols[0], dtype=np.int64),
        np.array(cols[1], dtype="<U1"),
        np.array(cols[2], dtype=float),
        np.array(cols[3], dtype=float),
    )


RETARDED_HEADER = ("onset_idx", "sigma_ar_mpa", "sigma_rar_mpa", "active_overload")


def write_retarded(path, cycles: RainflowSet, retarded: RetardedAmplitudes) -> None:
    rows = (
        (int(o), repr(float(a)), repr(float(r)), int(k))
        for o, a, r, k in zip(cycles.onset, retarded.sigma_ar, retarded.sigma_rar, retarded.active_overload)
    )
    _write_rows(Path(path), RETARDED_HEADER, rows)


def write_crack_history(path, result: SimResult) -> None:
    rows = ((int(c), repr(float(a))) for c, a in result.crack_history)
    _write_rows(Path(path), ("cycle", "a_m"), rows)


def sim_result_dict(label: str, result: SimResult) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": label,
        "ctf_cycles": result.ctf,
        "termination": result.termination,
        "blocks": result.blocks,
        "final_crack_m": result.final_crack,
    }


def write_model(path, model: CorrectionModel) -> None:
    write_json(
        Path(path),
        {
            "schema_version": SCHEMA_VERSION,
            "feature_spec": model.feature_spec,
            "beta": list(model.beta),
            "training_hash": model.training_hash,
        },
    )


def read_model(path) -> CorrectionModel:
    obj = read_json(path)
    try:
        return CorrectionModel(tuple(float(b) for b in obj["beta"]), obj["feature_spec"], obj["training_hash"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed correction model: {exc}") from exc


def write_table(path, header, rows) -> None:
    _write_rows(Path(path), header, rows)
