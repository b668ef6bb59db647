"""Pipeline configuration loaded from JSON."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .fcp import ClosureParams, CrackGeometry, ParisLaw
from .loadgen import CASES
from .retardation import RetardationParams
from .surrogate import SurrogateConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LoadSettings:
    source: str = "generate"
    cases: tuple[str, ...] = ("D1", "D2", "L1", "L3")
    n_segments: int = 20
    turning_points: int = 10_000
    csv: tuple[str, ...] = ()
    surrogates: bool = True
    target_mean: float = 25.0
    target_std: float = 70.0

    def __post_init__(self):
        if self.source not in ("generate", "csv"):
            raise ConfigError(f"load source must be 'generate' or 'csv', not {self.source!r}")
        if self.source == "generate":
            unknown = [c for c in self.cases if c not in CASES]
            if unknown:
                raise ConfigError(f"unknown load case(s) {unknown}; choose from {sorted(CASES)}")
        elif not self.csv:
            raise ConfigError("csv load source needs at least one path")
        if self.n_segments < 1 or self.turning_points < 10:
            raise ConfigError("n_segments must be >= 1 and turning_points >= 10")
        if not self.target_std > 0:
            raise ConfigError("target_std must be positive")


@dataclass(frozen=True)
class SnSettings:
    """Explicit (k, C), or both None to calibrate against constant-amplitude
    simulator runs at ``cal_mean`` and the listed amplitudes."""

    k: float | None = None
    C: float | None = None
    cal_mean: float = 25.0
    cal_amplitudes: tuple[float, ...] = (60.0, 90.0, 120.0, 160.0, 200.0, 250.0)

    def __post_init__(self):
        if (self.k is None) != (self.C is None):
            raise ConfigError("give both S-N parameters k and C, or neither")
        if self.k is not None and not (self.k > 0 and self.C > 0):
            raise ConfigError("S-N parameters must be positive")
        if self.k is None and len(self.cal_amplitudes) < 2:
            raise ConfigError("S-N calibration needs at least two amplitudes")


@dataclass(frozen=True)
class CorrectionSettings:
    mode: str = "refit"
    model_path: str | None = None
    moment_scale: float = 70.0
    train: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.mode not in ("refit", "fixed", "file", "none"):
            raise ConfigError(f"unknown correction mode {self.mode!r}")
        if self.mode == "file" and not self.model_path:
            raise ConfigError("correction mode 'file' needs model_path")
        if not self.moment_scale > 0:
            raise ConfigError("moment_scale must be positive")


@dataclass(frozen=True)
class SimulatorSettings:
    geometry: CrackGeometry = CrackGeometry()
    growth: ParisLaw = ParisLaw()
    closure: ClosureParams | None = ClosureParams()
    fracture_toughness: float = 60.0
    max_blocks: int = 100_000


@dataclass(frozen=True)
class PipelineConfig:
    load: LoadSettings = LoadSettings()
    surrogate: SurrogateConfig = SurrogateConfig()
    walker_gamma: float = 0.5
    walker_operand: str = "mean"
    retardation: RetardationParams = RetardationParams()
    calibrate_retardation: bool = False
    calibrate_closure: bool = False
    alpha_cap: float = 10.0
    sn: SnSettings = SnSettings()
    correction: CorrectionSettings = CorrectionSettings()
    simulator: SimulatorSettings = SimulatorSettings()
    pdf_bins: int = 64
    seed: int = 0
    out: str = "out"
    jobs: int = 1

    def __post_init__(self):
        if not 0 <= self.walker_gamma <= 1:
            raise ConfigError("walker_gamma must lie in [0, 1]")
        if self.walker_operand not in ("mean", "amplitude"):
            raise ConfigError("walker_operand must be 'mean' or 'amplitude'")
        if self.seed < 0 or self.jobs < 1 or self.pdf_bins < 1:
            raise ConfigError("seed must be >= 0, jobs >= 1 and pdf_bins >= 1")

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)


def _build(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = dict(data)
    sim = dict(data.pop("simulator", None) or {})
    closure = sim.pop("closure", {})
    simulator = _build(
        SimulatorSettings,
        {
            **sim,
            "geometry": _build(CrackGeometry, sim.get("geometry"), "simulator.geometry"),
            "growth": _build(ParisLaw, sim.get("growth"), "simulator.growth"),
            "closure": None if closure is None else _build(ClosureParams, closure, "simulator.closure"),
        },
        "simulator",
    )
    sections = {
        "load": LoadSettings,
        "surrogate": SurrogateConfig,
        "retardation": RetardationParams,
        "sn": SnSettings,
        "correction": CorrectionSettings,
    }
    for key, cls in sections.items():
        data[key] = _build(cls, data.get(key), key)
    config = _build(PipelineConfig, {**data, "simulator": simulator}, "config")
    for path in config.load.csv if config.load.source == "csv" else ():
        if not Path(path).is_file():
            raise ConfigError(f"load file {path} does not exist")
    if config.correction.mode == "file" and not Path(config.correction.model_path).is_file():
        raise ConfigError(f"correction model {config.correction.model_path} does not exist")
    return config


def load_config(path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)
