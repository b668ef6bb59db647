import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vafatigue import loadgen, pipeline  # noqa: E402
from vafatigue.config import CorrectionSettings, PipelineConfig  # noqa: E402

SYNTHETIC = ("D1", "D2", "L1", "L3")
PROXY_SNR_DB = (40.0, 30.0, 20.0, 15.0, 10.0)
TRAIN = SYNTHETIC + tuple(c + "s" for c in SYNTHETIC) + ("C1", "C3", "R1", "R2")
VALIDATE = ("C2", "C4", "C5", "R3", "R4", "R5")
SEED = 2024

# criterion number -> (passed, detail); printed in the terminal summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
TIMINGS: dict[str, float] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")


def _timed(key, fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    TIMINGS[key] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def chaotic_loads():
    """20 normalized segments of ~1e4 turning points for each chaotic case."""
    return _timed("generate", loadgen.generate_cases, SYNTHETIC, 20, 10_000, SEED)


@pytest.fixture(scope="session")
def base_config():
    return PipelineConfig(seed=SEED, correction=CorrectionSettings(train=TRAIN))


@pytest.fixture(scope="session")
def surrogate_loads(chaotic_loads, base_config):
    flat = [l for case in SYNTHETIC for l in chaotic_loads[case]]
    surrogates = _timed("surrogates", pipeline.make_surrogates, flat, base_config)
    out: dict[str, list] = {}
    for s in surrogates:
        out.setdefault(pipeline.case_name(s), []).append(s)
    return out


@pytest.fixture(scope="session")
def proxy_loads(base_config):
    """Stand-ins for measured loads: noisy Duffing-velocity segments (C1..C5)
    and their surrogates (R1..R5)."""
    base = loadgen.generate_cases(("D2",), 5, 10_000, SEED + 1)["D2"]
    chaotic = [
        loadgen.add_noise(b, snr, SEED + i, f"C{i + 1}-00")
        for i, (b, snr) in enumerate(zip(base, PROXY_SNR_DB))
    ]
    chaotic = [loadgen.LoadHistory(c.samples, c.dt, c.label, "experimental", c.seed) for c in chaotic]
    surrogates = pipeline.make_surrogates(chaotic, base_config.replace(seed=SEED + 1))
    surrogates = [
        loadgen.LoadHistory(s.samples, s.dt, f"R{i + 1}-00", "experimental", s.seed) for i, s in enumerate(surrogates)
    ]
    return chaotic + surrogates


@pytest.fixture(scope="session")
def study(chaotic_loads, surrogate_loads, proxy_loads, base_config):
    loads = [l for c in SYNTHETIC for l in chaotic_loads[c]]
    loads += [l for c in SYNTHETIC for l in surrogate_loads[c + "s"]]
    return _timed("study", pipeline.run_study, loads + proxy_loads, base_config)
