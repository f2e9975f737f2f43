import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sstboot.core import TimeSeries
from sstboot.pipeline import PipelineConfig

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_line(request, capsys):
    """Print one PASS/FAIL line immediately and again in the terminal summary."""

    def emit(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
        request.config.stash[_ACCEPTANCE].append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sim_rate():
    return float(np.sqrt(2048))


@pytest.fixture(scope="session")
def default_pipe(sim_rate):
    return PipelineConfig().build(sim_rate)


def tone(n=2048, f0=4.0, amp=1.0, rate=None, phase0=0.0):
    rate = rate or float(np.sqrt(n))
    ts = TimeSeries(np.zeros(n), rate, 1.0 / rate)
    return ts.with_samples(amp * np.cos(2 * np.pi * f0 * ts.times + phase0))
