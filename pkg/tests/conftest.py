import re

import numpy as np
import pytest

from nogocool import DensityMatrix

_ACCEPTANCE: list[tuple[str, str]] = []


def random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.trace(rho).real)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["jit", "numpy"])
def kernel_mode(request, monkeypatch):
    if request.param == "numpy":
        monkeypatch.setenv("NOGO_COOL_DISABLE_JIT", "1")
    else:
        monkeypatch.delenv("NOGO_COOL_DISABLE_JIT", raising=False)
    return request.param


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)(\[.*\])?", report.nodeid)
    if m:
        name = f"criterion {m.group(1)} ({m.group(2).replace('_', ' ')})"
        if m.group(3):
            name += f" {m.group(3)}"
        _ACCEPTANCE.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_ACCEPTANCE, key=lambda x: int(x[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
