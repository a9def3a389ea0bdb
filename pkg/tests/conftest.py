import numpy as np
import pytest

from thermopan.imgio import PairedSample, gen_synthetic_dataset
from thermopan.preprocess import preprocess_frame

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        detail = report.capstdout.strip().splitlines()
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, detail[-1] if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _acceptance:
        line = f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def preprocessed(samples):
    return [PairedSample(preprocess_frame(s.thermal), s.visible, s.id) for s in samples]


@pytest.fixture(scope="session")
def synthetic16():
    return preprocessed(gen_synthetic_dataset(7, 16, 64, 64))
