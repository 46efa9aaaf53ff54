import pytest

from helpers import sample_mot
from sffgen.spec_model import Algorithm


@pytest.fixture
def mot_none():
    return sample_mot(Algorithm.NONE)


@pytest.fixture
def mot_bfd():
    return sample_mot(Algorithm.BFD)


@pytest.fixture
def mot_ilp():
    return sample_mot(Algorithm.ILP)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE_RESULTS
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        title, ok, seconds, limit = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(
            f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  "
            f"({seconds:.2f}s, limit {limit:g}s)")
