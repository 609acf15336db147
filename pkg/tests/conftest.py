import pytest

from hankel_asym.weights import WeightSpec

_CRITERIA = {}


def record_criterion(number: int, passed: bool, detail: str):
    _CRITERIA[number] = (passed, detail)
    print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        passed, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def unit0():
    return WeightSpec(0.0)


@pytest.fixture
def rational1():
    return WeightSpec(0.0, "rational_exp", {"alpha": 1.0})


@pytest.fixture
def gauss_half():
    return WeightSpec(0.0, "gauss_exp", {"theta": 0.5})


BUILTIN = [
    ("unit", {}),
    ("rational_exp", {"alpha": 1.0}),
    ("rational_exp", {"alpha": -0.5}),
    ("gauss_exp", {"theta": 0.5}),
    ("gauss_exp", {"theta": -0.5}),
]
