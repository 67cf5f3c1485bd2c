import pytest

from crfund import crmodels


@pytest.fixture(scope="session")
def sp4():
    return crmodels.load_model("sp4")


@pytest.fixture(scope="session")
def g2():
    return crmodels.load_model("g2")


@pytest.fixture(scope="session")
def sp6():
    return crmodels.load_model("sp6")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
