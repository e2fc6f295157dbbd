import pytest

from evciplan.network import ieee33

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def net():
    return ieee33()


@pytest.fixture(scope="session")
def oracle(net):
    """Full 5 x 1000 kW enumeration on the bundled feeder."""
    from evciplan.siting import enumerate_all

    return enumerate_all(net, 1000.0, 5)


@pytest.fixture
def record():
    def _record(line: str):
        ACCEPTANCE_LINES.append(line)
        print(line)
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
