import pytest

from qclca.dataset import REFERENCE_DIR, load_dataset

SCENARIO_IDS = ("A", "A'", "B", "B'")


@pytest.fixture(scope="session")
def reference():
    return load_dataset(REFERENCE_DIR)


@pytest.fixture(scope="session")
def engine(reference):
    return reference.engine()


@pytest.fixture(scope="session")
def scenarios(reference):
    return {sid: reference.scenario(sid) for sid in SCENARIO_IDS}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
