import pytest

from pbrff.datasets import write_breast_cancer_csv


@pytest.fixture(scope="session")
def breast_csv(tmp_path_factory):
    pytest.importorskip("sklearn")
    path = tmp_path_factory.mktemp("data") / "breast.csv"
    write_breast_cancer_csv(path)
    return path


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
