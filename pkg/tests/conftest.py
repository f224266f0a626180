import numpy as np
import pytest

FOUR_ARMS = [0.1, 0.5, 0.6, 0.9]
TEAM_MATRIX = [[0.2, 0.25, 0.3], [0.4, 0.6, 0.5], [0.7, 0.9, 0.8]]


@pytest.fixture
def four_arms():
    return np.array(FOUR_ARMS)


@pytest.fixture
def team_matrix():
    return np.array(TEAM_MATRIX)


_verdicts = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        _verdicts[name] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_verdicts):
        outcome, detail = _verdicts[name]
        number, label = name[len("test_criterion_"):].split("_", 1)
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {int(number):2d} {label.replace('_', ' ')}: {status}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
