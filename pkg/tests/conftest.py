import pytest

from cclab import epr_model


@pytest.fixture(scope="session")
def default_model():
    """Model at the default ModelSpec; negative pairs are best-effort (see README)."""
    return epr_model.build_model_best_effort(epr_model.ModelSpec())


@pytest.fixture(scope="session")
def positive_model():
    return epr_model.build_model(epr_model.ModelSpec(positive_only=True))


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _ACCEPTANCE.append((value, report.outcome, dict(report.user_properties).get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}  {detail}")
