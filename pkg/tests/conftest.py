import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # oracles.py, stubs.py

_ACCEPTANCE = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")
    config.addinivalue_line("markers", "slow: runs for minutes")


@pytest.fixture(scope="session")
def small_corpus():
    """Five records per class with ground truth, shared across modules."""
    from ecgarrhythmia.synthgen import make_corpus

    return make_corpus(5, seed=101)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        if hasattr(rep, "wasxfail"):
            status = "FAIL"  # an expected failure is still a failed criterion
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE.append((str(marker.args[0]), marker.args[1], status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_ACCEPTANCE):
        line = f"criterion {number:3s} {status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
