import pytest

_OUTCOMES = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        ok = report.outcome == "passed"
        _OUTCOMES.setdefault(marker.args[0], []).append((item.name, ok, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        results = _OUTCOMES[n]
        failed = [name for name, _, outcome in results if outcome == "failed"]
        skipped = [name for name, _, outcome in results if outcome == "skipped"]
        status = "FAIL" if failed else ("NOT RUN" if skipped else "PASS")
        passed = sum(ok for _, ok, _ in results)
        detail = f"{passed}/{len(results)} tests passed"
        if failed:
            detail += "; failing: " + ", ".join(failed)
        if skipped:
            detail += "; skipped: " + ", ".join(skipped)
        terminalreporter.write_line(f"criterion {n}: {status} ({detail})")
