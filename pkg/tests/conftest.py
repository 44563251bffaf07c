import pytest

ACCEPTANCE = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call ``criterion(name, passed, detail)`` once per test."""
    entry = {}

    def record(name, passed, detail=""):
        entry.update(name=name, passed=bool(passed), detail=detail)

    yield record
    if entry:
        # a test that records PASS but then fails an assertion still shows as FAIL
        failed = getattr(request.node, "rep_call", None)
        if failed is not None and failed.failed:
            entry["passed"] = False
        ACCEPTANCE.append(entry)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE:
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {e['name']}: {e['detail']}")
