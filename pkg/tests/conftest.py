import pytest

from phavforge.scenario import default_context

_criteria = {}  # number -> [title, all_passed]


@pytest.fixture(scope="session")
def ctx():
    return default_context()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark:
            number, title = mark.args
            _criteria.setdefault(number, [title, None])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number = mark.args[0]
    entry = _criteria[number]
    failed = report.failed or (report.when == "call" and report.skipped)
    if failed:
        entry[1] = False
    elif report.when == "call" and entry[1] is None:
        entry[1] = True


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        status = "PASS" if ok else ("FAIL" if ok is False else "NOT RUN")
        terminalreporter.write_line(f"criterion {number}: {status}  {title}")
