"""Roll acceptance outcomes up into one PASS/FAIL line per criterion."""

from collections import OrderedDict

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            entry = _CRITERIA.setdefault(number, {"title": title, "failed": [], "count": 0})
            entry["count"] += 1
            item.user_properties.append(("criterion", number))


def pytest_runtest_logreport(report):
    number = dict(report.user_properties).get("criterion")
    if number is None:
        return
    if report.failed or (report.when == "call" and report.skipped):
        _CRITERIA[number]["failed"].append(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        verdict = "FAIL" if entry["failed"] else "PASS"
        terminalreporter.write_line(
            f"[{verdict}] criterion {number}: {entry['title']} ({entry['count']} checks)"
        )
