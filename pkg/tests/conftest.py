"""Collects the acceptance results and prints one verdict line per criterion."""

_VERDICTS = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    failed = report.failed
    if report.when == "call" or (failed and props["criterion"] not in _VERDICTS):
        _VERDICTS[props["criterion"]] = ("FAIL" if failed else "PASS", props.get("detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_VERDICTS):
        verdict, detail = _VERDICTS[key]
        terminalreporter.write_line(f"{verdict}  criterion {key}: {detail}")
