"""Collect acceptance outcomes and print one line per criterion after the run."""

_CRITERIA: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.failed:
        key = props["criterion"]
        status = "PASS" if report.passed else "FAIL"
        # a failure in any phase sticks
        if _CRITERIA.get(key, ("", ""))[1] != "FAIL":
            _CRITERIA[key] = (props.get("title", ""), status)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=int):
        title, status = _CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:>2} {status}  {title}")
