import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    entry = _results.setdefault(
        int(m.group(1)), {"name": m.group(2).replace("_", " "), "ok": True, "detail": ""}
    )
    if report.failed:
        entry["ok"] = False
    for key, value in report.user_properties:
        if key == "detail":
            entry["detail"] = value


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_results):
        r = _results[num]
        status = "PASS" if r["ok"] else "FAIL"
        line = f"criterion {num:2d}: {status}  {r['name']}"
        if r["detail"]:
            line += f"  [{r['detail']}]"
        terminalreporter.write_line(line)
