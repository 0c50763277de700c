import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)$")


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if m and rep.when == "call" or (m and outcome == "error"):
                detail = dict(getattr(rep, "user_properties", ())).get("detail", "")
                rows[int(m.group(1))] = ("PASS" if outcome == "passed" else "FAIL", detail)
    if not rows:
        return
    from test_acceptance import TITLES

    terminalreporter.section("acceptance criteria")
    for n in sorted(rows):
        status, detail = rows[n]
        terminalreporter.write_line(f"criterion {n} {status}: {TITLES[n]}  [{detail}]")
