import re


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    results = {}
    for status, flag in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if getattr(rep, "when", "call") not in ("call", "collect"):
                continue
            m = re.search(r"criterion_(\d+)", nodeid)
            if m:
                results[int(m.group(1))] = (flag, nodeid.split("::")[-1])
    if not results:
        return
    tw = terminalreporter
    tw.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        flag, name = results[num]
        tw.write_line("CRITERION %2d: %s  (%s)" % (num, flag, name))
