import _acceptance_log


def pytest_terminal_summary(terminalreporter):
    res = _acceptance_log.RESULTS
    if not res:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(res):
        title, ok, detail = res[n]
        tr.write_line(f"criterion {n:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
    for text in _acceptance_log.NOTES:
        tr.write_line(f"supplementary: {text}")
    tr.write_line(f"{sum(ok for _, ok, _ in res.values())}/{len(res)} criteria passed")
