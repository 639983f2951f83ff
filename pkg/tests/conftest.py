from collections import defaultdict


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion covered by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            num, title = mark.args
            item.user_properties.extend([("criterion", num), ("title", title)])


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, aggregated over its test cases."""
    outcomes: dict[int, list[str]] = defaultdict(list)
    titles: dict[int, str] = {}
    for key in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(key, []):
            if getattr(report, "when", "call") != "call" and key != "error":
                continue
            props = dict(getattr(report, "user_properties", ()))
            if "criterion" not in props:
                continue
            num = props["criterion"]
            titles[num] = props.get("title", "")
            if key != "passed":
                outcomes[num].append(report.nodeid.split("::")[-1])
            else:
                outcomes.setdefault(num, [])
    if not titles:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(titles):
        failed = outcomes[num]
        verdict = "PASS" if not failed else "FAIL"
        detail = "" if not failed else f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(f"criterion {num} {verdict}: {titles[num]}{detail}")
