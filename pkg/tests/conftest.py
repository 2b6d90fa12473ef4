"""Collects one verdict line per acceptance criterion and prints them after the run."""

VERDICTS: list[str] = []


def record(number: int, title: str, ok: bool, detail: str = "") -> None:
    VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}" + (f"  [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
