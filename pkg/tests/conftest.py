import pytest

ACCEPT_LINES: list[str] = []


@pytest.fixture
def accept():
    """``accept(n, ok, detail)`` records one PASS/FAIL line and returns ``ok``."""
    def record(n: int, ok: bool, detail: str) -> bool:
        ACCEPT_LINES.append(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        print(ACCEPT_LINES[-1])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPT_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPT_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
