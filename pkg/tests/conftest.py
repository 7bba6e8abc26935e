import pytest

_CRITERIA: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def criterion():
    """Record ``(number, part, passed, detail)`` for the acceptance summary."""

    def record(number: int, passed: bool, detail: str, part: str = "") -> bool:
        _CRITERIA.setdefault(number, []).append((part, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        parts = _CRITERIA[number]
        ok = all(p for _, p, _ in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}")
        for part, passed, detail in parts:
            label = f"[{part}] " if part else ""
            terminalreporter.write_line(f"    {label}{'PASS' if passed else 'FAIL'}: {detail}")
