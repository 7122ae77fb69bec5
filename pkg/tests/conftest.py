import pytest

_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(key: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE[key] = (bool(passed), detail)
        print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {key}: {detail}")
        return passed

    return record


def _sort_key(key: str):
    head = key.rstrip("abcdefghijklmnopqrstuvwxyz")
    return int(head), key[len(head):]


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=_sort_key):
        passed, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<3} {'PASS' if passed else 'FAIL'}  {detail}")
