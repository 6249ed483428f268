import pytest

_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict, printed again in the session summary."""

    def record(number, title, passed, detail=""):
        verdict = "PASS" if passed else "FAIL"
        line = f"{verdict}  criterion {number}: {title}" + (f" | {detail}" if detail else "")
        _ACCEPTANCE[number] = line
        print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
