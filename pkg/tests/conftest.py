import pytest

_ACCEPTANCE = {}


class _Recorder:
    def __call__(self, number: int, ok: bool, detail: str, info: str = "") -> None:
        _ACCEPTANCE[number] = (bool(ok), detail, info)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        if info:
            print(f"              info: {info}")
        assert ok, detail


@pytest.fixture
def criterion():
    """Record an acceptance verdict; the summary prints one line per criterion."""
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, detail, info = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        if info:
            terminalreporter.write_line(f"              info: {info}")
