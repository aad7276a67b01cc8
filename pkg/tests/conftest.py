import pytest

_LINES = {}


@pytest.fixture
def report():
    """``report(n, ok, detail)`` records the outcome line of acceptance criterion ``n``."""

    def _report(n, ok, detail=""):
        _LINES.setdefault(n, []).append((bool(ok), detail))
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_LINES):
        parts = _LINES[n]
        ok = all(p[0] for p in parts)
        detail = "; ".join(d for _, d in parts if d)
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
