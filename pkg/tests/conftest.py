import numpy as np
import pytest

_ACCEPTANCE = []


class AcceptanceLog:
    def __init__(self, name):
        self.name = name
        self.detail = ""

    def check(self, ok: bool, detail: str):
        self.detail = detail
        _ACCEPTANCE.append((self.name, bool(ok), detail))
        assert ok, f"{self.name}: {detail}"

    def skip(self, reason: str):
        _ACCEPTANCE.append((self.name, None, reason))
        pytest.skip(reason)


@pytest.fixture
def criterion(request):
    """Records one acceptance line per test; printed in the terminal summary."""
    return AcceptanceLog(request.node.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        tag = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{tag}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
