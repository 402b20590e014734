import pytest

_ACCEPTANCE = {}


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion."""

    def __init__(self, number):
        self.number = number
        self.checks = []

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))
        status = "PASS" if ok else "FAIL"
        print(f"criterion {self.number} [{status}] {detail}")
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for ok, _ in self.checks)

    def assert_all(self):
        failed = [d for ok, d in self.checks if not ok]
        assert not failed, "; ".join(failed)


@pytest.fixture
def criterion(request):
    def make(number):
        log = AcceptanceLog(number)
        _ACCEPTANCE[number] = log
        return log
    return make


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        log = _ACCEPTANCE[number]
        status = "PASS" if log.passed else "FAIL"
        detail = "; ".join(d for _, d in log.checks)
        terminalreporter.write_line(f"{status} criterion {number:2d}: {detail}")
