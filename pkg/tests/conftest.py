import pytest

# criterion label -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[label]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


@pytest.fixture
def record():
    def rec(label, ok, detail):
        ACCEPTANCE[label] = (bool(ok), detail)
        print(f"\n{'PASS' if ok else 'FAIL'}  {label}: {detail}")
        return ok
    return rec
