import pytest

from acceptance_report import REPORT


def pytest_terminal_summary(terminalreporter):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(REPORT, key=lambda c: (int(c.split(".")[0]), c)):
        clauses = REPORT[crit]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({info})" for name, good, info in clauses)
        terminalreporter.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} | {detail}")


@pytest.fixture
def gf2():
    from sparse_rlnc.gf import field_new
    return field_new(1)


@pytest.fixture
def gf16():
    from sparse_rlnc.gf import field_new
    return field_new(4)
