import os

import pytest

DATA = os.path.join(os.path.dirname(__file__), "data")
GOLDEN = os.path.join(DATA, "diamond_d5.crumble")

# criterion number -> (name, status, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


@pytest.fixture(scope="session")
def golden_text() -> str:
    with open(GOLDEN, encoding="utf-8") as fh:
        return fh.read()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, status, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k} {name}: {status} {detail}".rstrip())
