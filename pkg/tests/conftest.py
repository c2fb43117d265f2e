import pytest

from tessellation_codes.catalog import builtin_codes, load_entry
from tessellation_codes.encoder import build_codewords

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def entries():
    return {e.name: e for e in builtin_codes()}


@pytest.fixture(scope="session")
def codes(entries):
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = build_codewords(entries[name].spec)
        return cache[name]
    return get


@pytest.fixture(scope="session")
def entry():
    return load_entry


@pytest.fixture
def acceptance():
    def record(n: int, ok: bool, detail: str):
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"ACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
