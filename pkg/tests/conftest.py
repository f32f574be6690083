import functools

import pytest

from exmono.chevalley import ChevalleyAlgebra


@functools.lru_cache(maxsize=None)
def algebra(label):
    return ChevalleyAlgebra.of_type(label)


@pytest.fixture
def alg_g2():
    return algebra("G2")


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record(criterion: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        results = ACCEPTANCE[key]
        ok = all(r[0] for r in results)
        details = "; ".join(d for _, d in results if d)
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {details}")
