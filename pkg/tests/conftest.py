import sys

import pytest

from qmarkov import Charlier, Hahn, Krawtchouk, Meixner, QHahn

DESK = {
    "qHahn": lambda: QHahn(6, 0.3, 0.4, 0.2, 0.5),
    "Hahn": lambda: Hahn(6, 1.5, 0.7, 2.0),
    "Krawtchouk": lambda: Krawtchouk(8, 0.3, 0.6),
    "Charlier": lambda: Charlier(0.4, 0.5, eps_tail=1e-12),
    "Meixner": lambda: Meixner(1.2, 0.8, 0.4, eps_tail=1e-12),
}
FINITE = ["qHahn", "Hahn", "Krawtchouk"]
TRUNCATED = ["Charlier", "Meixner"]

_cache = {}


def desk_system(tag):
    if tag not in _cache:
        _cache[tag] = DESK[tag]().build()
    return _cache[tag]


@pytest.fixture(params=list(DESK))
def any_system(request):
    return desk_system(request.param)


@pytest.fixture(params=FINITE)
def finite_system(request):
    return desk_system(request.param)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.summary_lines():
        terminalreporter.write_line(line)
