import numpy as np
import pytest

from plapgraph.generators import lettered_path, star_graph
from plapgraph.graph import DirichletDomain

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "passed": True, "ran": False})
    if rep.when == "call":
        entry["ran"] = True
    if rep.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["passed"] and e["ran"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {e['title']}")


@pytest.fixture
def path3():
    g = lettered_path(3)
    return g, DirichletDomain(g, ["b"])


@pytest.fixture
def path4():
    g = lettered_path(4)
    return g, DirichletDomain(g, ["b", "c"])


@pytest.fixture
def star3():
    g = star_graph(3)
    return g, DirichletDomain(g, ["center"])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
