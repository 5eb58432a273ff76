import numpy as np
import pytest
from hypothesis import settings

from singlefork import Empirical, Pareto

# fixed example streams keep every run reproducible
settings.register_profile("repro", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repro")

_criteria: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    num, text = mark.args
    entry = _criteria.setdefault(num, {"text": text, "passed": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed or rep.skipped:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        e = _criteria[num]
        status = "PASS" if e["passed"] and e["tests"] else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {status}  {e['text']}")


@pytest.fixture(scope="session")
def pareto_surrogate():
    """Empirical model of 10^5 draws from Pareto(2, 2)."""
    return Empirical(Pareto(2.0, 2.0).sample(np.random.default_rng(20240), 100_000))


@pytest.fixture(scope="session")
def bimodal_surrogate():
    """Bounded two-mode execution times: most tasks short, a minority long."""
    rng = np.random.default_rng(20241)
    u = rng.random(100_000)
    x = np.where(u < 0.8, rng.uniform(1.0, 1.5, u.size), rng.uniform(4.0, 5.0, u.size))
    return Empirical(x)
