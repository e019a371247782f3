import numpy as np
import pytest

from gstar import AtomicMeasure, KernelSpec, LambdaParams, SampledFunction

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")
    config.addinivalue_line("markers", "slow: longer-running suite")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _criteria[number] = (title, rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, detail = _criteria[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def detail(record_property):
    """Attach a short summary string to the acceptance line."""
    def put(text):
        record_property("detail", text)
    return put


@pytest.fixture
def poisson():
    return KernelSpec(m=1.0, alpha=1.0, kappa=2)


@pytest.fixture
def lam8():
    return LambdaParams(8.0, 1.0)


def random_instance(rng, size, n=1, kappa=2, signed=True):
    pts = rng.uniform(0.0, 1.0, size=(size, n))
    mu = AtomicMeasure(pts, rng.uniform(0.2, 1.0, size))
    fs = []
    for _ in range(kappa):
        v = rng.standard_normal(mu.size)
        fs.append(SampledFunction(mu, v if signed else np.abs(v)))
    return mu, fs
