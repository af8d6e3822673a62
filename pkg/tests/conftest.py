import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def cn(rng, shape, var=1.0):
    """Reference CN(0, var) sampler, independent of the package's."""
    return np.sqrt(var / 2) * (rng.normal(size=shape) + 1j * rng.normal(size=shape))


_verdicts = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    if rep.when == "call" or rep.failed or rep.skipped:
        detail = dict(item.user_properties).get("detail", "")
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        if _verdicts.get(n, ("PASS",))[0] == "PASS" or status == "FAIL":
            _verdicts[n] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_verdicts):
        status, title, detail = _verdicts[n]
        line = f"[{status}] criterion {n}: {title}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
