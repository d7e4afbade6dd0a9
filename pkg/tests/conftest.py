import numpy as np
import pytest

from nriap.measures import BaseMeasure, ExpConvKernel, IapSpec


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_alpha():
    """Uniform base measure on [0, 5] with total mass 5."""
    return BaseMeasure.uniform(0.0, 5.0, 5.0)


@pytest.fixture
def exp2():
    return ExpConvKernel(2.0)


@pytest.fixture
def example_spec(example_alpha):
    return IapSpec(example_alpha, 1.0)


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE.append((marker.args[0], marker.args[1], "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, verdict, detail in sorted(_ACCEPTANCE):
        line = f"criterion {number:>2} {verdict}  {title}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
