import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "numeric",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("numeric")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE: dict[str, list[bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[1].split("[")[0]
    _ACCEPTANCE.setdefault(name, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        runs = _ACCEPTANCE[name]
        number, _, label = name[len("test_criterion_"):].partition("_")
        status = "PASS" if all(runs) else "FAIL"
        terminalreporter.write_line(
            f"criterion {int(number):2d} {label.replace('_', ' '):28s} {status} ({sum(runs)}/{len(runs)} cases)"
        )
