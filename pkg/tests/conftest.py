import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_CRITERIA = []


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" in props and (report.when == "call" or report.outcome != "passed"):
        if report.when == "call" or report.failed:
            _CRITERIA.append((props["criterion"], report.outcome, props.get("runtime_s")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, runtime in sorted(_CRITERIA, key=lambda c: int(c[0].split()[0])):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        t = "" if runtime is None else f" ({runtime:.1f} s)"
        terminalreporter.write_line(f"criterion {label}: {verdict}{t}")
