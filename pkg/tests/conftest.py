import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from caralab import domains as dz

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for name, value in report.user_properties:
        if name == "criterion":
            prev = _CRITERIA.get(value, "PASS")
            _CRITERIA[value] = "PASS" if (prev == "PASS" and report.passed) else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda s: int(s.split(".")[0])):
        terminalreporter.write_line(f"{_CRITERIA[key]}  criterion {key}")


@pytest.fixture(scope="session")
def zoo_entries():
    from caralab.cli import zoo_text

    return dz.parse_domain_spec(zoo_text())


@pytest.fixture(scope="session")
def suite_report(zoo_entries):
    """The default suite at default settings, shared by the acceptance criteria."""
    from caralab.harness import run_suite

    return run_suite(zoo_entries, seed=0, N=10**6, budget=20_000)


def random_directions(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
