import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=100,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
# property test name -> passed; filled while test_properties runs
PROPERTY_OUTCOMES: dict[str, bool] = {}


def pytest_collection_modifyitems(config, items):
    # acceptance last, so criterion 12 can reuse the property-suite outcomes
    items.sort(key=lambda it: it.nodeid.startswith("tests/test_acceptance.py"))


def pytest_runtest_logreport(report):
    if "test_properties.py::" in report.nodeid and report.when == "call":
        PROPERTY_OUTCOMES[report.nodeid.split("::")[-1]] = report.passed
    elif "test_properties.py::" in report.nodeid and report.failed:
        PROPERTY_OUTCOMES[report.nodeid.split("::")[-1]] = False


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
