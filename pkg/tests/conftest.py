import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def phi4():
    from quantaub.testfn import build_phi_n

    return build_phi_n(4, 0.5)


@pytest.fixture(scope="session")
def phi4_even():
    from quantaub.testfn import build_phi_n

    return build_phi_n(4, 0.5, parity="even")


@pytest.fixture(scope="session")
def be_phi():
    from quantaub.testfn import berry_esseen_phi

    return berry_esseen_phi()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
