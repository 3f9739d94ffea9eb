import pytest

from teichfun.bowen_series import build_standard_system, conjugated_system
from teichfun.fuchsian import conjugate_rep, twist_deform
from teichfun.mobius import DiskMobius


@pytest.fixture(scope="session")
def std():
    return build_standard_system(2)


@pytest.fixture(scope="session")
def twisted04(std):
    return conjugated_system(std, twist_deform(std.rep, "a1", 0.4)[1])


@pytest.fixture(scope="session")
def twisted03(std):
    return conjugated_system(std, twist_deform(std.rep, "a1", 0.3)[1])


@pytest.fixture(scope="session")
def conj02(std):
    return conjugated_system(std, conjugate_rep(std.rep, DiskMobius(1.0, 0.2))[1])


_ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(_ACCEPTANCE_LINES[k])
