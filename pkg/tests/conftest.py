import pytest

from ndcsim import spectral

ACCEPTANCE_FILE = "test_acceptance.py"


@pytest.fixture(scope="session")
def pm():
    pump = spectral.PumpSpec(408.2e-9)
    return spectral.PhaseMatching.from_dl(88.9e-15, 3e-3, pump, 896e-9)


@pytest.fixture(scope="session")
def gamma():
    return 0.04822


@pytest.fixture(scope="session")
def gauss_jsa(pm, gamma):
    width = spectral.gaussian_amplitude_fwhm(pm, gamma)
    return spectral.gaussian_jsa(pm, gamma, spectral.DetuningGrid.covering(width, 2**14))


@pytest.fixture(scope="session")
def a_param(pm, gamma):
    return gamma * pm.dl**2


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when != "call" or ACCEPTANCE_FILE not in report.nodeid:
        return
    detail = "; ".join(f"{k}={v}" for k, v in report.user_properties)
    name = report.nodeid.split("::", 1)[1]
    _acceptance.append(f"{'PASS' if report.passed else 'FAIL'} {name} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for line in _acceptance:
        terminalreporter.write_line(line)
    passed = sum(line.startswith("PASS") for line in _acceptance)
    terminalreporter.write_line(f"{passed}/{len(_acceptance)} acceptance checks passed")
