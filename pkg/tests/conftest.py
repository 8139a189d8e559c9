import numpy as np
import pytest

from riscap.channel import CovarianceSet, ScenarioConfig
from riscap.covariance import PlanarGrid
from riscap.scenarios import RisSpec, build_scenario

WAVELENGTH = 0.12


def white_config(Nt, Nr, rho, seed=0):
    """Direct link only, identity covariances."""
    cov = CovarianceSet(np.eye(Nr), np.eye(Nt))
    return ScenarioConfig(rho=rho, gamma=[], covariances=cov, direct_link=True, seed=seed)


def ris_config(Nt, Nr, side, sigma_deg, theta_in=30.0, theta_out=70.0, rho=10.0,
               seed=0, spacing=0.5, sigma_out_deg=None):
    """One square RIS with identity TX/RX covariances and no direct path."""
    grid = PlanarGrid.square(side, spacing * WAVELENGTH)
    s_out = sigma_deg if sigma_out_deg is None else sigma_out_deg
    spec = RisSpec(grid, np.radians(theta_in), np.radians(theta_out),
                   np.radians(sigma_deg), np.radians(s_out))
    return build_scenario(Nt, Nr, [spec], rho, WAVELENGTH, direct_link=False, seed=seed)


def random_psd(rng, n, trace=None, rank=None, real=False):
    m = rank or n
    A = rng.standard_normal((n, m))
    if not real:
        A = A + 1j * rng.standard_normal((n, m))
    S = A @ A.conj().T
    if trace is not None:
        S *= trace / np.trace(S).real
    return S


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    def record(number, passed, detail):
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
