import numpy as np
import pytest

from wannierlab.model import build_bloch, check_cs, preset
from wannierlab.spectral import lower_bands, spectral_projection


def sampler(name, bands=1, grid=64, **params):
    h = build_bloch(preset(name, **params))
    check_cs(h, grid)
    return spectral_projection(h, lower_bands(bands), grid)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def ssh12():
    return sampler("ssh", v=1.0, w=2.0, grid=256)


@pytest.fixture(scope="session")
def qwz():
    return sampler("qwz-pair", bands=2, grid=(64, 128))


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (z + z.conj().T)


#: one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
