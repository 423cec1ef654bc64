import numpy as np
import pytest
from hypothesis import settings

from bpns.spectral import GridSpec, SpectralField, band_profile, random_field

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

TWO_PI = 2 * np.pi


@pytest.fixture
def grid16():
    return GridSpec(TWO_PI, 16)


@pytest.fixture
def grid32():
    return GridSpec(TWO_PI, 32)


def rand(grid, seed, kmin=1.0, kmax=None, slope=0.0, odd=False):
    """Band-limited random mean-zero field used throughout the tests."""
    kmax = grid.dealias_index if kmax is None else kmax
    return random_field(seed, band_profile(kmin, kmax, slope), grid, y_antisymmetric=odd)


def single_mode(grid, lx, ly, amp=1.0 + 0.0j):
    """Real field ``2 Re(amp exp(i(lx x + ly y) kappa0))`` with ``lx > 0``."""
    c = np.zeros(grid.spectral_shape, complex)
    c[ly % grid.n, lx] = amp
    return SpectralField(grid, c, True)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
