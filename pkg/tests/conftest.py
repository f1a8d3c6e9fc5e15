from functools import lru_cache

import numpy as np
import pytest

from matrixhydro.quantization import build_basis, build_quantized_laplacian, shr2mat


@lru_cache(maxsize=None)
def lap_and_basis(n):
    lap = build_quantized_laplacian(n)
    return lap, build_basis(lap)


def random_coeffs(n, elmax, seed, zero_momentum=False):
    rng = np.random.default_rng(seed)
    om = np.zeros(n * n)
    k = (min(elmax, n - 1) + 1) ** 2
    om[1:k] = rng.standard_normal(k - 1)
    if zero_momentum:
        om[1:4] = 0.0
    return om


def random_vorticity(n, seed, elmax=None):
    lap, basis = lap_and_basis(n)
    return shr2mat(random_coeffs(n, n - 1 if elmax is None else elmax, seed), basis)


def random_su(n, seed):
    """Random traceless skew-Hermitian matrix, independent of any basis."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = 0.5 * (a - a.conj().T)
    a -= np.trace(a) / n * np.eye(n)
    return a


@pytest.fixture(scope="session")
def lb16():
    return lap_and_basis(16)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
