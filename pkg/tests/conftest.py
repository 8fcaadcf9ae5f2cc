import math

import numpy as np
import pytest

from frqme.states import DensityMatrix

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_bloch(rng, pure=False):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return v if pure else v * rng.uniform() ** (1 / 3)


def random_state(rng, pure=False) -> DensityMatrix:
    return DensityMatrix.from_bloch(*random_bloch(rng, pure))


def random_unitary(rng) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """Brute-force Liouville matrix of rho -> -i[h, rho], built column by column."""
    cols = []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1
        rho = e.reshape(2, 2)
        cols.append((-1j * (h @ rho - rho @ h)).reshape(4))
    return np.array(cols).T


def taylor_expm(a: np.ndarray, terms: int = 60) -> np.ndarray:
    """Scaled Taylor series with repeated squaring; independent of scipy."""
    norm = np.max(np.sum(np.abs(a), axis=1))
    s = max(0, math.ceil(math.log2(norm)) + 1) if norm > 0 else 0
    b = a / 2**s
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out
