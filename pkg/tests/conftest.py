import numpy as np
import pytest
from hypothesis import strategies as st

from qwtransfer.qstate import StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def normalized_pair(draw_pair):
    a, b = draw_pair
    norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    return a / norm, b / norm


_finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
_complex = st.builds(complex, _finite, _finite)

amplitude_pairs = (
    st.tuples(_complex, _complex)
    .filter(lambda p: abs(p[0]) ** 2 + abs(p[1]) ** 2 > 1e-3)
    .map(normalized_pair)
)

seeds = st.integers(0, 2**32 - 1)


def random_state(n, seed) -> StateVector:
    g = np.random.default_rng(seed)
    v = g.normal(size=2**n) + 1j * g.normal(size=2**n)
    return StateVector(v / np.linalg.norm(v))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
