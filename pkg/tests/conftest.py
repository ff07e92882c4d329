import numpy as np
import pytest
from hypothesis import settings, strategies as st

from fiberorient.tensors import pack

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def rotation(q):
    """Rotation matrix from a (not necessarily unit) quaternion."""
    w, x, y, z = np.asarray(q) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


@st.composite
def orientation_tensors(draw, min_gap=0.0):
    """Physical orientation tensors with eigenvalue gaps of at least ``min_gap``."""
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=3, max_size=3))
    lam = np.sort(np.array(w) / np.sum(w))[::-1]
    if min(lam[0] - lam[1], lam[1] - lam[2]) < min_gap:
        lam = np.array([0.6, 0.3, 0.1])
    q = draw(st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4)
             .filter(lambda v: np.linalg.norm(v) > 0.1))
    R = rotation(q)
    a = R @ np.diag(lam) @ R.T
    return 0.5 * (a + a.T)


@st.composite
def packed_states(draw, min_gap=0.0):
    return pack(draw(orientation_tensors(min_gap)))


def fd_directional(f, a, r, h=1e-6):
    """Central difference of ``f`` along basis direction ``r`` (0-based)."""
    from fiberorient.tensors import BASIS
    return (f(a + h * BASIS[r]) - f(a - h * BASIS[r])) / (2 * h)


@pytest.fixture
def a_generic():
    return np.array([[0.45, 0.08, -0.03], [0.08, 0.35, 0.05], [-0.03, 0.05, 0.20]])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
