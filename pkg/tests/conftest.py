import math

import numpy as np
import pytest
from hypothesis import strategies as st


def acute_triangle(rng, min_angle=0.15, scale=(0.05, 20.0)):
    """Random counterclockwise acute triangle with all angles in (min_angle, pi/2)."""
    while True:
        a, b = rng.uniform(min_angle, math.pi / 2, size=2)
        c = math.pi - a - b
        if min_angle < c < math.pi / 2 - 1e-3 and a < math.pi / 2 - 1e-3 and b < math.pi / 2 - 1e-3:
            break
    # vertices 0 and 1 on the x-axis, vertex 2 from the angles at 0 and 1 (law of sines)
    side = math.sin(b) / math.sin(c)
    v = np.array([[0.0, 0.0], [1.0, 0.0], [side * math.cos(a), side * math.sin(a)]])
    theta = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    s = math.exp(rng.uniform(math.log(scale[0]), math.log(scale[1])))
    v = s * v @ R.T + rng.uniform(-5, 5, size=2)
    return np.roll(v, int(rng.integers(0, 3)), axis=0)


@st.composite
def acute_triangles(draw, min_angle=0.15):
    seed = draw(st.integers(0, 2**32 - 1))
    return acute_triangle(np.random.default_rng(seed), min_angle)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def reference_triangle():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def equilateral():
    return np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
