import numpy as np
import pytest

from mammotex import GrayImage


def random_image(rng, height, width, low=0, high=256):
    return GrayImage(rng.integers(low, high, size=(height, width), dtype=np.int64).astype(np.uint8))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
