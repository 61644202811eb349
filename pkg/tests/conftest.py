import numpy as np
import pytest

from videodeg.core import Clip
from videodeg.samples import NATURAL_IMAGES, natural_image, pan_clip


@pytest.fixture(scope="session")
def natural():
    """128x128 crops of the five bundled natural images."""
    crops = {
        "astronaut": (40, 150),
        "coffee": (100, 200),
        "chelsea": (60, 150),
        "rocket": (150, 250),
        "immunohistochemistry": (150, 150),
    }
    return {name: natural_image(name, 128, *crops[name]) for name in NATURAL_IMAGES}


@pytest.fixture(scope="session")
def astronaut(natural):
    return natural["astronaut"]


@pytest.fixture(scope="session")
def fixture_clip():
    return pan_clip()


def constant_frame(value, h=64, w=64):
    return np.full((h, w, 3), float(value))


def constant_clip(value, n=3, h=32, w=32):
    return Clip(np.full((n, h, w, 3), float(value)))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
