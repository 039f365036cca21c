import numpy as np
import pytest

from lanepath.viewgeom import CameraModel, homography_from_camera

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def cam():
    return CameraModel()


@pytest.fixture(scope="session")
def h(cam):
    return homography_from_camera(cam)


@pytest.fixture
def blank():
    return np.zeros((480, 640))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
