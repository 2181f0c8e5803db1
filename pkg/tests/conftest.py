import pytest

from mmwcal.channel_model import Environment
from mmwcal.geometry import Antenna, MaterialSpec, SetupGeometry

FREQ = 73.5e9


@pytest.fixture
def wide():
    return Antenna("wide", 0.02, 15.0, 15.0, 20.0, 29.15)


@pytest.fixture
def narrow():
    return Antenna("narrow", 0.041, 7.0, 7.0, 27.0, 30.30)


@pytest.fixture
def glass():
    return MaterialSpec("clear_glass", 1.2, 7.72, 2.0, 2.0)


@pytest.fixture
def quiet_env():
    return Environment(noise_floor=-100.0, rng_seed=0)


def make_setup(antenna, distance, height=1.5, clearance=None, rx=None, mut=None, **kw):
    return SetupGeometry(
        frequency=FREQ,
        tr_separation=distance,
        tx_height=height,
        clearance_above_and_sides=height if clearance is None else clearance,
        tx_antenna=antenna,
        rx_antenna=rx or antenna,
        mut=mut,
        **kw,
    )


_ACCEPTANCE: dict = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    prev = _ACCEPTANCE.get(number, (title, True))
    _ACCEPTANCE[number] = (title, prev[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}")
