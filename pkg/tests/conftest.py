import pytest

from rivetline.factory import Color, FactoryConfig, init_state
from rivetline.infomodel import local_plant


@pytest.fixture
def blue_state():
    return init_state(FactoryConfig(1, forced_colors=(Color.BLUE,)))


@pytest.fixture
def two_product_config():
    return FactoryConfig(2, seed=11, forced_colors=(Color.BLUE, Color.GREEN))


@pytest.fixture
def space():
    return local_plant(FactoryConfig(2, seed=3))


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda ln: int(ln.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
