import dataclasses

import pytest

from beaconswarm.config import scenario_config
from beaconswarm.geometry import Arena, Disc
from beaconswarm.model import SimParams


def make_params(**overrides) -> SimParams:
    return dataclasses.replace(SimParams(), **overrides)


def plain_arena(width=10.0, height=10.0) -> Arena:
    """Empty test arena with the goal discs tucked into opposite corners."""
    return Arena(width, height, Disc((1.0, 1.0), 0.3), Disc((width - 1.0, height - 1.0), 0.3))


@pytest.fixture(scope="session")
def empty_scenario():
    return scenario_config("empty")


@pytest.fixture(scope="session")
def obstacle_scenario():
    return scenario_config("central-obstacle")
