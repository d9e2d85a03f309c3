import json
from pathlib import Path

import pytest

from sarmission.bayes import default_network
from sarmission.world import load_scenario

REPO = Path(__file__).resolve().parent.parent
SCENARIOS = REPO / "scenarios"


@pytest.fixture(scope="session")
def net():
    return default_network()


@pytest.fixture()
def rockies():
    return load_scenario(SCENARIOS / "rockies_lake.json")


@pytest.fixture()
def quarry():
    return load_scenario(SCENARIOS / "quarry_ponds.json")


@pytest.fixture()
def rockies_doc():
    return json.loads((SCENARIOS / "rockies_lake.json").read_text())


@pytest.fixture()
def quarry_doc():
    return json.loads((SCENARIOS / "quarry_ponds.json").read_text())
