from pathlib import Path

import pytest

from ucpnet import load_net, normalize_net
from ucpnet.io import load_scenario, weight_bounds_from_document, _load_json

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def abcd_net():
    return load_net(FIXTURES / "abcd.ucp.json")


@pytest.fixture(scope="session")
def flip_nets():
    return (
        load_net(FIXTURES / "flip_ab.ucp.json"),
        load_net(FIXTURES / "flip_ba.ucp.json"),
    )


@pytest.fixture(scope="session")
def abcd_normalized(abcd_net):
    nnet, weights = normalize_net(abcd_net)
    bounds = weight_bounds_from_document(_load_json(FIXTURES / "abcd.normalized.json"))
    return nnet, weights, bounds


@pytest.fixture(scope="session")
def abcd_scenario():
    return load_scenario(FIXTURES / "abcd.scenario.json")
