"""Shared fixtures: packaged default scenario plus small fast variants."""

import json
from importlib import resources

import numpy as np
import pytest

from shadowtrack.harness import ScenarioConfig, build_model, generate_ground_truth


@pytest.fixture(scope="session")
def default_config_path():
    return str(resources.files("shadowtrack") / "data" / "default_scenario.json")


@pytest.fixture(scope="session")
def default_config(default_config_path):
    return ScenarioConfig.from_json(default_config_path)


@pytest.fixture(scope="session")
def default_geo(default_config):
    return build_model(default_config)


@pytest.fixture(scope="session")
def default_truth(default_config, default_geo):
    """(truths, los) for the packaged scenario."""
    return generate_ground_truth(default_config, default_geo)


@pytest.fixture(scope="session")
def small_config_path(tmp_path_factory, default_config_path):
    """The default scenario shrunk for fast tests (fewer particles/steps)."""
    with open(default_config_path) as fh:
        doc = json.load(fh)
    doc["filter_params"]["num_particles"] = 300
    doc["filter_params"]["num_birth"] = 300
    # ends at k=22, in LOS (the second shadow interval starts at k=24)
    doc["num_steps"] = 23
    doc["buildings_path"] = str(
        resources.files("shadowtrack") / "data" / "nyc_buildings.geojson"
    )
    path = tmp_path_factory.mktemp("cfg") / "small_scenario.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
