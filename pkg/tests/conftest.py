"""Shared fixtures: one synthetic dataset written once per session."""

import pytest

from scansim.harness import RunConfig, load_dataset
from scansim.synthetic import write_suite


@pytest.fixture(scope="session")
def suite_paths(tmp_path_factory):
    root = tmp_path_factory.mktemp("suite")
    manifest, scanpaths = write_suite(root)
    return manifest, scanpaths


@pytest.fixture(scope="session")
def suite_config():
    # the synthetic suite uses a half-size image so runs stay quick
    return RunConfig(image_width_px=512, image_height_px=384)


@pytest.fixture(scope="session")
def suite_dataset(suite_paths, suite_config):
    return load_dataset(*suite_paths, suite_config)
