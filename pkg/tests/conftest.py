"""
Shared fixtures: seeded generators, toy configs and a tiny model
"""
import numpy as np
import pytest

from hct_sod.models.config import ModelConfig, TrainConfig
from hct_sod.services.data.synthetic import synth_sample
from hct_sod.services.network.hct_model import HCTModel


@pytest.fixture(autouse=True)
def isolated_output(tmp_path, monkeypatch):
    """Keep logs and default run directories inside the test's temp dir"""
    monkeypatch.setenv("HCT_OUTPUT_DIR", str(tmp_path / "runs"))
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_cfg():
    return ModelConfig.toy()


@pytest.fixture
def small_cfg():
    """32 px input: lattices 8x8, 4x4 and 2x2"""
    return ModelConfig.toy(image_size=32)


@pytest.fixture
def train_cfg():
    return TrainConfig.toy()


@pytest.fixture
def small_model(small_cfg):
    return HCTModel(small_cfg)


@pytest.fixture
def small_sample(small_cfg):
    return synth_sample(3, 0, small_cfg.image_size)
