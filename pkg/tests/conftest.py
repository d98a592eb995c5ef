"""
Shared fixtures: tiny networks and data so property tests stay fast.
"""
import os

import pytest

from anchorkit.config import TrainConfig
from anchorkit.data import synth_dataset
from anchorkit.models import build_encoder, build_roster_decoder

TINY_SHAPE = (3, 8, 8)
TINY_WIDTHS = (4, 4)
RUN_SLOW_ENV_VAR = "ANCHORKIT_RUN_SLOW"


def pytest_collection_modifyitems(config, items):
    if os.environ.get(RUN_SLOW_ENV_VAR) == "1":
        return
    skip = pytest.mark.skip(reason=f"desk-scale run; set {RUN_SLOW_ENV_VAR}=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def tiny_encoder():
    return build_encoder(TINY_SHAPE, 1.0 / 16.0, TINY_WIDTHS, seed=3)


@pytest.fixture
def tiny_decoders(tiny_encoder):
    return [build_roster_decoder(kind, tiny_encoder) for kind in ("attention", "conv", "resnet", "vgg")]


@pytest.fixture
def tiny_data():
    return synth_dataset(8, TINY_SHAPE[1], seed=5)


@pytest.fixture
def tiny_train_cfg():
    return TrainConfig(lr=1e-3, batch_size=4, snr_set_db=[5.0, 10.0], epochs_stage1=1, epochs_per_decoder=1,
                       iterative_cycles=2, epochs_simultaneous=1, seed=7)
