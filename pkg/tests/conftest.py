"""Shared fixtures: a trained decoder and its in-range targets.

Training is deterministic and takes a few seconds, so the decoder is
built once per session and reused by the solver and acceptance tests.
"""

from __future__ import annotations

import numpy as np
import pytest

import ptychokit as pk
from ptychokit.dataset import synth_dataset
from ptychokit.generator import TrainConfig

DATASET_SEED = 424242
TRAIN_SEED = 11
DECODER_ARCH = [16, 128, 256]


@pytest.fixture(scope="session")
def shapes_data() -> np.ndarray:
    return synth_dataset(220, 16, DATASET_SEED)


@pytest.fixture(scope="session")
def trained_decoder(shapes_data):
    cfg = TrainConfig(epochs=200, batch_size=32, learning_rate=2e-3, seed=TRAIN_SEED)
    decoder, final_loss = pk.train_decoder(shapes_data[:200], DECODER_ARCH, cfg)
    assert final_loss < 0.01  # guards against a silently broken training run
    return decoder


@pytest.fixture(scope="session")
def in_range_targets(shapes_data, trained_decoder) -> np.ndarray:
    """First 10 held-out shape images projected into the decoder range."""
    held = shapes_data[200:]
    targets = [
        pk.project_to_range(trained_decoder, held[i], steps=1500,
                            learning_rate=0.05, seed=900 + i)[1]
        for i in range(10)
    ]
    return np.stack(targets)


@pytest.fixture(scope="session")
def geometry_16_3x3():
    return pk.build_camera_array(16, 3, 9, 0.65)
